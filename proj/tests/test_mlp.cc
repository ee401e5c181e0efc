#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "riskdecode/mlp.h"

using namespace riskdecode;

namespace {

struct Toy {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

// y = 5 + 0.8 x0 - 0.5 x1 + 0.3 x2 on standard-normal inputs.
Toy LinearToy(int rows, int dim, std::uint64_t seed) {
  Rng rng(seed);
  Toy t{Eigen::MatrixXd(rows, dim), Eigen::VectorXd(rows)};
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < dim; ++j) t.x(i, j) = rng.Normal();
    t.y[i] = 5 + 0.8 * t.x(i, 0) - 0.5 * t.x(i, 1) + 0.3 * t.x(i, 2);
  }
  return t;
}

MlpConfig Small(int dim, int hidden) {
  MlpConfig c;
  c.input_dim = dim;
  c.hidden = hidden;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("initialisation") {
  MlpConfig c = Small(11, 500);
  const MlpWeights a = MlpInit(c);
  const MlpWeights b = MlpInit(c);
  CHECK(a.w1.rows() == 11);
  CHECK(a.w1.cols() == 500);
  CHECK(a.w1 == b.w1);
  CHECK(a.w2 == b.w2);
  CHECK(a.b1.isZero());
  c.seed = 6;
  CHECK(MlpInit(c).w1 != a.w1);
  // Variance 2 / fan_in.
  const double var = a.w1.squaredNorm() / static_cast<double>(a.w1.size());
  CHECK(var == doctest::Approx(2.0 / 11).epsilon(0.1));
}

TEST_CASE("forward pass") {
  MlpWeights w = MlpInit(Small(3, 20));
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(3, -1, 1);
  const MlpOutput e1 = MlpForward(w, x);
  const MlpOutput e2 = MlpForward(w, x);
  CHECK(e1.mean == e2.mean);
  CHECK(e1.variance >= 0.0);
  CHECK_THROWS_AS(MlpForward(w, Eigen::VectorXd::Zero(4)), std::invalid_argument);

  MlpWeights zero = w;
  zero.w1.setZero();
  zero.b1.setZero();
  zero.w2.setZero();
  zero.b2.setZero();
  const MlpOutput z = MlpForward(zero, x);
  CHECK(z.mean == 0.0);
  CHECK(z.variance == Softplus(0.0));

  // One hidden unit with a negative pre-activation adds nothing.
  MlpWeights relu = zero;
  relu.w1(0, 0) = 1.0;
  relu.w2(0, 0) = 1.0;
  Eigen::VectorXd neg = Eigen::VectorXd::Zero(3);
  neg[0] = -2.0;
  CHECK(MlpForward(relu, neg).mean == 0.0);
  neg[0] = 2.0;
  CHECK(MlpForward(relu, neg).mean == 2.0);

  Eigen::MatrixXd rows(2, 3);
  rows.row(0) = x.transpose();
  rows.row(1) = x.transpose();
  const MlpPrediction p = MlpPredict(w, rows);
  CHECK(p.mean.size() == 2);
  CHECK(p.raw_mean[0] == p.raw_mean[1]);
  CHECK(p.raw_mean[0] == doctest::Approx(e1.mean).epsilon(1e-12));
  for (double m : p.mean) CHECK((m >= 0.0 && m <= 10.0));
}

TEST_CASE("gradients match finite differences") {
  const Toy t = LinearToy(16, 5, 3);
  MlpWeights w = MlpInit(Small(5, 20));
  w.b1.setConstant(0.05);
  CHECK(GradientCheck(w, t.x, t.y, LossMode::kMseMean) < 1e-4);
  CHECK(GradientCheck(w, t.x, t.y, LossMode::kGaussianNll) < 1e-4);
  CHECK(GradientCheck(w, t.x, t.y, LossMode::kMseMean, true) > 1e-2);

  MlpGradients g;
  const Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(4, 5);
  MlpLossAndGradient(w, zeros, Eigen::VectorXd::Ones(4), LossMode::kMseMean, &g);
  CHECK(g.w1.isZero());
}

TEST_CASE("overfits a small linear set") {
  const Toy t = LinearToy(32, 3, 11);
  // Full width, no dropout: a memorisation check, not a generalisation one.
  MlpConfig c = Small(3, 500);
  c.dropout_rate = 0.0;
  c.optimizer = OptimizerKind::kAdam;
  c.batch_size = 64;
  c.epochs = 2000;
  c.train_fraction = 0.8;
  const TrainedMlp m = MlpTrain(t.x, t.y, c);
  CHECK(m.report.final_train_rmse < 0.02);
  CHECK(m.report.train_rmse.size() == 2000);
  CHECK(m.report.train_rows.size() + m.report.val_rows.size() == 32);
}

TEST_CASE("training is deterministic") {
  const Toy t = LinearToy(200, 4, 8);
  MlpConfig c = Small(4, 32);
  c.epochs = 30;
  const TrainedMlp a = MlpTrain(t.x, t.y, c);
  const TrainedMlp b = MlpTrain(t.x, t.y, c);
  CHECK(a.weights.w1 == b.weights.w1);
  CHECK(a.weights.b2 == b.weights.b2);
  CHECK(a.report.val_rmse == b.report.val_rmse);
  c.loss_mode = LossMode::kGaussianNll;
  c.optimizer = OptimizerKind::kSgd;
  c.batch_size = 0;
  const TrainedMlp d = MlpTrain(t.x, t.y, c);
  for (double v : d.report.train_rmse) CHECK(std::isfinite(v));
}

TEST_CASE("row split") {
  const RowSplit s = SplitRows(100, 0.8, 4);
  CHECK(s.train.size() == 80);
  CHECK(s.val.size() == 20);
  std::vector<bool> seen(100, false);
  for (int r : s.train) seen[r] = true;
  for (int r : s.val) seen[r] = true;
  CHECK(std::count(seen.begin(), seen.end(), true) == 100);
  CHECK(SplitRows(100, 0.8, 4).train == s.train);
}

TEST_CASE("config validation and names") {
  MlpConfig c = Small(0, 10);
  CHECK_THROWS_AS(c.Validate(), std::invalid_argument);
  c = Small(3, 10);
  c.dropout_rate = 1.0;
  CHECK_THROWS_AS(c.Validate(), std::invalid_argument);
  CHECK(ParseLossMode("gaussian_nll") == LossMode::kGaussianNll);
  CHECK(OptimizerName(OptimizerKind::kSgd) == "sgd");
  CHECK_THROWS(ParseOptimizer("rmsprop"));
}
