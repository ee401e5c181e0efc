#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "doctest.h"
#include "oracles.h"
#include "riskdecode/mlp.h"
#include "riskdecode/shap.h"

using namespace riskdecode;

namespace {

BatchModel Rowwise(std::function<double(const Eigen::VectorXd&)> f) {
  return [f](const Eigen::MatrixXd& x) {
    Eigen::VectorXd out(x.rows());
    for (int i = 0; i < x.rows(); ++i) out[i] = f(x.row(i).transpose());
    return out;
  };
}

double Interacting(const Eigen::VectorXd& z) {
  double v = 0.3 * z[0] * z[1] + std::sin(z[2]) - z[3] * z[3] * 0.2;
  for (int i = 4; i < z.size(); ++i) v += (i % 3 - 1) * z[i] + 0.1 * z[i] * z[i - 1];
  return std::max(v, -1.0);
}

Eigen::VectorXd RandomVector(int d, Rng& rng) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = rng.Normal();
  return v;
}

}  // namespace

TEST_CASE("value function") {
  const BatchModel f = Rowwise(Interacting);
  Eigen::VectorXd x(4);
  x << 1, 2, 3, 4;
  const Eigen::VectorXd base = Eigen::VectorXd::Zero(4);
  CHECK(ShapValueFunction(f, x, {true, true, true, true}, base) == Interacting(x));
  CHECK(ShapValueFunction(f, x, {false, false, false, false}, base) == Interacting(base));
  for (int mask = 0; mask < 16; ++mask) {
    std::vector<bool> s = {bool(mask & 1), bool(mask & 2), bool(mask & 4), bool(mask & 8)};
    CHECK(ShapValueFunction(f, base, s, base) == Interacting(base));
  }
}

TEST_CASE("exact attributions") {
  const BatchModel lin = Rowwise([](const Eigen::VectorXd& z) { return 3 * z[0] + 2 * z[1]; });
  ShapRow r = ShapExact(lin, Eigen::Vector2d(1, 1), Eigen::Vector2d(0, 0));
  CHECK(r.phi[0] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(r.phi[1] == doctest::Approx(2.0).epsilon(1e-14));

  Rng rng(17);
  const BatchModel f = Rowwise(Interacting);
  for (int d : {3, 5, 7}) {
    const Eigen::VectorXd x = RandomVector(d, rng);
    const Eigen::VectorXd base = RandomVector(d, rng);
    r = ShapExact(f, x, base);
    CHECK(std::abs(r.base + r.phi.sum() - Interacting(x)) <= 1e-9);
    const Eigen::VectorXd want = oracle::ShapleyByPermutations(Interacting, x, base);
    CHECK((r.phi - want).cwiseAbs().maxCoeff() <= 1e-9);
  }
  // Missingness.
  Eigen::VectorXd x = RandomVector(6, rng);
  const Eigen::VectorXd base = RandomVector(6, rng);
  x[2] = base[2];
  CHECK(ShapExact(f, x, base).phi[2] == 0.0);
  CHECK_THROWS_AS(ShapExact(f, Eigen::VectorXd::Zero(16), Eigen::VectorXd::Zero(16)),
                  std::invalid_argument);
}

TEST_CASE("consistency on a constructed pair") {
  // g adds a term that only ever raises feature 0's marginal contribution.
  auto f = [](const Eigen::VectorXd& z) { return z[0] + z[1] * z[2]; };
  auto g = [](const Eigen::VectorXd& z) { return z[0] + z[1] * z[2] + 0.5 * z[0] * z[1]; };
  const Eigen::Vector3d x(1, 1, 1);
  const Eigen::Vector3d base(0, 0, 0);
  const double pf = ShapExact(Rowwise(f), x, base).phi[0];
  const double pg = ShapExact(Rowwise(g), x, base).phi[0];
  CHECK(pg >= pf);
  CHECK(pg == doctest::Approx(1.25));
}

TEST_CASE("sampled attributions") {
  const BatchModel lin = Rowwise([](const Eigen::VectorXd& z) {
    return 3 * z[0] - 2 * z[1] + 0.5 * z[2] + z[3];
  });
  Eigen::VectorXd x(4);
  x << 1, 2, 3, 4;
  const Eigen::VectorXd base = Eigen::VectorXd::Zero(4);
  for (int n : {1, 2, 7}) {
    const ShapRow r = ShapSampled(lin, x, base, n, 9);
    CHECK(r.phi[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(r.phi[1] == doctest::Approx(-4.0).epsilon(1e-12));
    CHECK(r.phi[3] == doctest::Approx(4.0).epsilon(1e-12));
  }

  Rng rng(21);
  const BatchModel f = Rowwise(Interacting);
  const Eigen::VectorXd xs = RandomVector(10, rng);
  const Eigen::VectorXd bs = RandomVector(10, rng);
  const ShapRow exact = ShapExact(f, xs, bs);
  const ShapRow a = ShapSampled(f, xs, bs, 2000, 4);
  const ShapRow b = ShapSampled(f, xs, bs, 2000, 4);
  CHECK(a.phi == b.phi);
  CHECK((a.phi - exact.phi).cwiseAbs().maxCoeff() <= 0.05 * exact.phi.cwiseAbs().maxCoeff());
  CHECK(a.std_err.minCoeff() >= 0.0);
  CHECK_THROWS_AS(ShapSampled(f, xs, bs, 0, 4), std::invalid_argument);
}

TEST_CASE("attributions of a trained-style network") {
  MlpConfig c;
  c.input_dim = 8;
  c.hidden = 40;
  c.seed = 12;
  const MlpWeights w = MlpInit(c);
  const BatchModel net = [&w](const Eigen::MatrixXd& x) { return MlpMeanBatch(w, x); };
  Rng rng(1);
  const Eigen::VectorXd x = RandomVector(8, rng);
  const Eigen::VectorXd base = Eigen::VectorXd::Zero(8);
  const ShapRow r = ShapExact(net, x, base);
  CHECK(std::abs(r.base + r.phi.sum() - MlpForward(w, x).mean) <= 1e-9);
}

TEST_CASE("global ranking and heatmaps") {
  Eigen::MatrixXd phi(3, 3);
  phi << 0.5, -2, 0, -0.7, 1.5, 0, 0.2, -1, 0;
  const auto rank = GlobalImportance(phi, {"a", "b", "zero"});
  REQUIRE(rank.size() == 3);
  CHECK(rank[0].feature == "b");
  CHECK(rank[1].feature == "a");
  CHECK(rank[2].feature == "zero");
  CHECK(rank[0].rank == 1);
  const auto twice = GlobalImportance(2 * phi, {"a", "b", "zero"});
  for (int i = 0; i < 3; ++i) CHECK(twice[i].feature == rank[i].feature);
  CHECK_THROWS_AS(GlobalImportance(phi, {"a", "b"}), std::invalid_argument);

  const LocalHeatmap h = MakeLocalHeatmap(1.5, phi);
  CHECK(h.predicted.size() == 3);
  CHECK(h.predicted[0] == doctest::Approx(1.5 + 0.5 - 2));
  const LocalHeatmap flat = MakeLocalHeatmap(2.0, Eigen::MatrixXd::Zero(4, 3));
  for (double p : flat.predicted) CHECK(p == 2.0);
}
