#include "riskdecode/mlp.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace riskdecode {
namespace {

constexpr double kVarianceFloor = 1e-6;

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double InverseSoftplus(double y) {
  return y > 30.0 ? y : std::log(std::expm1(y));
}

Eigen::MatrixXd Hidden(const MlpWeights& w, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd z = x * w.w1;
  z.rowwise() += w.b1.transpose();
  return z.cwiseMax(0.0);
}

Eigen::MatrixXd SelectRows(const Eigen::MatrixXd& m, const std::vector<int>& rows) {
  Eigen::MatrixXd out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = m.row(rows[i]);
  return out;
}

Eigen::VectorXd SelectRows(const Eigen::VectorXd& v, const std::vector<int>& rows) {
  Eigen::VectorXd out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out(i) = v(rows[i]);
  return out;
}

double Rmse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() == 0) return 0.0;
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

// Output-layer error signal for a batch: column 0 is dL/dmean, column 1 is
// dL/d(raw variance). Returns the loss.
double OutputDelta(const Eigen::MatrixXd& out, const Eigen::VectorXd& y,
                   LossMode mode, Eigen::MatrixXd* delta) {
  const Eigen::Index n = out.rows();
  delta->setZero(n, 2);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = out(i, 0) - y(i);
    if (mode == LossMode::kMseMean) {
      loss += r * r;
      (*delta)(i, 0) = 2.0 * r / n;
    } else {
      const double var = Softplus(out(i, 1)) + kVarianceFloor;
      loss += 0.5 * std::log(var) + 0.5 * r * r / var;
      (*delta)(i, 0) = r / var / n;
      const double dvar = 0.5 / var - 0.5 * r * r / (var * var);
      (*delta)(i, 1) = dvar * Sigmoid(out(i, 1)) / n;
    }
  }
  return loss / n;
}

struct Adam {
  double lr;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  MlpGradients m, v;

  explicit Adam(double learning_rate, const MlpWeights& w) : lr(learning_rate) {
    m = {Eigen::MatrixXd::Zero(w.w1.rows(), w.w1.cols()),
         Eigen::VectorXd::Zero(w.b1.size()),
         Eigen::MatrixXd::Zero(w.w2.rows(), w.w2.cols()),
         Eigen::VectorXd::Zero(w.b2.size())};
    v = m;
  }

  template <typename P, typename G>
  void Update(P& param, const G& grad, G& mom, G& var, double c1, double c2) {
    mom = beta1 * mom + (1.0 - beta1) * grad;
    var = beta2 * var + (1.0 - beta2) * grad.cwiseProduct(grad);
    param.array() -= lr * (mom.array() / c1) / ((var.array() / c2).sqrt() + eps);
  }

  void Apply(MlpWeights& w, const MlpGradients& g) {
    ++step;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    Update(w.w1, g.w1, m.w1, v.w1, c1, c2);
    Update(w.b1, g.b1, m.b1, v.b1, c1, c2);
    Update(w.w2, g.w2, m.w2, v.w2, c1, c2);
    Update(w.b2, g.b2, m.b2, v.b2, c1, c2);
  }
};

void ApplyStep(MlpWeights& w, const MlpGradients& g, OptimizerKind kind, Adam& adam) {
  if (kind == OptimizerKind::kAdam) {
    adam.Apply(w, g);
    return;
  }
  w.w1 -= adam.lr * g.w1;
  w.b1 -= adam.lr * g.b1;
  w.w2 -= adam.lr * g.w2;
  w.b2 -= adam.lr * g.b2;
}

void CheckFinite(double loss, int epoch, const char* phase) {
  if (!std::isfinite(loss)) {
    throw std::runtime_error(std::string("non-finite ") + phase +
                             " loss at epoch " + std::to_string(epoch));
  }
}

}  // namespace

std::string_view LossModeName(LossMode mode) {
  return mode == LossMode::kMseMean ? "mse_mean" : "gaussian_nll";
}

LossMode ParseLossMode(std::string_view name) {
  if (name == "mse_mean") return LossMode::kMseMean;
  if (name == "gaussian_nll") return LossMode::kGaussianNll;
  throw std::invalid_argument("unknown loss mode: " + std::string(name));
}

std::string_view OptimizerName(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "sgd";
}

OptimizerKind ParseOptimizer(std::string_view name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  throw std::invalid_argument("unknown optimizer: " + std::string(name));
}

void MlpConfig::Validate() const {
  if (input_dim <= 0 || hidden <= 0) {
    throw std::invalid_argument("MLP dimensions must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw std::invalid_argument("dropout_rate must be in [0, 1)");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train_fraction must be in (0, 1)");
  }
  if (epochs < 0 || !(learning_rate > 0.0)) {
    throw std::invalid_argument("epochs must be >= 0 and learning_rate > 0");
  }
}

double Softplus(double x) { return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0); }

MlpWeights MlpInit(const MlpConfig& config) {
  config.Validate();
  Rng rng(config.seed);
  MlpWeights w;
  w.seed = config.seed;
  const int d = config.input_dim;
  const int h = config.hidden;
  w.w1.resize(d, h);
  w.w2.resize(h, 2);
  const double s1 = std::sqrt(2.0 / d);
  const double s2 = std::sqrt(2.0 / h);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < h; ++j) w.w1(i, j) = s1 * rng.Normal();
  }
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < 2; ++j) w.w2(i, j) = s2 * rng.Normal();
  }
  w.b1 = Eigen::VectorXd::Zero(h);
  w.b2 = Eigen::VectorXd::Zero(2);
  return w;
}

MlpOutput MlpForward(const MlpWeights& weights, const Eigen::VectorXd& x,
                     bool train_mode, Rng* rng, double dropout_rate) {
  if (x.size() != weights.input_dim()) {
    throw std::invalid_argument("input has " + std::to_string(x.size()) +
                                " features, network expects " +
                                std::to_string(weights.input_dim()));
  }
  Eigen::VectorXd hidden =
      (weights.w1.transpose() * x + weights.b1).cwiseMax(0.0);
  if (train_mode) {
    if (rng == nullptr) throw std::invalid_argument("train mode needs an rng");
    const double keep = 1.0 - dropout_rate;
    for (Eigen::Index j = 0; j < hidden.size(); ++j) {
      hidden(j) = rng->Uniform() < dropout_rate ? 0.0 : hidden(j) / keep;
    }
  }
  const Eigen::VectorXd out = weights.w2.transpose() * hidden + weights.b2;
  return {out(0), Softplus(out(1))};
}

Eigen::MatrixXd MlpForwardBatch(const MlpWeights& weights, const Eigen::MatrixXd& x) {
  if (x.cols() != weights.input_dim()) {
    throw std::invalid_argument("feature matrix has " + std::to_string(x.cols()) +
                                " columns, network expects " +
                                std::to_string(weights.input_dim()));
  }
  Eigen::MatrixXd out = Hidden(weights, x) * weights.w2;
  out.rowwise() += weights.b2.transpose();
  for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, 1) = Softplus(out(i, 1));
  return out;
}

Eigen::VectorXd MlpMeanBatch(const MlpWeights& weights, const Eigen::MatrixXd& x) {
  if (x.cols() != weights.input_dim()) {
    throw std::invalid_argument("feature matrix has " + std::to_string(x.cols()) +
                                " columns, network expects " +
                                std::to_string(weights.input_dim()));
  }
  Eigen::VectorXd mean = Hidden(weights, x) * weights.w2.col(0);
  mean.array() += weights.b2(0);
  return mean;
}

double MlpLossAndGradient(const MlpWeights& w, const Eigen::MatrixXd& x,
                          const Eigen::VectorXd& y, LossMode mode,
                          MlpGradients* grad) {
  Eigen::MatrixXd z = x * w.w1;
  z.rowwise() += w.b1.transpose();
  const Eigen::MatrixXd a = z.cwiseMax(0.0);
  Eigen::MatrixXd out = a * w.w2;
  out.rowwise() += w.b2.transpose();
  Eigen::MatrixXd delta;
  const double loss = OutputDelta(out, y, mode, &delta);
  if (grad != nullptr) {
    grad->w2 = a.transpose() * delta;
    grad->b2 = delta.colwise().sum().transpose();
    Eigen::MatrixXd dz = (delta * w.w2.transpose()).cwiseProduct(
        (z.array() > 0.0).cast<double>().matrix());
    grad->w1 = x.transpose() * dz;
    grad->b1 = dz.colwise().sum().transpose();
  }
  return loss;
}

double GradientCheck(const MlpWeights& weights, const Eigen::MatrixXd& x,
                     const Eigen::VectorXd& y, LossMode mode, bool corrupt) {
  if (x.rows() == 0) throw std::invalid_argument("gradient check needs a batch");
  MlpGradients g;
  MlpLossAndGradient(weights, x, y, mode, &g);
  if (corrupt) g.w1 *= 1.5;

  constexpr double kStep = 1e-5;
  MlpWeights probe = weights;
  double worst = 0.0;
  auto check = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + kStep;
    const double up = MlpLossAndGradient(probe, x, y, mode, nullptr);
    param = saved - kStep;
    const double down = MlpLossAndGradient(probe, x, y, mode, nullptr);
    param = saved;
    const double numeric = (up - down) / (2.0 * kStep);
    const double scale = std::max(std::abs(analytic) + std::abs(numeric), 1e-6);
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
  };
  for (Eigen::Index i = 0; i < probe.w1.size(); ++i) check(probe.w1.data()[i], g.w1.data()[i]);
  for (Eigen::Index i = 0; i < probe.b1.size(); ++i) check(probe.b1(i), g.b1(i));
  for (Eigen::Index i = 0; i < probe.w2.size(); ++i) check(probe.w2.data()[i], g.w2.data()[i]);
  for (Eigen::Index i = 0; i < probe.b2.size(); ++i) check(probe.b2(i), g.b2(i));
  return worst;
}

RowSplit SplitRows(int n, double train_fraction, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("need at least 2 rows to split");
  Rng rng(seed ^ 0x5DEECE66DULL);
  std::vector<int> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  rng.Shuffle(rows);
  const int n_train =
      std::clamp(static_cast<int>(std::lround(train_fraction * n)), 1, n - 1);
  return {std::vector<int>(rows.begin(), rows.begin() + n_train),
          std::vector<int>(rows.begin() + n_train, rows.end())};
}

TrainedMlp MlpTrain(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                    const MlpConfig& config) {
  config.Validate();
  if (features.rows() != targets.size()) {
    throw std::invalid_argument("feature rows and target count differ");
  }
  if (features.cols() != config.input_dim) {
    throw std::invalid_argument("feature matrix has " +
                                std::to_string(features.cols()) +
                                " columns, config expects " +
                                std::to_string(config.input_dim));
  }
  if (features.rows() < 2) throw std::invalid_argument("need at least 2 rows");
  for (Eigen::Index i = 0; i < targets.size(); ++i) {
    if (!(targets(i) >= 0.0 && targets(i) <= 10.0)) {
      throw std::invalid_argument("targets must lie in [0, 10]");
    }
  }

  TrainedMlp result;
  TrainReport& report = result.report;
  RowSplit split = SplitRows(static_cast<int>(features.rows()), config.train_fraction,
                             config.seed);
  report.train_rows = std::move(split.train);
  report.val_rows = std::move(split.val);
  const int n_train = static_cast<int>(report.train_rows.size());
  Rng rng(config.seed ^ 0x2545F4914F6CDD1DULL);
  const Eigen::MatrixXd x_train = SelectRows(features, report.train_rows);
  const Eigen::VectorXd y_train = SelectRows(targets, report.train_rows);
  const Eigen::MatrixXd x_val = SelectRows(features, report.val_rows);
  const Eigen::VectorXd y_val = SelectRows(targets, report.val_rows);

  MlpWeights w = MlpInit(config);
  w.b2(0) = y_train.mean();
  const int batch = config.batch_size <= 0 ? n_train : std::min(config.batch_size, n_train);
  const double keep = 1.0 - config.dropout_rate;

  Adam adam(config.learning_rate, w);
  std::vector<int> order(n_train);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.Shuffle(order);
    for (int start = 0; start < n_train; start += batch) {
      const int len = std::min(batch, n_train - start);
      Eigen::MatrixXd xb(len, features.cols());
      Eigen::VectorXd yb(len);
      for (int i = 0; i < len; ++i) {
        xb.row(i) = x_train.row(order[start + i]);
        yb(i) = y_train(order[start + i]);
      }
      Eigen::MatrixXd z = xb * w.w1;
      z.rowwise() += w.b1.transpose();
      Eigen::MatrixXd mask(len, w.hidden());
      for (Eigen::Index k = 0; k < mask.size(); ++k) {
        mask.data()[k] = rng.Uniform() < config.dropout_rate ? 0.0 : 1.0 / keep;
      }
      const Eigen::MatrixXd a = z.cwiseMax(0.0).cwiseProduct(mask);
      Eigen::MatrixXd out = a * w.w2;
      out.rowwise() += w.b2.transpose();
      Eigen::MatrixXd delta;
      const double loss = OutputDelta(out, yb, config.loss_mode, &delta);
      CheckFinite(loss, epoch, "training");
      MlpGradients g;
      g.w2 = a.transpose() * delta;
      g.b2 = delta.colwise().sum().transpose();
      const Eigen::MatrixXd dz = (delta * w.w2.transpose())
                                     .cwiseProduct(mask)
                                     .cwiseProduct((z.array() > 0.0).cast<double>().matrix());
      g.w1 = xb.transpose() * dz;
      g.b1 = dz.colwise().sum().transpose();
      ApplyStep(w, g, config.optimizer, adam);
    }
    const double train_rmse = Rmse(MlpMeanBatch(w, x_train), y_train);
    const double val_rmse = Rmse(MlpMeanBatch(w, x_val), y_val);
    CheckFinite(train_rmse, epoch, "training");
    report.train_rmse.push_back(train_rmse);
    report.val_rmse.push_back(val_rmse);
  }

  if (config.loss_mode == LossMode::kMseMean) {
    // Variance head: Gaussian likelihood on frozen hidden features and mean.
    const Eigen::MatrixXd hidden = Hidden(w, x_train);
    Eigen::VectorXd mean = hidden * w.w2.col(0);
    mean.array() += w.b2(0);
    const Eigen::VectorXd resid2 = (mean - y_train).array().square();
    w.b2(1) = InverseSoftplus(std::max(resid2.mean(), 1e-3));
    w.w2.col(1).setZero();

    Eigen::VectorXd wv = w.w2.col(1);
    double bv = w.b2(1);
    Eigen::VectorXd m_w = Eigen::VectorXd::Zero(wv.size()), v_w = m_w;
    double m_b = 0.0, v_b = 0.0;
    long step = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      rng.Shuffle(order);
      for (int start = 0; start < n_train; start += batch) {
        const int len = std::min(batch, n_train - start);
        Eigen::VectorXd gw = Eigen::VectorXd::Zero(wv.size());
        double gb = 0.0;
        double loss = 0.0;
        for (int i = 0; i < len; ++i) {
          const int r = order[start + i];
          const double raw = hidden.row(r).dot(wv) + bv;
          const double var = Softplus(raw) + kVarianceFloor;
          loss += 0.5 * std::log(var) + 0.5 * resid2(r) / var;
          const double d = (0.5 / var - 0.5 * resid2(r) / (var * var)) * Sigmoid(raw) / len;
          gw += d * hidden.row(r).transpose();
          gb += d;
        }
        CheckFinite(loss, epoch, "variance");
        ++step;
        if (config.optimizer == OptimizerKind::kAdam) {
          const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(step));
          const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(step));
          m_w = adam.beta1 * m_w + (1.0 - adam.beta1) * gw;
          v_w = adam.beta2 * v_w + (1.0 - adam.beta2) * gw.cwiseProduct(gw);
          m_b = adam.beta1 * m_b + (1.0 - adam.beta1) * gb;
          v_b = adam.beta2 * v_b + (1.0 - adam.beta2) * gb * gb;
          wv.array() -= config.learning_rate * (m_w.array() / c1) /
                        ((v_w.array() / c2).sqrt() + adam.eps);
          bv -= config.learning_rate * (m_b / c1) / (std::sqrt(v_b / c2) + adam.eps);
        } else {
          wv -= config.learning_rate * gw;
          bv -= config.learning_rate * gb;
        }
      }
    }
    w.w2.col(1) = wv;
    w.b2(1) = bv;
  }

  report.final_train_rmse = report.train_rmse.empty() ? 0.0 : report.train_rmse.back();
  report.final_val_rmse = report.val_rmse.empty() ? 0.0 : report.val_rmse.back();
  result.weights = std::move(w);
  return result;
}

MlpPrediction MlpPredict(const MlpWeights& weights, const Eigen::MatrixXd& features) {
  const Eigen::MatrixXd out = MlpForwardBatch(weights, features);
  MlpPrediction p;
  p.mean.resize(out.rows());
  p.raw_mean.resize(out.rows());
  p.variance.resize(out.rows());
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    p.raw_mean[i] = out(i, 0);
    p.mean[i] = std::clamp(out(i, 0), 0.0, 10.0);
    p.variance[i] = out(i, 1);
  }
  return p;
}

}  // namespace riskdecode
