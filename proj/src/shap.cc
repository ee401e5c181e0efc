#include "riskdecode/shap.h"

#include <algorithm>
#include <cmath>
#include <bit>
#include <numeric>
#include <stdexcept>

#include "riskdecode/random.h"

namespace riskdecode {
namespace {

void CheckShapes(const Eigen::VectorXd& x, const Eigen::VectorXd& baseline) {
  if (x.size() != baseline.size() || x.size() == 0) {
    throw std::invalid_argument("input and baseline must have the same nonzero size");
  }
}

}  // namespace

double ShapValueFunction(const BatchModel& model, const Eigen::VectorXd& x,
                         const std::vector<bool>& subset,
                         const Eigen::VectorXd& baseline) {
  CheckShapes(x, baseline);
  if (static_cast<Eigen::Index>(subset.size()) != x.size()) {
    throw std::invalid_argument("subset mask size differs from feature count");
  }
  Eigen::MatrixXd row(1, x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) row(0, i) = subset[i] ? x(i) : baseline(i);
  return model(row)(0);
}

ShapRow ShapExact(const BatchModel& model, const Eigen::VectorXd& x,
                  const Eigen::VectorXd& baseline) {
  CheckShapes(x, baseline);
  const int d = static_cast<int>(x.size());
  if (d > kMaxExactShapDim) {
    throw std::invalid_argument("exact Shapley enumeration supports at most " +
                                std::to_string(kMaxExactShapDim) +
                                " features; use the sampled estimator for " +
                                std::to_string(d));
  }
  const std::size_t subsets = std::size_t{1} << d;
  Eigen::MatrixXd inputs(subsets, d);
  for (std::size_t s = 0; s < subsets; ++s) {
    for (int i = 0; i < d; ++i) inputs(s, i) = (s >> i) & 1 ? x(i) : baseline(i);
  }
  const Eigen::VectorXd values = model(inputs);

  // weight[k] = k! (d - k - 1)! / d!
  std::vector<double> weight(d);
  for (int k = 0; k < d; ++k) {
    weight[k] = std::exp(std::lgamma(k + 1.0) + std::lgamma(d - k + 0.0) -
                         std::lgamma(d + 1.0));
  }
  ShapRow row;
  row.base = values(0);
  row.phi = Eigen::VectorXd::Zero(d);
  row.std_err = Eigen::VectorXd::Zero(d);
  for (std::size_t s = 0; s < subsets; ++s) {
    const int size = std::popcount(s);
    for (int i = 0; i < d; ++i) {
      if ((s >> i) & 1) continue;
      row.phi(i) += weight[size] * (values(s | (std::size_t{1} << i)) - values(s));
    }
  }
  return row;
}

ShapRow ShapSampled(const BatchModel& model, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& baseline, int n_permutations,
                    std::uint64_t seed) {
  CheckShapes(x, baseline);
  if (n_permutations < 1) throw std::invalid_argument("need at least one permutation");
  const int d = static_cast<int>(x.size());
  const int pairs = std::max(1, n_permutations / 2);
  Rng rng(seed);

  // Each walk starts at the baseline and switches one feature per step.
  std::vector<std::vector<int>> orders;
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  for (int p = 0; p < pairs; ++p) {
    rng.Shuffle(order);
    orders.push_back(order);
    orders.emplace_back(order.rbegin(), order.rend());
  }
  Eigen::MatrixXd inputs(orders.size() * (d + 1), d);
  for (std::size_t w = 0; w < orders.size(); ++w) {
    Eigen::VectorXd cur = baseline;
    const std::size_t base_row = w * (d + 1);
    inputs.row(base_row) = cur.transpose();
    for (int step = 0; step < d; ++step) {
      cur(orders[w][step]) = x(orders[w][step]);
      inputs.row(base_row + step + 1) = cur.transpose();
    }
  }
  const Eigen::VectorXd values = model(inputs);

  Eigen::MatrixXd pair_phi = Eigen::MatrixXd::Zero(pairs, d);
  for (std::size_t w = 0; w < orders.size(); ++w) {
    const std::size_t base_row = w * (d + 1);
    for (int step = 0; step < d; ++step) {
      pair_phi(w / 2, orders[w][step]) +=
          0.5 * (values(base_row + step + 1) - values(base_row + step));
    }
  }
  ShapRow row;
  row.base = values(0);
  row.phi = pair_phi.colwise().mean().transpose();
  row.std_err = Eigen::VectorXd::Zero(d);
  if (pairs > 1) {
    for (int i = 0; i < d; ++i) {
      const double var = (pair_phi.col(i).array() - row.phi(i)).square().sum() / (pairs - 1);
      row.std_err(i) = std::sqrt(var / pairs);
    }
  }
  return row;
}

std::vector<FeatureImportance> GlobalImportance(const Eigen::MatrixXd& phi,
                                                const std::vector<std::string>& names) {
  if (phi.rows() == 0) throw std::invalid_argument("no attributions to rank");
  if (static_cast<Eigen::Index>(names.size()) != phi.cols()) {
    throw std::invalid_argument("feature names do not match attribution columns");
  }
  std::vector<FeatureImportance> out(names.size());
  for (std::size_t j = 0; j < names.size(); ++j) {
    out[j].feature = names[j];
    out[j].mean_abs_phi = phi.col(j).cwiseAbs().mean();
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.mean_abs_phi > b.mean_abs_phi;
  });
  for (std::size_t r = 0; r < out.size(); ++r) out[r].rank = static_cast<int>(r) + 1;
  return out;
}

LocalHeatmap MakeLocalHeatmap(double base, const Eigen::MatrixXd& phi) {
  LocalHeatmap h;
  h.base = base;
  h.phi = phi;
  h.predicted.resize(phi.rows());
  for (Eigen::Index k = 0; k < phi.rows(); ++k) h.predicted[k] = base + phi.row(k).sum();
  return h;
}

}  // namespace riskdecode
