#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace riskdecode {

// Maps an N x D matrix of inputs (one per row) to N outputs.
using BatchModel = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

constexpr int kMaxExactShapDim = 15;

// Model output on the composite input that takes features in `subset` from
// `x` and the rest from `baseline`.
double ShapValueFunction(const BatchModel& model, const Eigen::VectorXd& x,
                         const std::vector<bool>& subset,
                         const Eigen::VectorXd& baseline);

struct ShapRow {
  double base = 0.0;        // f(baseline)
  Eigen::VectorXd phi;      // per feature
  Eigen::VectorXd std_err;  // sampled mode only; zeros otherwise
};

// Exact Shapley values by enumerating all 2^D subsets. Throws
// std::invalid_argument for D > 15.
ShapRow ShapExact(const BatchModel& model, const Eigen::VectorXd& x,
                  const Eigen::VectorXd& baseline);

// Permutation-sampling estimate with antithetic pairs: each drawn order is
// also walked in reverse. max(1, n_permutations / 2) pairs are drawn; the
// standard error is taken over pair averages.
ShapRow ShapSampled(const BatchModel& model, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& baseline, int n_permutations,
                    std::uint64_t seed);

struct FeatureImportance {
  std::string feature;
  double mean_abs_phi = 0.0;
  int rank = 0;  // 1 = most important
};

// Ranks features by mean |phi| over all rows of `phi` (frames x features);
// ties keep the manifest order.
std::vector<FeatureImportance> GlobalImportance(const Eigen::MatrixXd& phi,
                                                const std::vector<std::string>& names);

struct LocalHeatmap {
  Eigen::MatrixXd phi;             // frames x features
  std::vector<double> predicted;   // base + row sum
  double base = 0.0;
};

LocalHeatmap MakeLocalHeatmap(double base, const Eigen::MatrixXd& phi);

}  // namespace riskdecode
