#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "riskdecode/random.h"

namespace riskdecode {

enum class LossMode { kMseMean, kGaussianNll };
enum class OptimizerKind { kAdam, kSgd };

std::string_view LossModeName(LossMode mode);
LossMode ParseLossMode(std::string_view name);
std::string_view OptimizerName(OptimizerKind kind);
OptimizerKind ParseOptimizer(std::string_view name);

struct MlpConfig {
  int input_dim = 0;
  int hidden = 500;
  double dropout_rate = 0.1;  // on the hidden layer feeding the output; 0 disables
  int epochs = 200;
  double learning_rate = 0.001;
  double train_fraction = 0.8;
  std::uint64_t seed = 1;
  LossMode loss_mode = LossMode::kMseMean;
  OptimizerKind optimizer = OptimizerKind::kSgd;
  int batch_size = 0;  // <= 0 means full batch

  void Validate() const;
};

// Input -> ReLU hidden -> (mean, raw variance). Rows of w1 index inputs.
struct MlpWeights {
  Eigen::MatrixXd w1;  // D x H
  Eigen::VectorXd b1;  // H
  Eigen::MatrixXd w2;  // H x 2
  Eigen::VectorXd b2;  // 2
  std::uint64_t seed = 0;

  int input_dim() const { return static_cast<int>(w1.rows()); }
  int hidden() const { return static_cast<int>(w1.cols()); }
};

struct TrainReport {
  std::vector<double> train_rmse;  // per epoch, mean head, eval mode
  std::vector<double> val_rmse;
  double final_train_rmse = 0.0;
  double final_val_rmse = 0.0;
  std::vector<int> train_rows;
  std::vector<int> val_rows;
};

// Smooth positive map for the variance head.
double Softplus(double x);

// He-style normal initialisation (variance 2 / fan_in), zero biases.
MlpWeights MlpInit(const MlpConfig& config);

struct MlpOutput {
  double mean = 0.0;
  double variance = 0.0;
};

// In train mode an inverted dropout mask drawn from `rng` is applied to the
// hidden layer; eval mode is deterministic and ignores `rng`.
MlpOutput MlpForward(const MlpWeights& weights, const Eigen::VectorXd& x,
                     bool train_mode = false, Rng* rng = nullptr,
                     double dropout_rate = 0.1);

// N x 2 matrix of (mean, variance) for the rows of `x`, eval mode.
Eigen::MatrixXd MlpForwardBatch(const MlpWeights& weights, const Eigen::MatrixXd& x);

// Mean-head output for each row; cheaper than the full batch forward.
Eigen::VectorXd MlpMeanBatch(const MlpWeights& weights, const Eigen::MatrixXd& x);

struct MlpGradients {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
};

// Loss (mean over rows) and its gradient without dropout. kMseMean touches
// only the mean head; kGaussianNll trains both heads.
double MlpLossAndGradient(const MlpWeights& weights, const Eigen::MatrixXd& x,
                          const Eigen::VectorXd& y, LossMode mode,
                          MlpGradients* grad);

// Largest relative difference between analytic and central-difference
// gradients (step 1e-5) over every parameter. `corrupt` perturbs the
// analytic gradient, for checking that the check can fail.
double GradientCheck(const MlpWeights& weights, const Eigen::MatrixXd& x,
                     const Eigen::VectorXd& y, LossMode mode, bool corrupt = false);

struct RowSplit {
  std::vector<int> train;
  std::vector<int> val;
};

// Seeded shuffle of 0..n-1; the first round(train_fraction * n) rows train.
// MlpTrain uses this split with its config seed.
RowSplit SplitRows(int n, double train_fraction, std::uint64_t seed);

struct TrainedMlp {
  MlpWeights weights;
  TrainReport report;
};

// Seeded 80/20 row split, (mini)batch training of the mean head (or both heads
// under kGaussianNll), then, for kMseMean, a second pass that fits the
// variance head by Gaussian likelihood with everything else frozen.
// Throws std::runtime_error on a non-finite loss, naming the epoch.
TrainedMlp MlpTrain(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                    const MlpConfig& config);

struct MlpPrediction {
  std::vector<double> mean;      // clamped to [0, 10]
  std::vector<double> raw_mean;
  std::vector<double> variance;
};

MlpPrediction MlpPredict(const MlpWeights& weights, const Eigen::MatrixXd& features);

}  // namespace riskdecode
