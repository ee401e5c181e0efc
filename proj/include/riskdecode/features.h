#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "riskdecode/scenario.h"

namespace riskdecode {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// Spread of the "uncertain velocity" added to each vehicle, per axis (m/s).
struct UncertaintySigmas {
  double subject_x = 0.3;
  double subject_y = 0.3;
  double neighbour_x = 0.3;
  double neighbour_y = 0.3;
};

// Offsets are centre-to-centre magnitudes. Relative velocity and
// acceleration are positive when the gap on that axis is shrinking.
struct RelativeKinematics {
  double dx = 0.0;
  double dy = 0.0;
  double dv_x = 0.0;
  double dv_y = 0.0;
  double da_x = 0.0;
  double da_y = 0.0;
};

// Throws std::out_of_range for a missing neighbour.
RelativeKinematics ComputeRelativeKinematics(const Frame& frame,
                                             int neighbour_index);

// Per-axis sigma times the unit vector from `self` toward `other`.
// Throws std::invalid_argument when the centres coincide or a sigma < 0.
Vec2 UncertainVelocity(const VehicleState& self, const VehicleState& other,
                       double sigma_x, double sigma_y);

// Deceleration rate to avoid a crash: (v_s - v_n)^2 / max(gap, 0.1) while the
// gap is closing, 0 otherwise.
double Drac(double v_s, double v_n, double gap, double gap_rate);

struct DracComponents {
  double real_x = 0.0;
  double real_y = 0.0;
  double uncertain_x = 0.0;
  double uncertain_y = 0.0;
};

DracComponents ComputeDracComponents(const Frame& frame, int neighbour_index,
                                     const UncertaintySigmas& sigmas);

// Every feature name the extractor knows, in canonical order. Names ending in
// "_b" (and v_nb/a_nb/dv_nb) refer to the SVM follower.
const std::vector<std::string>& FeatureVocabulary();
bool IsFollowerFeature(std::string_view name);

struct FeatureManifest {
  std::string group;  // network group, e.g. "MB" or "LC_normal"
  std::vector<std::string> names;
  int dim() const { return static_cast<int>(names.size()); }
};

FeatureManifest DefaultManifest(Scenario scenario);
// Throws std::invalid_argument for names outside the vocabulary.
void ValidateManifest(const FeatureManifest& manifest);

// All vocabulary features of one frame; follower entries are NaN when the
// frame has no follower.
std::vector<double> FrameFeatures(const Frame& frame,
                                  const UncertaintySigmas& sigmas);

// T x D matrix of the manifest's features. Rejects follower features when
// the trajectory has no follower.
Eigen::MatrixXd BuildFeatures(const EventTrajectory& trajectory,
                              const FeatureManifest& manifest,
                              const UncertaintySigmas& sigmas);

struct NormStats {
  std::vector<std::string> names;
  Eigen::VectorXd mean;
  Eigen::VectorXd std;  // population standard deviation
};

// Throws std::invalid_argument naming the first zero-variance column.
NormStats ZScoreFit(const Eigen::MatrixXd& matrix,
                    const std::vector<std::string>& names);
Eigen::MatrixXd ZScoreApply(const Eigen::MatrixXd& matrix, const NormStats& stats);

}  // namespace riskdecode
