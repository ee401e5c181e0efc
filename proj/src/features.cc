#include "riskdecode/features.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace riskdecode {
namespace {

constexpr double kMinGap = 0.1;

// Sign of the offset from subject to neighbour; a zero offset counts as +1.
double OffsetSign(double offset) { return offset < 0.0 ? -1.0 : 1.0; }

const VehicleState& NeighbourAt(const Frame& frame, int index) {
  if (index < 0 || index >= static_cast<int>(frame.neighbours.size())) {
    throw std::out_of_range("frame has no neighbour with index " +
                            std::to_string(index));
  }
  return frame.neighbours[index];
}

enum Feature {
  kVsX, kVsY, kAsX, kAsY, kVnX, kVnY, kAnX, kAnY,
  kVnbX, kVnbY, kAnbX, kAnbY,
  kDx, kDy, kDvX, kDvY, kDaX, kDaY,
  kDxB, kDyB, kDvXB, kDvYB, kDaXB, kDaYB,
  kDvSuX, kDvSuY, kDvNuX, kDvNuY, kDvNbuX, kDvNbuY,
  kDracUX, kDracUY, kDracUBX, kDracUBY,
  kDracRX, kDracRY, kDracRBX, kDracRBY,
  kFeatureCount,
};

const std::unordered_map<std::string, int>& VocabularyIndex() {
  static const auto* index = [] {
    auto* m = new std::unordered_map<std::string, int>();
    const auto& names = FeatureVocabulary();
    for (int i = 0; i < static_cast<int>(names.size()); ++i) (*m)[names[i]] = i;
    return m;
  }();
  return *index;
}

}  // namespace

RelativeKinematics ComputeRelativeKinematics(const Frame& frame,
                                             int neighbour_index) {
  const VehicleState& s = frame.subject;
  const VehicleState& n = NeighbourAt(frame, neighbour_index);
  const double sx = OffsetSign(n.x - s.x);
  const double sy = OffsetSign(n.y - s.y);
  RelativeKinematics r;
  r.dx = std::abs(n.x - s.x);
  r.dy = std::abs(n.y - s.y);
  r.dv_x = -sx * (n.vx - s.vx);
  r.dv_y = -sy * (n.vy - s.vy);
  r.da_x = -sx * (n.ax - s.ax);
  r.da_y = -sy * (n.ay - s.ay);
  return r;
}

Vec2 UncertainVelocity(const VehicleState& self, const VehicleState& other,
                       double sigma_x, double sigma_y) {
  if (sigma_x < 0.0 || sigma_y < 0.0) {
    throw std::invalid_argument("uncertainty sigmas must be >= 0");
  }
  const double ox = other.x - self.x;
  const double oy = other.y - self.y;
  const double norm = std::hypot(ox, oy);
  if (norm == 0.0) {
    throw std::invalid_argument(
        "uncertain velocity undefined for coincident vehicle centres");
  }
  return {sigma_x * ox / norm, sigma_y * oy / norm};
}

double Drac(double v_s, double v_n, double gap, double gap_rate) {
  if (gap_rate >= 0.0) return 0.0;
  const double dv = v_s - v_n;
  return dv * dv / std::max(gap, kMinGap);
}

DracComponents ComputeDracComponents(const Frame& frame, int neighbour_index,
                                     const UncertaintySigmas& sigmas) {
  const VehicleState& s = frame.subject;
  const VehicleState& n = NeighbourAt(frame, neighbour_index);
  const double sx = OffsetSign(n.x - s.x);
  const double sy = OffsetSign(n.y - s.y);
  const double gap_x =
      std::max(0.0, std::abs(n.x - s.x) - 0.5 * (s.length + n.length));
  const double gap_y =
      std::max(0.0, std::abs(n.y - s.y) - 0.5 * (s.width + n.width));

  const Vec2 us = UncertainVelocity(s, n, sigmas.subject_x, sigmas.subject_y);
  const Vec2 un = UncertainVelocity(n, s, sigmas.neighbour_x, sigmas.neighbour_y);

  DracComponents d;
  d.real_x = Drac(s.vx, n.vx, gap_x, sx * (n.vx - s.vx));
  d.real_y = Drac(s.vy, n.vy, gap_y, sy * (n.vy - s.vy));
  d.uncertain_x = Drac(us.x, un.x, gap_x, sx * (un.x - us.x));
  d.uncertain_y = Drac(us.y, un.y, gap_y, sy * (un.y - us.y));
  return d;
}

const std::vector<std::string>& FeatureVocabulary() {
  static const std::vector<std::string> names = {
      "v_s_x",     "v_s_y",     "a_s_x",      "a_s_y",      "v_n_x",
      "v_n_y",     "a_n_x",     "a_n_y",      "v_nb_x",     "v_nb_y",
      "a_nb_x",    "a_nb_y",    "dx",         "dy",         "dv_x",
      "dv_y",      "da_x",      "da_y",       "dx_b",       "dy_b",
      "dv_x_b",    "dv_y_b",    "da_x_b",     "da_y_b",     "dv_s_u_x",
      "dv_s_u_y",  "dv_n_u_x",  "dv_n_u_y",   "dv_nb_u_x",  "dv_nb_u_y",
      "drac_u_x",  "drac_u_y",  "drac_u_b_x", "drac_u_b_y", "drac_R_x",
      "drac_R_y",  "drac_R_b_x", "drac_R_b_y",
  };
  return names;
}

bool IsFollowerFeature(std::string_view name) {
  return name.starts_with("v_nb") || name.starts_with("a_nb") ||
         name.starts_with("dv_nb") || name.ends_with("_b") ||
         name.find("_b_") != std::string_view::npos;
}

FeatureManifest DefaultManifest(Scenario scenario) {
  static const std::vector<std::string> kLeading = {
      "v_s_x", "v_s_y", "a_s_x", "a_s_y", "v_n_x", "v_n_y", "a_n_x", "a_n_y",
      "dx", "dy", "dv_x", "dv_y", "da_x", "da_y",
      "dv_s_u_x", "dv_s_u_y", "dv_n_u_x", "dv_n_u_y",
      "drac_u_x", "drac_u_y", "drac_R_x", "drac_R_y"};
  auto without = [](std::vector<std::string> names,
                    std::initializer_list<std::string_view> drop) {
    std::erase_if(names, [&](const std::string& n) {
      return std::find(drop.begin(), drop.end(), n) != drop.end();
    });
    return names;
  };

  FeatureManifest m;
  m.group = std::string(NetworkGroup(scenario));
  switch (scenario) {
    case Scenario::kHB:
      m.names = {"v_s_x", "a_s_x", "v_n_x", "a_n_x", "dx", "dv_x", "da_x",
                 "dv_s_u_x", "dv_n_u_x", "drac_u_x", "drac_R_x"};
      break;
    case Scenario::kMB:
      m.names = without(kLeading, {"da_y"});
      break;
    case Scenario::kSVM:
      m.names = without(kLeading, {"da_y"});
      for (const char* f : {"v_nb_x", "v_nb_y", "a_nb_x", "dx_b", "dy_b",
                            "dv_x_b", "dv_y_b", "da_x_b", "dv_nb_u_x",
                            "drac_u_b_x", "drac_R_b_x"}) {
        m.names.emplace_back(f);
      }
      break;
    default:
      m.names = without(kLeading, {"da_x", "da_y"});
      break;
  }
  return m;
}

void ValidateManifest(const FeatureManifest& manifest) {
  if (manifest.names.empty()) {
    throw std::invalid_argument("manifest " + manifest.group + " is empty");
  }
  const auto& index = VocabularyIndex();
  for (const auto& name : manifest.names) {
    if (!index.contains(name)) {
      throw std::invalid_argument("unknown feature in manifest " +
                                  manifest.group + ": " + name);
    }
  }
}

std::vector<double> FrameFeatures(const Frame& frame,
                                  const UncertaintySigmas& sigmas) {
  std::vector<double> f(kFeatureCount, std::numeric_limits<double>::quiet_NaN());
  const VehicleState& s = frame.subject;
  f[kVsX] = s.vx;
  f[kVsY] = s.vy;
  f[kAsX] = s.ax;
  f[kAsY] = s.ay;

  const VehicleState& n = NeighbourAt(frame, 0);
  f[kVnX] = n.vx;
  f[kVnY] = n.vy;
  f[kAnX] = n.ax;
  f[kAnY] = n.ay;
  const RelativeKinematics rel = ComputeRelativeKinematics(frame, 0);
  f[kDx] = rel.dx;
  f[kDy] = rel.dy;
  f[kDvX] = rel.dv_x;
  f[kDvY] = rel.dv_y;
  f[kDaX] = rel.da_x;
  f[kDaY] = rel.da_y;
  const Vec2 us = UncertainVelocity(s, n, sigmas.subject_x, sigmas.subject_y);
  const Vec2 un = UncertainVelocity(n, s, sigmas.neighbour_x, sigmas.neighbour_y);
  f[kDvSuX] = us.x;
  f[kDvSuY] = us.y;
  f[kDvNuX] = un.x;
  f[kDvNuY] = un.y;
  const DracComponents drac = ComputeDracComponents(frame, 0, sigmas);
  f[kDracUX] = drac.uncertain_x;
  f[kDracUY] = drac.uncertain_y;
  f[kDracRX] = drac.real_x;
  f[kDracRY] = drac.real_y;

  if (frame.neighbours.size() > 1) {
    const VehicleState& b = frame.neighbours[1];
    f[kVnbX] = b.vx;
    f[kVnbY] = b.vy;
    f[kAnbX] = b.ax;
    f[kAnbY] = b.ay;
    const RelativeKinematics rb = ComputeRelativeKinematics(frame, 1);
    f[kDxB] = rb.dx;
    f[kDyB] = rb.dy;
    f[kDvXB] = rb.dv_x;
    f[kDvYB] = rb.dv_y;
    f[kDaXB] = rb.da_x;
    f[kDaYB] = rb.da_y;
    const Vec2 ub = UncertainVelocity(b, s, sigmas.neighbour_x, sigmas.neighbour_y);
    f[kDvNbuX] = ub.x;
    f[kDvNbuY] = ub.y;
    const DracComponents db = ComputeDracComponents(frame, 1, sigmas);
    f[kDracUBX] = db.uncertain_x;
    f[kDracUBY] = db.uncertain_y;
    f[kDracRBX] = db.real_x;
    f[kDracRBY] = db.real_y;
  }
  return f;
}

Eigen::MatrixXd BuildFeatures(const EventTrajectory& trajectory,
                              const FeatureManifest& manifest,
                              const UncertaintySigmas& sigmas) {
  ValidateManifest(manifest);
  const auto& index = VocabularyIndex();
  const bool has_follower =
      !trajectory.frames.empty() && trajectory.frames.front().neighbours.size() > 1;
  std::vector<int> columns;
  for (const auto& name : manifest.names) {
    if (IsFollowerFeature(name) && !has_follower) {
      throw std::invalid_argument("feature " + name +
                                  " needs a follower vehicle (SVM only)");
    }
    columns.push_back(index.at(name));
  }
  Eigen::MatrixXd out(trajectory.frames.size(), columns.size());
  for (std::size_t k = 0; k < trajectory.frames.size(); ++k) {
    const std::vector<double> f = FrameFeatures(trajectory.frames[k], sigmas);
    for (std::size_t j = 0; j < columns.size(); ++j) out(k, j) = f[columns[j]];
  }
  return out;
}

NormStats ZScoreFit(const Eigen::MatrixXd& matrix,
                    const std::vector<std::string>& names) {
  if (static_cast<Eigen::Index>(names.size()) != matrix.cols()) {
    throw std::invalid_argument("name count does not match column count");
  }
  if (matrix.rows() == 0) throw std::invalid_argument("cannot fit on zero rows");
  NormStats stats;
  stats.names = names;
  stats.mean = matrix.colwise().mean();
  stats.std.resize(matrix.cols());
  for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
    const double var =
        (matrix.col(j).array() - stats.mean(j)).square().mean();
    const double sd = std::sqrt(var);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(stats.mean(j))))) {
      throw std::invalid_argument("zero-variance feature column: " + names[j]);
    }
    stats.std(j) = sd;
  }
  return stats;
}

Eigen::MatrixXd ZScoreApply(const Eigen::MatrixXd& matrix, const NormStats& stats) {
  if (matrix.cols() != stats.mean.size()) {
    throw std::invalid_argument("matrix has " + std::to_string(matrix.cols()) +
                                " columns, stats expect " +
                                std::to_string(stats.mean.size()));
  }
  return (matrix.rowwise() - stats.mean.transpose()).array().rowwise() /
         stats.std.transpose().array();
}

}  // namespace riskdecode
