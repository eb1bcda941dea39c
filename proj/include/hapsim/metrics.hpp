#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "hapsim/channel.hpp"
#include "hapsim/topology.hpp"

namespace hapsim {

/// Per-trial outcome. aer = (missed + false_alarms) / K; NMSE sums the
/// squared estimation error of truly active devices over all subcarriers
/// and HAPs, normalised by the true channel energy (missed devices count
/// with a zero estimate, false alarms are excluded).
struct TrialMetrics {
  double aer = 0.0;
  std::optional<double> aer_center;
  std::optional<double> aer_edge;
  std::optional<double> nmse_linear;
  std::optional<double> nmse_db;
  int missed = 0;
  int false_alarms = 0;
  double pilot_duration_s = 0.0;
  int detector_rounds = 0;
};

struct AerResult {
  double aer = 0.0;
  int missed = 0;
  int false_alarms = 0;
};

AerResult activity_error_rate(const ActivityPattern& truth,
                              const std::vector<bool>& verdict);

std::optional<double> channel_nmse(
    const std::vector<std::vector<Eigen::MatrixXcd>>& truth,
    const std::vector<std::vector<Eigen::MatrixXcd>>& estimate,
    const ActivityPattern& activity);

/// AER restricted to the center / edge device populations. Empty regions
/// yield an absent value.
std::pair<std::optional<double>, std::optional<double>> region_breakdown(
    const ActivityPattern& truth, const std::vector<bool>& verdict,
    const NetworkTopology& topology, double center_fraction);

struct AggregateStat {
  double mean = 0.0;
  double half_width = 0.0;  // 1.96 * s / sqrt(n)
  int n = 0;
  bool small_sample = false;  // n <= 30
};

AggregateStat monte_carlo_aggregate(std::span<const double> values);

}  // namespace hapsim
