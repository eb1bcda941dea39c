#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hapsim/airframe.hpp"
#include "hapsim/channel.hpp"
#include "hapsim/topology.hpp"

namespace hapsim {

enum class Algorithm { kAmpEm, kSomp, kOracleLs };

struct DetectorConfig {
  Algorithm algorithm = Algorithm::kAmpEm;
  double activity_threshold = 0.5;     // declare active at the end
  double reliability_threshold = 0.9;  // cancel during SIC
  int max_sic_rounds = 8;
  int inner_iterations = 50;
  double damping = 0.7;
  double angular_keep_ratio = 0.15;
  bool enable_angular_refine = true;
  bool enable_sic = true;
  double somp_plateau_tol = 0.02;
  double convergence_tol = 1e-6;

  void validate() const;
};

/// Output of one spatial-domain estimation pass over a candidate dictionary.
struct ModuleAResult {
  Eigen::VectorXd lambda;              // per-candidate activity metric
  std::vector<Eigen::MatrixXcd> xhat;  // [P], n_cand x M channel estimates
  bool converged = true;
  int iterations = 0;
};

/// Joint activity detection / channel estimation over the multiple
/// measurement vectors of one anchor (all antennas of all cooperating HAPs,
/// all pilot subcarriers).
///
/// amp-em: damped approximate message passing under a Bernoulli-Gaussian
/// prior with one activity probability per device, per-(device, HAP-block)
/// slab variances and EM-learned noise variance. somp: simultaneous greedy
/// selection with joint least-squares re-projection, stopping when the
/// residual energy plateaus; lambda is then 0/1.
///
/// block_hap_ids gives the HAP id behind each column block of y; all
/// cross-column reductions combine per-block partial sums in ascending HAP
/// id order, which makes results invariant to block permutation.
ModuleAResult module_a_spatial(const std::vector<Eigen::MatrixXcd>& y,
                               const std::vector<Eigen::MatrixXcd>& s,
                               const std::vector<int>& block_hap_ids,
                               int n_antennas, const DetectorConfig& config);

/// Least-squares estimate restricted to the (known) active columns; zero
/// elsewhere. Verification oracle and genie baseline. Sets *rank_deficient
/// when a pilot submatrix loses rank and a ridge term was added.
std::vector<Eigen::MatrixXcd> oracle_ls(const std::vector<Eigen::MatrixXcd>& y,
                                        const std::vector<Eigen::MatrixXcd>& s,
                                        const std::vector<int>& active_cols,
                                        bool* rank_deficient = nullptr);

/// Angular-domain refinement: for each listed row and each HAP block,
/// transform the N_r segment to the angular domain, zero entries below
/// keep_ratio times the segment's max magnitude, transform back.
void module_b_angular_refine(std::vector<Eigen::MatrixXcd>& xhat,
                             const std::vector<int>& rows, int n_antennas,
                             double keep_ratio);

struct SicRoundLog {
  int round = 0;
  std::vector<int> cancelled;  // candidate indices cancelled this round
  double residual_energy = 0.0;
};

/// Mutable SIC state for one anchor: residual observations, the dictionary
/// mask split into remaining / detected, and accumulated estimates.
struct DetectionState {
  std::vector<Eigen::MatrixXcd> residual;  // [P], T x M
  std::vector<int> remaining;              // candidate indices, ascending
  std::vector<int> detected;
  std::vector<Eigen::MatrixXcd> xhat;      // [P], n_cand x M
  std::vector<SicRoundLog> rounds;
};

/// Cancels the reliable candidates from the residual and moves them from
/// the remaining mask to the detected set. reliable_rows holds one estimate
/// row per reliable candidate (same order), per subcarrier.
void module_c_sic(DetectionState& state,
                  const std::vector<Eigen::MatrixXcd>& s_cand,
                  const std::vector<int>& reliable,
                  const std::vector<Eigen::MatrixXcd>& reliable_rows);

struct AnchorDetection {
  int anchor = 0;
  std::vector<int> candidates;     // global device ids, ascending
  std::vector<int> block_hap_ids;  // cooperation-set member order
  Eigen::VectorXd lambda;          // per candidate
  std::vector<bool> verdict;       // per candidate
  std::vector<Eigen::MatrixXcd> xhat;  // [P], n_cand x M, zero off verdict
  std::vector<SicRoundLog> rounds;
  int rounds_used = 0;
  bool converged = true;
};

/// Full detection pipeline for one anchor: Module A on the residual over
/// the remaining dictionary, angular refinement of reliable devices,
/// SIC cancellation, repeated until no new reliable device appears.
AnchorDetection run_sic_anchor(const std::vector<Eigen::MatrixXcd>& y_anchor,
                               const PilotBook& pilots,
                               const std::vector<int>& candidates,
                               const CooperationSet& coop, int n_antennas,
                               const DetectorConfig& config);

/// Runs the SIC detector at every anchor over the full device dictionary.
std::vector<AnchorDetection> run_sic_detector(
    const ReceivedFrame& frame, const PilotBook& pilots,
    const std::vector<CooperationSet>& anchors, int n_antennas,
    const DetectorConfig& config);

/// Cellular baseline: every HAP detects independently over its own cell's
/// devices with its own antennas only; out-of-cell signals stay in the
/// observation as unmodelled interference.
std::vector<AnchorDetection> run_cellular_baseline(
    const ReceivedFrame& frame, const PilotBook& pilots,
    const NetworkTopology& topology, const DetectorConfig& config);

struct NetworkDetection {
  std::vector<bool> verdict;                        // per device
  std::vector<std::vector<Eigen::MatrixXcd>> hhat;  // [P][B], K x N_r
  int max_rounds = 0;
  bool converged = true;
};

/// Network-level fusion: each device takes verdict and estimates from the
/// anchor with the nearest nadir among those that had it in the dictionary
/// (ties broken by lowest anchor id).
NetworkDetection aggregate_network_verdict(
    const std::vector<AnchorDetection>& anchors,
    const NetworkTopology& topology, int p_pilot, int n_antennas);

}  // namespace hapsim
