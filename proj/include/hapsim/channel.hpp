#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "hapsim/rng.hpp"
#include "hapsim/topology.hpp"

namespace hapsim {

/// Which of the K devices transmit in this frame.
struct ActivityPattern {
  int k_total = 0;
  std::vector<int> active;  // sorted, distinct ids in [0, k_total)

  int k_active() const { return static_cast<int>(active.size()); }
  std::vector<bool> mask() const;
};

/// Linear large-scale power gains, one per (device, HAP) link.
struct LargeScaleGains {
  Eigen::MatrixXd g;  // K x B
};

struct PathComponent {
  std::complex<double> gain;
  double delay_s = 0.0;
  double angle_rad = 0.0;  // arrival angle from array broadside
};

/// Small-scale multipath, drawn per (active device, HAP) link.
struct MultipathSet {
  double rician_kappa = 10.0;
  // paths[a][b]: path list for the a-th *active* device towards HAP b
  std::vector<std::vector<std::vector<PathComponent>>> paths;
};

/// Activity-masked spatial-domain channel matrices, one K x N_r block per
/// (pilot subcarrier, HAP). Rows of inactive devices are identically zero,
/// so the nonzero-row support is common across all blocks.
struct AccessChannelSet {
  int k_total = 0;
  int n_antennas = 0;
  std::vector<double> subcarrier_freqs;       // baseband offsets, Hz
  ActivityPattern activity;
  std::vector<std::vector<Eigen::MatrixXcd>> h;  // [P][B], each K x N_r
};

/// Uniform K_a-subset of [0, k) without replacement.
ActivityPattern draw_activity(int k, int k_a, RandomStream& rng);

/// Free-space path gain (c / (4 pi d f))^2.
double free_space_gain(double distance_m, double carrier_freq_hz);

/// Free-space gains for every (device, HAP) link of the topology.
LargeScaleGains compute_large_scale_gains(const NetworkTopology& topology,
                                          double carrier_freq_hz);

/// L-path Rician draw for one link. Path 0 is the LoS component: geometric
/// arrival angle, delay distance/c, uniform phase, power kappa/(kappa+1)
/// (all of it when l_paths == 1). NLoS paths share the remaining power with
/// complex Gaussian gains, angles uniform over (-pi/2, pi/2) and delays
/// uniform over [0, max_delay].
std::vector<PathComponent> draw_multipath(const Point2D& device,
                                          const HapNode& hap, int l_paths,
                                          double kappa, double max_delay_s,
                                          RandomStream& rng);

MultipathSet draw_multipath_set(const NetworkTopology& topology,
                                const ActivityPattern& activity, int l_paths,
                                double kappa, double max_delay_s,
                                RandomStream& rng);

/// Half-wavelength ULA steering vector, a_n = exp(j pi n sin(theta)).
Eigen::VectorXcd steering_vector(double angle_rad, int n_antennas);

/// Builds the per-(subcarrier, HAP) channel blocks from activity, gains and
/// multipath: active row = sqrt(g) * sum_l gain_l e^{-j 2 pi f tau_l} a(theta_l).
AccessChannelSet assemble_access_channels(
    const ActivityPattern& activity, const LargeScaleGains& gains,
    const MultipathSet& multipath, const std::vector<double>& subcarrier_freqs,
    int n_antennas);

/// Unitary DFT matrix of size n (cached per size).
const Eigen::MatrixXcd& dft_matrix(int n);

/// Right-multiplies each row block by the unitary DFT (spatial -> angular).
Eigen::MatrixXcd to_angular(const Eigen::MatrixXcd& spatial);
Eigen::MatrixXcd from_angular(const Eigen::MatrixXcd& angular);

AccessChannelSet to_angular(const AccessChannelSet& channels);

}  // namespace hapsim
