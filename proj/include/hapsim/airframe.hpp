#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hapsim/channel.hpp"
#include "hapsim/rng.hpp"
#include "hapsim/topology.hpp"

namespace hapsim {

/// Grant-free frame parameters. The pilot phase uses short OFDM symbols
/// (DFT length p_dft = n_cp) while the data phase keeps the long DFT n_dft;
/// only the durations of the data phase enter any computation here.
struct FrameConfig {
  int n_cp = 128;
  int p_dft = 128;
  int n_dft = 4096;
  double bandwidth_hz = 10e6;
  int t_p = 40;      // pilot symbols
  int p_pilot = 4;   // pilot subcarriers used by the detector
  double carrier_freq_hz = 2e9;

  void validate() const;

  /// True when n_dft sits below 8x p_dft; the configuration is accepted but
  /// flagged, since the short-DFT latency advantage shrinks.
  bool narrow_dft_ratio() const { return n_dft < 8 * p_dft; }

  /// Baseband offsets of the pilot subcarriers, evenly spread over the band.
  std::vector<double> pilot_subcarrier_freqs() const;

  /// Default multipath delay spread: the cyclic prefix duration.
  double default_max_delay_s() const { return n_cp / bandwidth_hz; }
};

/// Non-orthogonal pilot matrices, one T_p x K block per pilot subcarrier.
/// Entries are i.i.d. CN(0, 1/T_p) so every column has unit mean energy.
struct PilotBook {
  std::vector<Eigen::MatrixXcd> s;  // [P], each T_p x K
};

/// Per-HAP pilot-phase observations. Noise enters once per HAP antenna;
/// anchors that share a HAP see the same forwarded samples, so anchor
/// observations are column concatenations of these blocks.
struct ReceivedFrame {
  std::vector<std::vector<Eigen::MatrixXcd>> y_hap;  // [P][B], each T_p x N_r
  double noise_var = 0.0;

  int n_subcarriers() const { return static_cast<int>(y_hap.size()); }
};

PilotBook generate_pilots(int k, int t_p, int p_pilot, bool shared_matrix,
                          RandomStream& rng);

ReceivedFrame synthesize_received(const PilotBook& pilots,
                                  const AccessChannelSet& channels,
                                  double noise_var, RandomStream& rng);

/// Assembles the observation of one anchor for one subcarrier:
/// T_p x (N_co * N_r), column blocks in cooperation-set member order.
Eigen::MatrixXcd anchor_observation(const ReceivedFrame& frame,
                                    const CooperationSet& coop, int p);

double pilot_phase_duration(const FrameConfig& frame);
double conventional_pilot_phase_duration(const FrameConfig& frame);

/// Noise variance such that the median over (device, HAP) links of
/// g * N_r / noise_var equals the target linear SNR.
double calibrate_noise(double target_snr_db, const LargeScaleGains& gains,
                       int n_antennas);

}  // namespace hapsim
