#include "hapsim/airframe.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hapsim/errors.hpp"

namespace hapsim {

void FrameConfig::validate() const {
  if (n_cp < 1) throw ConfigError("n_cp must be >= 1");
  if (p_dft != n_cp)
    throw ConfigError("pilot-phase DFT length p_dft must equal n_cp (got " +
                      std::to_string(p_dft) + " vs " + std::to_string(n_cp) +
                      ")");
  if (n_dft < 4 * p_dft)
    throw ConfigError("n_dft must be at least 4x p_dft, got " +
                      std::to_string(n_dft));
  if (bandwidth_hz <= 0.0) throw ConfigError("bandwidth_hz must be > 0");
  if (t_p < 0) throw ConfigError("t_p must be >= 0");
  if (p_pilot < 1 || p_pilot > p_dft)
    throw ConfigError("p_pilot must lie in [1, p_dft]");
  if (carrier_freq_hz <= 0.0) throw ConfigError("carrier_freq_hz must be > 0");
}

std::vector<double> FrameConfig::pilot_subcarrier_freqs() const {
  std::vector<double> freqs(p_pilot);
  const double df = bandwidth_hz / p_dft;
  for (int i = 0; i < p_pilot; ++i) {
    const int idx = static_cast<int>((static_cast<long long>(i) * p_dft) /
                                     p_pilot);
    freqs[i] = (idx + 0.5) * df - bandwidth_hz / 2.0;
  }
  return freqs;
}

PilotBook generate_pilots(int k, int t_p, int p_pilot, bool shared_matrix,
                          RandomStream& rng) {
  if (t_p < 1) throw ConfigError("t_p must be >= 1");
  if (k < 0) throw ConfigError("k must be >= 0");
  if (p_pilot < 1) throw ConfigError("p_pilot must be >= 1");

  const double var = 1.0 / t_p;
  PilotBook book;
  book.s.resize(p_pilot);
  const int independent = shared_matrix ? 1 : p_pilot;
  for (int p = 0; p < independent; ++p) {
    Eigen::MatrixXcd s(t_p, k);
    for (int col = 0; col < k; ++col) {
      for (int row = 0; row < t_p; ++row) {
        s(row, col) = rng.cgaussian(var);
      }
    }
    book.s[p] = std::move(s);
  }
  for (int p = independent; p < p_pilot; ++p) {
    book.s[p] = book.s[0];
  }
  return book;
}

ReceivedFrame synthesize_received(const PilotBook& pilots,
                                  const AccessChannelSet& channels,
                                  double noise_var, RandomStream& rng) {
  if (noise_var < 0.0) throw ConfigError("noise_var must be >= 0");
  const int p_pilot = static_cast<int>(pilots.s.size());
  if (static_cast<int>(channels.h.size()) != p_pilot)
    throw DimensionError("pilot book and channel set disagree on p_pilot");
  const int b_haps = p_pilot > 0 ? static_cast<int>(channels.h[0].size()) : 0;
  const int n_r = channels.n_antennas;
  const auto& active = channels.activity.active;

  ReceivedFrame frame;
  frame.noise_var = noise_var;
  frame.y_hap.assign(p_pilot, std::vector<Eigen::MatrixXcd>(b_haps));

  for (int p = 0; p < p_pilot; ++p) {
    if (pilots.s[p].cols() != channels.k_total)
      throw DimensionError("pilot columns do not match device count");
    const int t_p = static_cast<int>(pilots.s[p].rows());

    // only active rows contribute; inactive rows are exact zeros
    Eigen::MatrixXcd s_active(t_p, active.size());
    for (std::size_t a = 0; a < active.size(); ++a) {
      s_active.col(a) = pilots.s[p].col(active[a]);
    }
    for (int b = 0; b < b_haps; ++b) {
      Eigen::MatrixXcd h_active(active.size(), n_r);
      for (std::size_t a = 0; a < active.size(); ++a) {
        h_active.row(a) = channels.h[p][b].row(active[a]);
      }
      Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(t_p, n_r);
      if (!active.empty()) y.noalias() = s_active * h_active;
      if (noise_var > 0.0) {
        for (int col = 0; col < n_r; ++col) {
          for (int row = 0; row < t_p; ++row) {
            y(row, col) += rng.cgaussian(noise_var);
          }
        }
      }
      frame.y_hap[p][b] = std::move(y);
    }
  }
  return frame;
}

Eigen::MatrixXcd anchor_observation(const ReceivedFrame& frame,
                                    const CooperationSet& coop, int p) {
  if (p < 0 || p >= frame.n_subcarriers())
    throw DimensionError("subcarrier index out of range");
  const auto& blocks = frame.y_hap[p];
  for (int member : coop.members) {
    if (member < 0 || member >= static_cast<int>(blocks.size()))
      throw DimensionError("cooperation set references unknown HAP " +
                           std::to_string(member));
  }
  const int t_p = static_cast<int>(blocks[coop.members[0]].rows());
  const int n_r = static_cast<int>(blocks[coop.members[0]].cols());
  Eigen::MatrixXcd y(t_p, static_cast<int>(coop.members.size()) * n_r);
  for (std::size_t i = 0; i < coop.members.size(); ++i) {
    y.middleCols(static_cast<int>(i) * n_r, n_r) = blocks[coop.members[i]];
  }
  return y;
}

double pilot_phase_duration(const FrameConfig& frame) {
  return frame.t_p * static_cast<double>(frame.n_cp + frame.p_dft) /
         frame.bandwidth_hz;
}

double conventional_pilot_phase_duration(const FrameConfig& frame) {
  return frame.t_p * static_cast<double>(frame.n_cp + frame.n_dft) /
         frame.bandwidth_hz;
}

double calibrate_noise(double target_snr_db, const LargeScaleGains& gains,
                       int n_antennas) {
  if (gains.g.size() == 0) throw ConfigError("gain matrix is empty");
  std::vector<double> received;
  received.reserve(gains.g.size());
  for (Eigen::Index i = 0; i < gains.g.size(); ++i) {
    received.push_back(gains.g.data()[i] * n_antennas);
  }
  std::sort(received.begin(), received.end());
  const std::size_t n = received.size();
  const double median = (n % 2 == 1)
                            ? received[n / 2]
                            : 0.5 * (received[n / 2 - 1] + received[n / 2]);
  const double snr_linear = std::pow(10.0, target_snr_db / 10.0);
  return median / snr_linear;
}

}  // namespace hapsim
