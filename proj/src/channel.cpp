#include "hapsim/channel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <string>

#include "hapsim/errors.hpp"

namespace hapsim {

namespace {
constexpr double kSpeedOfLight = 299792458.0;
}

std::vector<bool> ActivityPattern::mask() const {
  std::vector<bool> m(k_total, false);
  for (int id : active) m[id] = true;
  return m;
}

ActivityPattern draw_activity(int k, int k_a, RandomStream& rng) {
  if (k < 0) throw ConfigError("k must be >= 0");
  if (k_a < 0 || k_a > k) {
    throw ConfigError("k_active = " + std::to_string(k_a) +
                      " exceeds k = " + std::to_string(k));
  }
  // partial Fisher-Yates over the id array
  std::vector<int> ids(k);
  std::iota(ids.begin(), ids.end(), 0);
  for (int i = 0; i < k_a; ++i) {
    const auto j = i + static_cast<int>(rng.uniform_int(k - i));
    std::swap(ids[i], ids[j]);
  }
  ActivityPattern pattern;
  pattern.k_total = k;
  pattern.active.assign(ids.begin(), ids.begin() + k_a);
  std::sort(pattern.active.begin(), pattern.active.end());
  return pattern;
}

double free_space_gain(double distance_m, double carrier_freq_hz) {
  if (distance_m <= 0.0) throw ConfigError("distance must be > 0");
  if (carrier_freq_hz <= 0.0) throw ConfigError("carrier frequency must be > 0");
  const double amp = kSpeedOfLight / (4.0 * M_PI * distance_m * carrier_freq_hz);
  return amp * amp;
}

LargeScaleGains compute_large_scale_gains(const NetworkTopology& topology,
                                          double carrier_freq_hz) {
  LargeScaleGains gains;
  gains.g.resize(topology.n_devices(), topology.n_haps());
  for (int d = 0; d < topology.n_devices(); ++d) {
    for (int b = 0; b < topology.n_haps(); ++b) {
      const double dist = distance_3d(topology.device_positions[d],
                                      topology.haps[b]);
      gains.g(d, b) = free_space_gain(dist, carrier_freq_hz);
    }
  }
  return gains;
}

std::vector<PathComponent> draw_multipath(const Point2D& device,
                                          const HapNode& hap, int l_paths,
                                          double kappa, double max_delay_s,
                                          RandomStream& rng) {
  if (l_paths < 1) throw ConfigError("l_paths must be >= 1");
  if (kappa < 0.0) throw ConfigError("kappa must be >= 0");

  std::vector<PathComponent> paths;
  paths.reserve(l_paths);

  const double dist = distance_3d(device, hap);
  // direction cosine along the array axis (x); |u| <= 1 by construction
  const double u = (device.x - hap.x) / dist;
  const double los_angle = std::asin(std::clamp(u, -1.0, 1.0));
  const double los_amp =
      (l_paths == 1) ? 1.0 : std::sqrt(kappa / (kappa + 1.0));
  const double phase = 2.0 * M_PI * rng.uniform();
  paths.push_back({std::polar(los_amp, phase), dist / kSpeedOfLight,
                   los_angle});

  if (l_paths > 1) {
    const double nlos_var = 1.0 / ((kappa + 1.0) * (l_paths - 1));
    for (int l = 1; l < l_paths; ++l) {
      PathComponent p;
      p.gain = rng.cgaussian(nlos_var);
      p.delay_s = max_delay_s * rng.uniform();
      p.angle_rad = M_PI * (rng.uniform() - 0.5);
      paths.push_back(p);
    }
  }
  return paths;
}

MultipathSet draw_multipath_set(const NetworkTopology& topology,
                                const ActivityPattern& activity, int l_paths,
                                double kappa, double max_delay_s,
                                RandomStream& rng) {
  MultipathSet set;
  set.rician_kappa = kappa;
  set.paths.resize(activity.k_active());
  for (int a = 0; a < activity.k_active(); ++a) {
    const Point2D& pos = topology.device_positions[activity.active[a]];
    set.paths[a].resize(topology.n_haps());
    for (int b = 0; b < topology.n_haps(); ++b) {
      set.paths[a][b] = draw_multipath(pos, topology.haps[b], l_paths, kappa,
                                       max_delay_s, rng);
    }
  }
  return set;
}

Eigen::VectorXcd steering_vector(double angle_rad, int n_antennas) {
  Eigen::VectorXcd a(n_antennas);
  const double omega = M_PI * std::sin(angle_rad);
  for (int n = 0; n < n_antennas; ++n) {
    a(n) = std::polar(1.0, omega * n);
  }
  return a;
}

AccessChannelSet assemble_access_channels(
    const ActivityPattern& activity, const LargeScaleGains& gains,
    const MultipathSet& multipath, const std::vector<double>& subcarrier_freqs,
    int n_antennas) {
  const int k = activity.k_total;
  const int b_haps = static_cast<int>(gains.g.cols());
  const int p_pilot = static_cast<int>(subcarrier_freqs.size());
  if (gains.g.rows() != k)
    throw DimensionError("gain matrix rows do not match device count");
  if (static_cast<int>(multipath.paths.size()) != activity.k_active())
    throw DimensionError("multipath set does not match the active set");

  AccessChannelSet channels;
  channels.k_total = k;
  channels.n_antennas = n_antennas;
  channels.subcarrier_freqs = subcarrier_freqs;
  channels.activity = activity;
  channels.h.assign(p_pilot, std::vector<Eigen::MatrixXcd>(
                                 b_haps, Eigen::MatrixXcd::Zero(k, n_antennas)));

  for (int a = 0; a < activity.k_active(); ++a) {
    const int dev = activity.active[a];
    for (int b = 0; b < b_haps; ++b) {
      if (static_cast<int>(multipath.paths[a].size()) != b_haps)
        throw DimensionError("multipath set does not cover every HAP");
      const double amp = std::sqrt(gains.g(dev, b));
      // per-path steering vectors are frequency-flat; only the delay
      // phasor changes across subcarriers
      std::vector<Eigen::VectorXcd> steer;
      steer.reserve(multipath.paths[a][b].size());
      for (const auto& path : multipath.paths[a][b]) {
        steer.push_back(steering_vector(path.angle_rad, n_antennas));
      }
      for (int p = 0; p < p_pilot; ++p) {
        Eigen::VectorXcd row = Eigen::VectorXcd::Zero(n_antennas);
        for (std::size_t l = 0; l < multipath.paths[a][b].size(); ++l) {
          const auto& path = multipath.paths[a][b][l];
          const std::complex<double> rot =
              std::polar(1.0, -2.0 * M_PI * subcarrier_freqs[p] * path.delay_s);
          row += (path.gain * rot) * steer[l];
        }
        channels.h[p][b].row(dev) = amp * row.transpose();
      }
    }
  }
  return channels;
}

const Eigen::MatrixXcd& dft_matrix(int n) {
  static std::map<int, Eigen::MatrixXcd> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) {
    Eigen::MatrixXcd f(n, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        f(r, c) = std::polar(scale, -2.0 * M_PI * r * c / n);
      }
    }
    it = cache.emplace(n, std::move(f)).first;
  }
  return it->second;
}

Eigen::MatrixXcd to_angular(const Eigen::MatrixXcd& spatial) {
  return spatial * dft_matrix(static_cast<int>(spatial.cols()));
}

Eigen::MatrixXcd from_angular(const Eigen::MatrixXcd& angular) {
  return angular * dft_matrix(static_cast<int>(angular.cols())).adjoint();
}

AccessChannelSet to_angular(const AccessChannelSet& channels) {
  AccessChannelSet out = channels;
  for (auto& per_hap : out.h) {
    for (auto& block : per_hap) {
      block = to_angular(block);
    }
  }
  return out;
}

}  // namespace hapsim
