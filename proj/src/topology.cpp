#include "hapsim/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "hapsim/errors.hpp"

namespace hapsim {

double horizontal_distance(const Point2D& p, const HapNode& hap) {
  return std::hypot(p.x - hap.x, p.y - hap.y);
}

double distance_3d(const Point2D& ground, const HapNode& hap) {
  return std::hypot(ground.x - hap.x, ground.y - hap.y, hap.altitude);
}

double hap_distance_3d(const HapNode& a, const HapNode& b) {
  return std::hypot(a.x - b.x, a.y - b.y, a.altitude - b.altitude);
}

namespace {

// Centered hexagonal number for r rings: 1 + 3 r (r + 1).
int hex_count(int rings) { return 1 + 3 * rings * (rings + 1); }

int rings_for_count(int b) {
  for (int r = 0; hex_count(r) <= b; ++r) {
    if (hex_count(r) == b) return r;
  }
  return -1;
}

int nearest_valid_count(int b) {
  int r = 0;
  while (hex_count(r + 1) <= b) ++r;
  int lo = hex_count(r), hi = hex_count(r + 1);
  return (b - lo <= hi - b) ? lo : hi;
}

}  // namespace

std::vector<HapNode> build_hex_deployment(int b, double spacing,
                                          double altitude, int n_antennas) {
  if (altitude <= 0.0) throw ConfigError("hap altitude must be > 0");
  if (n_antennas < 1) throw ConfigError("n_antennas must be >= 1");
  if (b >= 2 && spacing <= 0.0) throw ConfigError("hap spacing must be > 0");
  const int rings = rings_for_count(b);
  if (rings < 0) {
    throw ConfigError("unsupported HAP count " + std::to_string(b) +
                      "; counts form hexagonal rings (1, 7, 19, 37, ...), "
                      "nearest valid count is " +
                      std::to_string(nearest_valid_count(b)));
  }

  // Axial hex lattice: basis vectors at 0 and 60 degrees.
  const double ax = spacing, ay = 0.0;
  const double bx = spacing * 0.5, by = spacing * std::sqrt(3.0) / 2.0;

  struct Raw {
    double x, y, angle;
    int ring;
  };
  std::vector<Raw> pts;
  pts.push_back({0.0, 0.0, 0.0, 0});
  for (int r = 1; r <= rings; ++r) {
    for (int i = -r; i <= r; ++i) {
      for (int j = -r; j <= r; ++j) {
        const int k = -i - j;
        if (std::max({std::abs(i), std::abs(j), std::abs(k)}) != r) continue;
        const double x = i * ax + j * bx;
        const double y = i * ay + j * by;
        double ang = std::atan2(y, x);
        if (ang < -1e-12) ang += 2.0 * M_PI;
        pts.push_back({x, y, ang, r});
      }
    }
  }
  std::sort(pts.begin(), pts.end(), [](const Raw& a, const Raw& b2) {
    if (a.ring != b2.ring) return a.ring < b2.ring;
    return a.angle < b2.angle;
  });

  std::vector<HapNode> haps(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    haps[i] = HapNode{static_cast<int>(i), pts[i].x, pts[i].y, altitude,
                      n_antennas, true};
  }
  return haps;
}

std::vector<int> assign_cells(const std::vector<HapNode>& haps,
                              const std::vector<Point2D>& devices) {
  std::vector<int> cells(devices.size(), 0);
  for (std::size_t d = 0; d < devices.size(); ++d) {
    double best = std::numeric_limits<double>::infinity();
    int best_id = 0;
    for (const auto& hap : haps) {
      const double dist = horizontal_distance(devices[d], hap);
      if (dist < best) {
        best = dist;
        best_id = hap.id;
      }
    }
    cells[d] = best_id;
  }
  return cells;
}

void place_devices(NetworkTopology& topology, int k, RandomStream& rng) {
  if (k < 0) throw ConfigError("device count must be >= 0");
  if (topology.footprint_radius <= 0.0)
    throw ConfigError("footprint_radius must be > 0");
  if (topology.haps.empty()) throw ConfigError("topology has no HAPs");

  // Bounding disc around the nadir cloud.
  double bound = 0.0;
  for (const auto& hap : topology.haps) {
    bound = std::max(bound, std::hypot(hap.x, hap.y));
  }
  bound += topology.footprint_radius;

  topology.device_positions.clear();
  topology.device_positions.reserve(k);
  while (static_cast<int>(topology.device_positions.size()) < k) {
    const double radius = bound * std::sqrt(rng.uniform());
    const double angle = 2.0 * M_PI * rng.uniform();
    Point2D p{radius * std::cos(angle), radius * std::sin(angle)};
    bool covered = false;
    for (const auto& hap : topology.haps) {
      if (horizontal_distance(p, hap) <= topology.footprint_radius) {
        covered = true;
        break;
      }
    }
    if (covered) topology.device_positions.push_back(p);
  }
  topology.cell_assignment = assign_cells(topology.haps,
                                          topology.device_positions);
}

std::vector<CooperationSet> build_cooperation_sets(
    const std::vector<HapNode>& haps, int n_co) {
  const int b = static_cast<int>(haps.size());
  if (n_co < 1 || n_co > b) {
    throw ConfigError("n_co must lie in [1, " + std::to_string(b) +
                      "], got " + std::to_string(n_co));
  }
  std::vector<CooperationSet> sets;
  sets.reserve(haps.size());
  for (const auto& anchor : haps) {
    std::vector<int> order(haps.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int lhs, int rhs) {
      const double dl = hap_distance_3d(anchor, haps[lhs]);
      const double dr = hap_distance_3d(anchor, haps[rhs]);
      if (dl != dr) return dl < dr;
      return lhs < rhs;
    });
    CooperationSet set;
    set.anchor = anchor.id;
    set.members.assign(order.begin(), order.begin() + n_co);
    sets.push_back(std::move(set));
  }
  return sets;
}

Region classify_region(const Point2D& device, const NetworkTopology& topology,
                       double center_fraction) {
  if (center_fraction <= 0.0 || center_fraction >= 1.0)
    throw ConfigError("center_fraction must lie in (0, 1)");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& hap : topology.haps) {
    best = std::min(best, horizontal_distance(device, hap));
  }
  return best <= center_fraction * topology.footprint_radius ? Region::kCenter
                                                             : Region::kEdge;
}

}  // namespace hapsim
