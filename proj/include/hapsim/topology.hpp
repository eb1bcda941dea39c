#pragma once

#include <vector>

#include "hapsim/rng.hpp"

namespace hapsim {

struct Point2D {
  double x = 0.0;
  double y = 0.0;
};

/// One stratospheric platform. Position is (x, y, altitude) in meters with
/// the nadir at (x, y, 0). is_edge_anchor marks platforms that carry an
/// onboard server and can act as processing anchors.
struct HapNode {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double altitude = 20000.0;
  int n_antennas = 1;
  bool is_edge_anchor = true;
};

/// Anchor-centric cooperation set: the anchor itself plus its nearest
/// neighbours, ordered by 3-D distance from the anchor (anchor first,
/// ties broken by lowest id).
struct CooperationSet {
  int anchor = 0;
  std::vector<int> members;
};

struct NetworkTopology {
  std::vector<HapNode> haps;
  double footprint_radius = 50000.0;
  std::vector<Point2D> device_positions;
  std::vector<int> cell_assignment;  // per device: id of nearest HAP nadir

  int n_haps() const { return static_cast<int>(haps.size()); }
  int n_devices() const { return static_cast<int>(device_positions.size()); }
};

enum class Region { kCenter, kEdge };

double horizontal_distance(const Point2D& p, const HapNode& hap);
double distance_3d(const Point2D& ground, const HapNode& hap);
double hap_distance_3d(const HapNode& a, const HapNode& b);

/// Places `b` platforms on a hexagonal lattice: one at the origin, the rest
/// on concentric rings at the given spacing. Valid counts are the centered
/// hexagonal numbers 1, 7, 19, 37, ...
std::vector<HapNode> build_hex_deployment(int b, double spacing,
                                          double altitude, int n_antennas);

/// Draws k device positions uniformly over the union of HAP footprints
/// (rejection sampling over the bounding disc) and assigns each device to
/// the HAP with the nearest nadir.
void place_devices(NetworkTopology& topology, int k, RandomStream& rng);

/// Nearest-nadir cell assignment; ties broken by lowest HAP id.
std::vector<int> assign_cells(const std::vector<HapNode>& haps,
                              const std::vector<Point2D>& devices);

std::vector<CooperationSet> build_cooperation_sets(
    const std::vector<HapNode>& haps, int n_co);

/// Center/edge split relative to the assigned HAP's nadir. The boundary
/// (distance exactly center_fraction * footprint_radius) counts as center.
Region classify_region(const Point2D& device, const NetworkTopology& topology,
                       double center_fraction);

}  // namespace hapsim
