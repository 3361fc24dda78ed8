#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "flaremap/geometry.hpp"

namespace flaremap {

using PointId = std::uint32_t;
using NodeId = std::uint32_t;

struct CoverSpec {
  int cubes = 20;        // intervals per filter dimension
  double overlap = 0.5;  // in [0, 1)

  void validate() const;
};

/// One box of the grid cover and the points whose filter values fall in it.
struct CoverElement {
  std::vector<int> grid_index;  // (j_1, ..., j_d)
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<PointId> members;  // ascending
};

/// Grid cover of the filter image. Per dimension the base length is
/// L = (max - min) / n; interval j is centered at min + (j + 1/2) L with
/// half-width (L / 2) / (1 - o) and closed on both ends. Dimensions with zero
/// range use the single interval [min, min]. Empty boxes are dropped; the rest
/// are ordered lexicographically by grid index.
std::vector<CoverElement> build_cover(const FilterImage& image, const CoverSpec& spec);

/// Single-linkage clustering of one cover element with the histogram gap rule:
/// merge heights are binned over [0, max pairwise distance in the element] and
/// the cut is placed at the left edge of the first empty bin above the lowest
/// occupied bin. Points join when their linkage distance is strictly below the
/// cut. No such bin means one cluster. Clusters are ordered by smallest member.
std::vector<std::vector<PointId>> local_cluster(const CoverElement& element,
                                                const DissimilarityMatrix& dm, int bins = 10);

struct MapperNode {
  NodeId id = 0;
  std::uint32_t element = 0;     // index into the cover element list
  std::vector<PointId> members;  // ascending
};

/// Nerve graph: one node per local cluster, unit-weight edge for every pair of
/// nodes sharing a point.
struct MapperGraph {
  std::vector<MapperNode> nodes;
  std::vector<std::pair<NodeId, NodeId>> edges;  // u < v, sorted
  std::size_t point_count = 0;

  std::vector<std::vector<NodeId>> adjacency() const;
  std::size_t component_count() const;
  /// E - V + C, the number of independent cycles.
  std::size_t cycle_rank() const { return edges.size() + component_count() - nodes.size(); }
  std::size_t max_degree() const;
};

/// Clusters of each element in element order -> graph. Node ids follow
/// (element index, smallest member).
MapperGraph assemble_graph(const std::vector<std::vector<std::vector<PointId>>>& clusters_per_element,
                           std::size_t point_count);

struct MapperConfig {
  Metric metric = Metric::cosine();
  std::size_t filter_dims = 2;
  CoverSpec cover{};
  int bins = 10;
  ExecOptions exec{};
};

/// Cover + local clustering + nerve over a precomputed filter and matrix.
MapperGraph run_mapper(const FilterImage& image, const DissimilarityMatrix& dm, const MapperConfig& cfg);

/// Full Mapper: matrix, PCA filter, cover, clustering, nerve. A cloud with zero
/// variance (including a single point) gets an all-zero filter image.
MapperGraph run_mapper(const PointCloud& cloud, const MapperConfig& cfg);

/// Filter used by run_mapper: PCA, or the degenerate all-zero image.
FilterImage mapper_filter(const PointCloud& cloud, std::size_t dims);

}  // namespace flaremap
