#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "flaremap/geometry.hpp"

namespace flaremap {

struct ClusterSummary {
  int cluster = 0;  // 1-based
  std::size_t firm_years = 0;
  std::size_t unique_entities = 0;
  /// Entities ranked by distinct periods present in the cluster, ties by id.
  std::vector<std::pair<std::string, std::size_t>> representatives;
};

/// Global partition of a point cloud. Cluster ids run 1..k.
struct ClusteringResult {
  int k = 0;
  std::vector<int> assignment;  // per point
  std::vector<std::size_t> centers;  // medoid point ids (k-medoids only)
  double objective = 0.0;  // inertia (k-means) or total dissimilarity (k-medoids)
  int iterations = 0;
  std::vector<double> objective_trace;  // after init and each iteration/swap (winning start)
};

/// Lloyd's algorithm with k-means++ seeding (Euclidean on the cloud's vectors).
/// A cluster that empties is re-seeded at the point farthest from its centroid.
ClusteringResult kmeans(const PointCloud& cloud, int k, std::uint64_t seed, int max_iter = 300);

/// PAM with first-improvement SWAP, run from `n_init` starts: the greedy BUILD
/// start, then seeded k-medoids++ starts. The lowest total dissimilarity wins,
/// earlier starts on ties. Within a start, ties go to the lowest point id and
/// `seed` fixes the order in which swap candidates are scanned.
ClusteringResult kmedoids(const DissimilarityMatrix& dm, int k, std::uint64_t seed, int max_iter = 100,
                          int n_init = 10);
ClusteringResult kmedoids(const PointCloud& cloud, const Metric& metric, int k, std::uint64_t seed,
                          int max_iter = 100, int n_init = 10);

/// Per-cluster firm-year and unique-entity counts, sorted by firm-years
/// descending. `max_representatives` bounds each representative list.
std::vector<ClusterSummary> cluster_table(const ClusteringResult& res, const PointCloud& cloud,
                                          std::size_t max_representatives = 5);

void write_cluster_csv(std::ostream& out, const std::vector<ClusterSummary>& table);
nlohmann::json cluster_json(const std::vector<ClusterSummary>& table);

}  // namespace flaremap
