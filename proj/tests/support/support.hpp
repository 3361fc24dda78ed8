#pragma once
// Synthetic data generators and independent reference implementations shared
// by the unit and acceptance tests. Nothing here calls into the code it checks.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "flaremap/flare.hpp"
#include "flaremap/geometry.hpp"
#include "flaremap/mapper.hpp"
#include "flaremap/panel.hpp"

namespace fmtest {

using flaremap::PointCloud;
using Edges = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

constexpr std::uint32_t kInf = std::numeric_limits<std::uint32_t>::max();

// ---- point clouds -------------------------------------------------------

/// Rows as a cloud; labels are ("p<i>", i).
PointCloud cloud_from_rows(const std::vector<std::vector<double>>& rows);

/// n points on the unit circle, lifted to (x, y, lift) so cosine distances
/// stay informative.
PointCloud circle_cloud(std::size_t n, std::uint64_t seed, double jitter = 0.0, double lift = 5.0);

/// Two uniform disks of `per_blob` points each, centers `separation` apart,
/// lifted to (x, y, lift).
PointCloud two_blob_cloud(std::size_t per_blob, std::uint64_t seed, double separation = 6.0,
                          double lift = 10.0);

/// Three arms of `per_arm` points meeting at the origin, lifted to (x, y, lift).
PointCloud y_cloud(std::size_t per_arm, std::uint64_t seed, double jitter = 0.02, double lift = 5.0);

/// Standard normal vectors.
std::vector<std::vector<double>> gaussian_rows(std::size_t n, std::size_t dim, std::mt19937_64& rng);

// ---- panels --------------------------------------------------------------

/// 20-entity panel: 19 stationary entities sampling one ring-shaped
/// distribution in log-count space, and entity "drift" that starts on the ring
/// and then moves monotonically outward. Intended for a window of 1 and a
/// one-dimensional filter.
flaremap::PanelDataset planted_flare_panel(std::uint64_t seed, int periods = 20, int active_periods = 3);

/// Random sparse panel with `entities` x `periods` rows of `categories` counts.
flaremap::PanelDataset random_panel(std::uint64_t seed, int entities, int periods, int categories,
                                    double density = 0.3);

// ---- graphs --------------------------------------------------------------

/// Erdos-Renyi graph, u < v, sorted.
Edges random_graph(std::uint32_t nodes, double p, std::mt19937_64& rng);
/// Random connected graph: random spanning tree plus extra G(n, p) edges.
Edges random_connected_graph(std::uint32_t nodes, double p, std::mt19937_64& rng);
/// Random node memberships for `entities` entities.
std::vector<std::vector<std::uint32_t>> random_memberships(std::uint32_t nodes, std::uint32_t entities,
                                                           double p, std::mt19937_64& rng);
std::vector<std::string> entity_names(std::uint32_t count);

/// Entity "i" spans a region of the main component with two flares (indices 2
/// and 1) behind boundary nodes shared with "j", plus a separate triangle held
/// by "i" alone. Nodes 0..2 hold "j" only; 3, 6 are boundary; 4, 5 and 7 are
/// flare interior; 8..10 form the island.
flaremap::EntityGraph two_flares_one_island();

// ---- oracles -------------------------------------------------------------

std::vector<std::vector<std::uint32_t>> adjacency_list(std::uint32_t nodes, const Edges& edges);

/// Exit distance by definition: BFS over the whole graph from u to the nearest
/// node that is not in the interior of the entity. kInf when none is reachable.
std::uint32_t exit_distance_by_definition(const std::vector<std::vector<std::uint32_t>>& adj,
                                          const std::vector<bool>& in_subgraph, std::uint32_t u);

/// Interior membership by the ball definition: v in G_i and every neighbor in G_i.
std::vector<bool> interior_by_definition(const std::vector<std::vector<std::uint32_t>>& adj,
                                         const std::vector<bool>& in_subgraph);

/// Component label per node by union-find.
std::vector<std::uint32_t> components_union_find(std::uint32_t nodes, const Edges& edges);

/// Least squares by the normal equations (X^T X) b = X^T y with an LDLT solve.
Eigen::VectorXd normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

/// Symmetric eigendecomposition by cyclic Jacobi rotations; eigenvalues
/// descending, eigenvectors as columns.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> jacobi_eigen(Eigen::MatrixXd a, int sweeps = 100);

/// Minimum total dissimilarity over all k-subsets of medoids (each point to
/// its nearest medoid). Returns (cost, medoids).
std::pair<double, std::vector<std::size_t>> brute_force_kmedoids(const flaremap::DissimilarityMatrix& dm,
                                                                  std::size_t k);

/// Single-linkage merge heights by Kruskal over all pairs.
std::vector<double> kruskal_merge_heights(const std::vector<std::size_t>& points,
                                          const flaremap::DissimilarityMatrix& dm);

/// Fresh empty directory under the system temp path.
std::filesystem::path scratch_dir(const std::string& tag);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace fmtest
