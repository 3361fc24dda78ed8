#include "flaremap/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include "flaremap/csv.hpp"
#include "flaremap/error.hpp"
#include "flaremap/kernels.hpp"
#include "flaremap/parallel.hpp"

namespace flaremap {

namespace {

// Portable uniform draw in [0, 1); std::uniform_real_distribution differs
// between standard libraries.
double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void check_k(int k, std::size_t n) {
  if (k < 1) throw ValidationError("k must be >= 1");
  if (static_cast<std::size_t>(k) > n)
    throw ValidationError("k = " + std::to_string(k) + " exceeds the number of points (" + std::to_string(n) + ")");
}

}  // namespace

ClusteringResult kmeans(const PointCloud& cloud, int k, std::uint64_t seed, int max_iter) {
  const std::size_t n = cloud.size();
  const std::size_t dim = cloud.dimension();
  check_k(k, n);
  const auto& kern = kernels::active();
  const auto kk = static_cast<std::size_t>(k);
  std::mt19937_64 rng(seed);

  // k-means++ seeding.
  std::vector<double> centroids;
  centroids.reserve(kk * dim);
  std::vector<char> chosen(n, 0);
  auto add_center = [&](std::size_t p) {
    chosen[p] = 1;
    centroids.insert(centroids.end(), cloud.row(p).begin(), cloud.row(p).end());
  };
  add_center(static_cast<std::size_t>(unit_draw(rng) * static_cast<double>(n)));
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (centroids.size() < kk * dim) {
    const double* c = centroids.data() + centroids.size() - dim;
    double total = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      d2[p] = std::min(d2[p], kern.squared_distance(cloud.row(p).data(), c, dim));
      total += d2[p];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = unit_draw(rng) * total;
      double run = 0.0;
      for (std::size_t p = 0; p < n; ++p) {
        run += d2[p];
        if (d2[p] > 0.0 && run > target) {
          pick = p;
          break;
        }
      }
      if (pick == n)
        for (std::size_t p = n; p-- > 0;)
          if (d2[p] > 0.0) {
            pick = p;
            break;
          }
    } else {
      pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), 0) - chosen.begin());
    }
    add_center(pick);
  }

  ClusteringResult res;
  res.k = k;
  std::vector<int> assign(n, -1);
  std::vector<double> dist(n, 0.0);
  auto assign_all = [&] {
    parallel_for(
        n, 0,
        [&](std::size_t p) {
          double best = std::numeric_limits<double>::infinity();
          int arg = 0;
          for (std::size_t c = 0; c < kk; ++c) {
            const double d = kern.squared_distance(cloud.row(p).data(), centroids.data() + c * dim, dim);
            if (d < best) {
              best = d;
              arg = static_cast<int>(c);
            }
          }
          assign[p] = arg;
          dist[p] = best;
        },
        64);
    double inertia = 0.0;
    for (double d : dist) inertia += d;
    return inertia;
  };

  res.objective = assign_all();
  res.objective_trace.push_back(res.objective);
  for (int it = 0; it < max_iter; ++it) {
    std::vector<double> sums(kk * dim, 0.0);
    std::vector<std::size_t> counts(kk, 0);
    for (std::size_t p = 0; p < n; ++p) {
      const auto c = static_cast<std::size_t>(assign[p]);
      ++counts[c];
      const auto r = cloud.row(p);
      for (std::size_t j = 0; j < dim; ++j) sums[c * dim + j] += r[j];
    }
    for (std::size_t c = 0; c < kk; ++c) {
      if (counts[c] == 0) {
        // Re-seed an empty cluster at the point farthest from its centroid.
        const auto far = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
        std::copy(cloud.row(far).begin(), cloud.row(far).end(), centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
        dist[far] = 0.0;
        continue;
      }
      for (std::size_t j = 0; j < dim; ++j)
        centroids[c * dim + j] = sums[c * dim + j] / static_cast<double>(counts[c]);
    }
    const auto previous = assign;
    res.objective = assign_all();
    res.objective_trace.push_back(res.objective);
    res.iterations = it + 1;
    if (assign == previous) break;
  }
  res.assignment.resize(n);
  for (std::size_t p = 0; p < n; ++p) res.assignment[p] = assign[p] + 1;
  return res;
}

namespace {

constexpr double kInfDist = std::numeric_limits<double>::infinity();

// Greedy BUILD; ties go to the lowest point id.
std::vector<std::size_t> pam_build(const DissimilarityMatrix& dm, std::size_t k) {
  const std::size_t n = dm.size();
  std::vector<std::size_t> medoids;
  std::vector<char> is_medoid(n, 0);
  std::vector<double> near(n, kInfDist);
  while (medoids.size() < k) {
    std::size_t best = n;
    double best_gain = -kInfDist;
    for (std::size_t j = 0; j < n; ++j) {
      if (is_medoid[j]) continue;
      double gain = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = dm(i, j);
        gain += medoids.empty() ? -d : std::max(0.0, near[i] - d);
      }
      if (gain > best_gain) {
        best_gain = gain;
        best = j;
      }
    }
    medoids.push_back(best);
    is_medoid[best] = 1;
    for (std::size_t i = 0; i < n; ++i) near[i] = std::min(near[i], dm(i, best));
  }
  return medoids;
}

// k-medoids++: first medoid uniform, the rest with probability proportional
// to the squared dissimilarity to the nearest chosen medoid.
std::vector<std::size_t> pam_seed(const DissimilarityMatrix& dm, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = dm.size();
  std::vector<std::size_t> medoids{static_cast<std::size_t>(unit_draw(rng) * static_cast<double>(n))};
  std::vector<char> is_medoid(n, 0);
  is_medoid[medoids[0]] = 1;
  std::vector<double> d2(n, kInfDist);
  while (medoids.size() < k) {
    double total = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      const double d = dm(p, medoids.back());
      d2[p] = std::min(d2[p], d * d);
      if (!is_medoid[p]) total += d2[p];
    }
    std::size_t pick = n;
    const double target = unit_draw(rng) * total;
    double run = 0.0;
    for (std::size_t p = 0; p < n && total > 0.0; ++p) {
      if (is_medoid[p] || d2[p] == 0.0) continue;
      run += d2[p];
      pick = p;
      if (run > target) break;
    }
    if (pick == n) pick = static_cast<std::size_t>(std::find(is_medoid.begin(), is_medoid.end(), 0) - is_medoid.begin());
    medoids.push_back(pick);
    is_medoid[pick] = 1;
  }
  return medoids;
}

std::vector<std::size_t> sorted(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

struct PamRun {
  std::vector<std::size_t> medoids;
  std::vector<std::size_t> owner;  // index into `medoids`
  double objective = 0.0;
  int iterations = 0;
  std::vector<double> trace;
};

// First-improvement SWAP from the given medoids, scanning candidates in `order`.
PamRun pam_swap(const DissimilarityMatrix& dm, std::vector<std::size_t> medoids, const std::vector<std::size_t>& order,
                int max_iter) {
  const std::size_t n = dm.size();
  const std::size_t k = medoids.size();
  std::vector<char> is_medoid(n, 0);
  for (auto m : medoids) is_medoid[m] = 1;
  std::vector<double> near(n), second(n);
  std::vector<std::size_t> owner(n, 0);

  auto refresh = [&] {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      near[i] = second[i] = kInfDist;
      for (std::size_t m = 0; m < k; ++m) {
        const double d = dm(i, medoids[m]);
        const bool better = d < near[i] || (d == near[i] && medoids[m] < medoids[owner[i]]);
        if (better) {
          second[i] = near[i];
          near[i] = d;
          owner[i] = m;
        } else if (d < second[i]) {
          second[i] = d;
        }
      }
      total += near[i];
    }
    return total;
  };

  PamRun run;
  run.objective = refresh();
  run.trace.push_back(run.objective);
  for (int pass = 0; pass < max_iter; ++pass) {
    bool improved = false;
    for (std::size_t o : order) {
      if (is_medoid[o]) continue;
      for (std::size_t m = 0; m < k; ++m) {
        double delta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = dm(i, o);
          delta += owner[i] == m ? std::min(second[i], d) - near[i] : std::min(0.0, d - near[i]);
        }
        if (delta < -1e-12 * std::max(1.0, run.objective)) {
          is_medoid[medoids[m]] = 0;
          medoids[m] = o;
          is_medoid[o] = 1;
          run.objective = refresh();
          run.trace.push_back(run.objective);
          improved = true;
          break;
        }
      }
    }
    run.iterations = pass + 1;
    if (!improved) break;
  }
  run.medoids = std::move(medoids);
  run.owner = std::move(owner);
  return run;
}

}  // namespace

ClusteringResult kmedoids(const DissimilarityMatrix& dm, int k, std::uint64_t seed, int max_iter, int n_init) {
  const std::size_t n = dm.size();
  check_k(k, n);
  if (n_init < 1) throw ValidationError("n_init must be >= 1");
  const auto kk = static_cast<std::size_t>(k);

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);

  auto first = pam_build(dm, kk);
  std::set<std::vector<std::size_t>> tried{sorted(first)};
  PamRun best = pam_swap(dm, std::move(first), order, max_iter);
  // Repeated starts are skipped; the draw budget bounds the search when few
  // distinct medoid sets exist.
  int draws = 0;
  for (int start = 1; start < n_init && draws < 4 * n_init; ++draws) {
    auto seeds = pam_seed(dm, kk, rng);
    if (!tried.insert(sorted(seeds)).second) continue;
    ++start;
    PamRun run = pam_swap(dm, std::move(seeds), order, max_iter);
    if (run.objective < best.objective) best = std::move(run);
  }

  ClusteringResult res;
  res.k = k;
  res.objective = best.objective;
  res.iterations = best.iterations;
  res.objective_trace = std::move(best.trace);
  // Cluster ids follow medoid point ids.
  std::vector<std::size_t> rank(kk);
  std::iota(rank.begin(), rank.end(), 0);
  std::sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) { return best.medoids[a] < best.medoids[b]; });
  std::vector<int> label(kk);
  for (std::size_t r = 0; r < kk; ++r) label[rank[r]] = static_cast<int>(r) + 1;
  res.assignment.resize(n);
  for (std::size_t i = 0; i < n; ++i) res.assignment[i] = label[best.owner[i]];
  res.centers.resize(kk);
  for (std::size_t m = 0; m < kk; ++m) res.centers[static_cast<std::size_t>(label[m] - 1)] = best.medoids[m];
  return res;
}

ClusteringResult kmedoids(const PointCloud& cloud, const Metric& metric, int k, std::uint64_t seed, int max_iter,
                          int n_init) {
  return kmedoids(dissimilarity_matrix(cloud, metric), k, seed, max_iter, n_init);
}

std::vector<ClusterSummary> cluster_table(const ClusteringResult& res, const PointCloud& cloud,
                                          std::size_t max_representatives) {
  if (res.assignment.size() != cloud.size()) throw ValidationError("assignment does not match the point cloud");
  std::vector<std::map<std::string, std::set<Period>>> periods(static_cast<std::size_t>(res.k));
  std::vector<ClusterSummary> table(static_cast<std::size_t>(res.k));
  for (std::size_t p = 0; p < cloud.size(); ++p) {
    const int c = res.assignment[p];
    if (c < 1 || c > res.k) throw ValidationError("cluster id out of range");
    auto& row = table[static_cast<std::size_t>(c - 1)];
    ++row.firm_years;
    periods[static_cast<std::size_t>(c - 1)][cloud.label(p).entity].insert(cloud.label(p).period);
  }
  for (std::size_t c = 0; c < table.size(); ++c) {
    auto& row = table[c];
    row.cluster = static_cast<int>(c) + 1;
    row.unique_entities = periods[c].size();
    for (const auto& [entity, ps] : periods[c]) row.representatives.emplace_back(entity, ps.size());
    std::stable_sort(row.representatives.begin(), row.representatives.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (row.representatives.size() > max_representatives) row.representatives.resize(max_representatives);
  }
  std::stable_sort(table.begin(), table.end(),
                   [](const ClusterSummary& a, const ClusterSummary& b) { return a.firm_years > b.firm_years; });
  return table;
}

void write_cluster_csv(std::ostream& out, const std::vector<ClusterSummary>& table) {
  out << "cluster,firm_years,unique_entities,representatives\n";
  std::size_t years = 0;
  std::size_t uniques = 0;
  for (const auto& row : table) {
    std::string reps;
    for (const auto& [entity, count] : row.representatives) reps += (reps.empty() ? "" : ";") + entity;
    out << row.cluster << ',' << row.firm_years << ',' << row.unique_entities << ',' << csv::escape_field(reps) << '\n';
    years += row.firm_years;
    uniques += row.unique_entities;
  }
  out << "total," << years << ',' << uniques << ",\n";
}

nlohmann::json cluster_json(const std::vector<ClusterSummary>& table) {
  nlohmann::json rows = nlohmann::json::array();
  std::size_t years = 0;
  std::size_t uniques = 0;
  for (const auto& row : table) {
    nlohmann::json reps = nlohmann::json::array();
    for (const auto& [entity, count] : row.representatives) reps.push_back({{"entity", entity}, {"periods", count}});
    rows.push_back({{"cluster", row.cluster},
                    {"firm_years", row.firm_years},
                    {"unique_entities", row.unique_entities},
                    {"representatives", std::move(reps)}});
    years += row.firm_years;
    uniques += row.unique_entities;
  }
  return {{"clusters", std::move(rows)}, {"total", {{"firm_years", years}, {"unique_entities", uniques}}}};
}

}  // namespace flaremap
