#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace fmtest {

namespace {

constexpr double kPi = 3.14159265358979323846;

double uniform(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace

PointCloud cloud_from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t dim = rows.empty() ? 0 : rows.front().size();
  std::vector<flaremap::PointLabel> labels;
  std::vector<double> values;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    labels.push_back({"p" + std::to_string(i), static_cast<flaremap::Period>(i)});
    values.insert(values.end(), rows[i].begin(), rows[i].end());
  }
  return PointCloud(dim, std::move(labels), std::move(values));
}

PointCloud circle_cloud(std::size_t n, std::uint64_t seed, double jitter, double lift) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
    rows.push_back({std::cos(t) + jitter * noise(rng), std::sin(t) + jitter * noise(rng), lift});
  }
  return cloud_from_rows(rows);
}

PointCloud two_blob_cloud(std::size_t per_blob, std::uint64_t seed, double separation, double lift) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> rows;
  for (int b = 0; b < 2; ++b) {
    const double cx = b == 0 ? -separation / 2 : separation / 2;
    for (std::size_t i = 0; i < per_blob; ++i) {
      const double r = std::sqrt(uniform(rng));
      const double t = 2.0 * kPi * uniform(rng);
      rows.push_back({cx + r * std::cos(t), r * std::sin(t), lift});
    }
  }
  return cloud_from_rows(rows);
}

PointCloud y_cloud(std::size_t per_arm, std::uint64_t seed, double jitter, double lift) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::vector<double>> rows;
  const double angles[3] = {kPi / 2, kPi / 2 + 2 * kPi / 3, kPi / 2 + 4 * kPi / 3};
  for (double a : angles) {
    for (std::size_t i = 0; i < per_arm; ++i) {
      const double r = static_cast<double>(i + 1) / static_cast<double>(per_arm);
      rows.push_back({r * std::cos(a) + jitter * noise(rng), r * std::sin(a) + jitter * noise(rng), lift});
    }
  }
  return cloud_from_rows(rows);
}

std::vector<std::vector<double>> gaussian_rows(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> rows(n, std::vector<double>(dim));
  for (auto& r : rows)
    for (auto& v : r) v = g(rng);
  return rows;
}

flaremap::PanelDataset planted_flare_panel(std::uint64_t seed, int periods, int active_periods) {
  // Stationary entities: `active_periods` random periods each, placed on a ring
  // in log-count space at evenly spaced angles assigned at random, so every
  // stationary entity samples the same distribution. The drifting entity sits
  // on the ring for `active_periods` periods, then walks radially outward.
  std::mt19937_64 rng(seed);
  constexpr int kStationary = 19;
  const int drift_steps = periods - active_periods;
  const int ring_points = (kStationary + 1) * active_periods;
  // Slot i goes to entity order[i % 20], so each entity's slots are evenly
  // spread around the ring; which period lands in which slot is random.
  std::vector<int> order(kStationary + 1);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> slots(static_cast<std::size_t>(ring_points));
  for (int i = 0; i < ring_points; ++i)
    slots[static_cast<std::size_t>(order[i % (kStationary + 1)] * active_periods + i / (kStationary + 1))] = i;
  for (int e = 0; e <= kStationary; ++e)
    std::shuffle(slots.begin() + e * active_periods, slots.begin() + (e + 1) * active_periods, rng);
  const double offset = 2.0 * kPi * uniform(rng);

  std::vector<std::string> entities = entity_names(kStationary);
  entities.push_back("drift");
  std::sort(entities.begin(), entities.end());
  const std::vector<std::string> cats = {"c00", "c01", "c02"};
  std::vector<flaremap::PanelEntry> entries;
  auto emit = [&](std::uint32_t e, int period, double x, double y) {
    const double coords[3] = {7.0 + x, 7.0 + y, 7.0};
    for (std::uint32_t c = 0; c < 3; ++c)
      entries.push_back({e, period, c, std::llround(std::exp(coords[c]) - 1.0)});
  };
  std::size_t next_slot = 0;
  for (std::uint32_t e = 0; e < entities.size(); ++e) {
    const bool drifting = entities[e] == "drift";
    std::vector<int> active(static_cast<std::size_t>(periods));
    std::iota(active.begin(), active.end(), 1);
    if (!drifting) {
      std::shuffle(active.begin(), active.end(), rng);
      active.resize(static_cast<std::size_t>(active_periods));
    } else {
      active.resize(static_cast<std::size_t>(active_periods));
    }
    for (int t : active) {
      const double a = offset + 2.0 * kPi * slots[next_slot++] / ring_points;
      emit(e, t, std::cos(a), std::sin(a));
    }
    if (drifting) {
      const double a = offset + 2.0 * kPi * uniform(rng);
      for (int k = 1; k <= drift_steps; ++k) {
        const double r = 1.0 + static_cast<double>(k) / drift_steps;
        emit(e, active_periods + k, r * std::cos(a), r * std::sin(a));
      }
    }
  }
  return flaremap::PanelDataset(entities, cats, 1, periods, std::move(entries));
}

flaremap::PanelDataset random_panel(std::uint64_t seed, int entities, int periods, int categories,
                                    double density) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> cats;
  for (int c = 0; c < categories; ++c) cats.push_back("c" + std::to_string(1000 + c));
  std::vector<flaremap::PanelEntry> entries;
  for (int e = 0; e < entities; ++e) {
    // each entity favors a random subset of categories
    std::vector<double> weight(categories);
    for (auto& w : weight) w = uniform(rng) < density ? 1.0 + 4.0 * uniform(rng) : 0.1;
    for (int t = 0; t < periods; ++t) {
      bool any = false;
      for (int c = 0; c < categories; ++c) {
        const auto k = std::poisson_distribution<long long>(weight[c])(rng);
        if (k > 0) {
          entries.push_back({static_cast<std::uint32_t>(e), 1 + t, static_cast<std::uint32_t>(c), k});
          any = true;
        }
      }
      if (!any) entries.push_back({static_cast<std::uint32_t>(e), 1 + t, 0, 1});
    }
  }
  return flaremap::PanelDataset(entity_names(static_cast<std::uint32_t>(entities)), cats, 1, periods,
                                std::move(entries));
}

Edges random_graph(std::uint32_t nodes, double p, std::mt19937_64& rng) {
  Edges edges;
  for (std::uint32_t u = 0; u < nodes; ++u)
    for (std::uint32_t v = u + 1; v < nodes; ++v)
      if (uniform(rng) < p) edges.emplace_back(u, v);
  return edges;
}

Edges random_connected_graph(std::uint32_t nodes, double p, std::mt19937_64& rng) {
  Edges edges = random_graph(nodes, p, rng);
  for (std::uint32_t v = 1; v < nodes; ++v) {
    const auto u = static_cast<std::uint32_t>(std::uniform_int_distribution<std::uint32_t>(0, v - 1)(rng));
    edges.emplace_back(u, v);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

std::vector<std::vector<std::uint32_t>> random_memberships(std::uint32_t nodes, std::uint32_t entities,
                                                           double p, std::mt19937_64& rng) {
  std::vector<std::vector<std::uint32_t>> members(nodes);
  for (std::uint32_t v = 0; v < nodes; ++v)
    for (std::uint32_t e = 0; e < entities; ++e)
      if (uniform(rng) < p) members[v].push_back(e);
  return members;
}

std::vector<std::string> entity_names(std::uint32_t count) {
  std::vector<std::string> names;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::ostringstream s;
    s << "e" << std::setw(4) << std::setfill('0') << i;
    names.push_back(s.str());
  }
  return names;
}

std::vector<std::vector<std::uint32_t>> adjacency_list(std::uint32_t nodes, const Edges& edges) {
  std::vector<std::vector<std::uint32_t>> adj(nodes);
  for (auto [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  return adj;
}

std::vector<bool> interior_by_definition(const std::vector<std::vector<std::uint32_t>>& adj,
                                         const std::vector<bool>& in_subgraph) {
  std::vector<bool> interior(adj.size(), false);
  for (std::size_t v = 0; v < adj.size(); ++v) {
    if (!in_subgraph[v]) continue;
    interior[v] = std::all_of(adj[v].begin(), adj[v].end(), [&](std::uint32_t w) { return in_subgraph[w]; });
  }
  return interior;
}

std::uint32_t exit_distance_by_definition(const std::vector<std::vector<std::uint32_t>>& adj,
                                          const std::vector<bool>& in_subgraph, std::uint32_t u) {
  const auto interior = interior_by_definition(adj, in_subgraph);
  std::vector<std::uint32_t> dist(adj.size(), kInf);
  std::deque<std::uint32_t> q{u};
  dist[u] = 0;
  while (!q.empty()) {
    const auto x = q.front();
    q.pop_front();
    if (!interior[x]) return dist[x];
    for (auto w : adj[x]) {
      if (dist[w] == kInf) {
        dist[w] = dist[x] + 1;
        q.push_back(w);
      }
    }
  }
  return kInf;
}

std::vector<std::uint32_t> components_union_find(std::uint32_t nodes, const Edges& edges) {
  std::vector<std::uint32_t> parent(nodes);
  std::iota(parent.begin(), parent.end(), 0u);
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (auto [u, v] : edges) parent[find(u)] = find(v);
  std::vector<std::uint32_t> label(nodes);
  for (std::uint32_t v = 0; v < nodes; ++v) label[v] = find(v);
  return label;
}

Eigen::VectorXd normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd xtx = x.transpose() * x;
  const Eigen::VectorXd xty = x.transpose() * y;
  return xtx.ldlt().solve(xty);
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> jacobi_eigen(Eigen::MatrixXd a, int sweeps) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int s = 0; s < sweeps; ++s) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) > a(j, j); });
  Eigen::VectorXd values(n);
  Eigen::MatrixXd vectors(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    values(i) = a(order[i], order[i]);
    vectors.col(i) = v.col(order[i]);
  }
  return {values, vectors};
}

std::pair<double, std::vector<std::size_t>> brute_force_kmedoids(const flaremap::DissimilarityMatrix& dm,
                                                                  std::size_t k) {
  const std::size_t n = dm.size();
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(k), true);
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_set;
  // prev_permutation over a descending-sorted selector enumerates every subset once
  do {
    std::vector<std::size_t> medoids;
    for (std::size_t i = 0; i < n; ++i)
      if (pick[i]) medoids.push_back(i);
    double cost = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      double m = std::numeric_limits<double>::infinity();
      for (auto c : medoids) m = std::min(m, dm(p, c));
      cost += m;
    }
    if (cost < best) {
      best = cost;
      best_set = medoids;
    }
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return {best, best_set};
}

std::vector<double> kruskal_merge_heights(const std::vector<std::size_t>& points,
                                          const flaremap::DissimilarityMatrix& dm) {
  struct E {
    double w;
    std::size_t a, b;
  };
  std::vector<E> all;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j) all.push_back({dm(points[i], points[j]), i, j});
  std::sort(all.begin(), all.end(), [](const E& x, const E& y) { return x.w < y.w; });
  std::vector<std::size_t> parent(points.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<double> heights;
  for (const auto& e : all) {
    const auto ra = find(e.a), rb = find(e.b);
    if (ra == rb) continue;
    parent[ra] = rb;
    heights.push_back(e.w);
  }
  return heights;
}

std::filesystem::path scratch_dir(const std::string& tag) {
  static std::uint64_t counter = 0;
  std::random_device rd;
  const auto dir = std::filesystem::temp_directory_path() /
                   ("flaremap_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

flaremap::EntityGraph two_flares_one_island() {
  std::vector<std::vector<std::uint32_t>> members = {{1}, {1}, {1}, {0, 1}, {0}, {0}, {0, 1}, {0}, {0}, {0}, {0}};
  Edges edges = {{0, 1}, {1, 2}, {0, 3}, {3, 4}, {4, 5}, {2, 6}, {6, 7}, {3, 6}, {8, 9}, {9, 10}, {8, 10}};
  return flaremap::EntityGraph({"i", "j"}, members, edges);
}

}  // namespace fmtest
