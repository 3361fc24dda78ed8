#include "flaremap/mapper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "flaremap/error.hpp"
#include "flaremap/parallel.hpp"

namespace flaremap {

namespace {

struct Interval {
  double lo;
  double hi;
};

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

void CoverSpec::validate() const {
  if (cubes < 1) throw ValidationError("number of cubes must be >= 1");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw ValidationError("overlap must lie in [0, 1)");
}

std::vector<CoverElement> build_cover(const FilterImage& image, const CoverSpec& spec) {
  spec.validate();
  const std::size_t n = image.size();
  const std::size_t d = image.dims;
  if (n == 0 || d == 0) throw ValidationError("cannot cover an empty filter image");

  // Per-dimension intervals and, per point, the intervals containing it.
  std::vector<std::vector<Interval>> intervals(d);
  std::vector<std::vector<std::vector<int>>> hits(d, std::vector<std::vector<int>>(n));
  for (std::size_t k = 0; k < d; ++k) {
    double mn = std::numeric_limits<double>::infinity();
    double mx = -mn;
    for (std::size_t i = 0; i < n; ++i) {
      mn = std::min(mn, image.coord(i, k));
      mx = std::max(mx, image.coord(i, k));
    }
    auto& iv = intervals[k];
    if (mx == mn) {
      iv.push_back({mn, mx});
      for (std::size_t i = 0; i < n; ++i) hits[k][i].push_back(0);
      continue;
    }
    const double base = (mx - mn) / spec.cubes;
    const double half = (base / 2.0) / (1.0 - spec.overlap);
    for (int j = 0; j < spec.cubes; ++j) {
      const double center = mn + (j + 0.5) * base;
      iv.push_back({center - half, center + half});
    }
    iv.front().lo = std::min(iv.front().lo, mn);
    iv.back().hi = std::max(iv.back().hi, mx);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = image.coord(i, k);
      for (int j = 0; j < spec.cubes; ++j)
        if (iv[j].lo <= x && x <= iv[j].hi) hits[k][i].push_back(j);
      if (hits[k][i].empty()) {
        // Only reachable through rounding at an o = 0 seam: take the interval
        // the point belongs to arithmetically and widen it to contain the point.
        const int j = std::clamp(static_cast<int>(std::floor((x - mn) / base)), 0, spec.cubes - 1);
        iv[j].lo = std::min(iv[j].lo, x);
        iv[j].hi = std::max(iv[j].hi, x);
        hits[k][i].push_back(j);
      }
    }
  }

  std::vector<std::size_t> extent(d);
  for (std::size_t k = 0; k < d; ++k) extent[k] = intervals[k].size();

  std::map<std::size_t, std::vector<PointId>> members;
  std::vector<std::size_t> pick(d);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(pick.begin(), pick.end(), 0);
    for (;;) {
      std::size_t flat = 0;
      for (std::size_t k = 0; k < d; ++k) flat = flat * extent[k] + static_cast<std::size_t>(hits[k][i][pick[k]]);
      members[flat].push_back(static_cast<PointId>(i));
      std::size_t k = d;
      while (k > 0 && ++pick[k - 1] == hits[k - 1][i].size()) pick[--k] = 0;
      if (k == 0) break;
    }
  }

  std::vector<CoverElement> cover;
  cover.reserve(members.size());
  for (auto& [flat, pts] : members) {
    CoverElement e;
    e.grid_index.resize(d);
    e.lo.resize(d);
    e.hi.resize(d);
    std::size_t rest = flat;
    for (std::size_t k = d; k-- > 0;) {
      const auto j = static_cast<int>(rest % extent[k]);
      rest /= extent[k];
      e.grid_index[k] = j;
      e.lo[k] = intervals[k][j].lo;
      e.hi[k] = intervals[k][j].hi;
    }
    e.members = std::move(pts);
    cover.push_back(std::move(e));
  }
  return cover;
}

std::vector<std::vector<PointId>> local_cluster(const CoverElement& element, const DissimilarityMatrix& dm,
                                                int bins) {
  if (bins < 2) throw ValidationError("histogram needs at least 2 bins");
  const auto& pts = element.members;
  const std::size_t m = pts.size();
  if (m == 0) return {};
  if (m == 1) return {{pts[0]}};

  // Prim's algorithm on the complete graph. Every unordered pair is examined
  // exactly once, which also yields the largest pairwise distance.
  struct Edge {
    double height;
    std::size_t a;
    std::size_t b;
  };
  std::vector<Edge> mst;
  mst.reserve(m - 1);
  std::vector<double> key(m, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> via(m, 0);
  std::vector<char> in_tree(m, 0);
  double max_pair = 0.0;
  std::size_t u = 0;
  in_tree[0] = 1;
  for (std::size_t step = 1; step < m; ++step) {
    std::size_t best = m;
    for (std::size_t v = 0; v < m; ++v) {
      if (in_tree[v]) continue;
      const double w = dm(pts[u], pts[v]);
      max_pair = std::max(max_pair, w);
      if (w < key[v]) {
        key[v] = w;
        via[v] = u;
      }
      if (best == m || key[v] < key[best]) best = v;
    }
    in_tree[best] = 1;
    mst.push_back({key[best], via[best], best});
    u = best;
  }

  std::size_t cut_bin = static_cast<std::size_t>(bins);  // == no cut
  if (max_pair > 0.0) {
    const double width = max_pair / bins;
    auto bin_of = [&](double h) {
      return std::min(static_cast<std::size_t>(bins - 1), static_cast<std::size_t>(h / width));
    };
    std::vector<char> occupied(static_cast<std::size_t>(bins), 0);
    std::size_t lowest = static_cast<std::size_t>(bins);
    for (const auto& e : mst) {
      const std::size_t b = bin_of(e.height);
      occupied[b] = 1;
      lowest = std::min(lowest, b);
    }
    for (std::size_t b = lowest + 1; b < static_cast<std::size_t>(bins); ++b) {
      if (!occupied[b]) {
        cut_bin = b;
        break;
      }
    }
    // Heights below the cut's left edge are exactly those in bins < cut_bin.
    DisjointSets sets(m);
    for (const auto& e : mst)
      if (cut_bin == static_cast<std::size_t>(bins) || bin_of(e.height) < cut_bin) sets.unite(e.a, e.b);
    std::map<std::size_t, std::vector<PointId>> groups;
    for (std::size_t v = 0; v < m; ++v) groups[sets.find(v)].push_back(pts[v]);
    std::vector<std::vector<PointId>> out;
    out.reserve(groups.size());
    for (auto& [root, g] : groups) out.push_back(std::move(g));
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return out;
  }
  return {pts};
}

MapperGraph assemble_graph(const std::vector<std::vector<std::vector<PointId>>>& clusters_per_element,
                           std::size_t point_count) {
  MapperGraph g;
  g.point_count = point_count;
  std::vector<std::vector<NodeId>> point_nodes(point_count);
  for (std::size_t el = 0; el < clusters_per_element.size(); ++el) {
    std::vector<char> seen;
    for (const auto& cluster : clusters_per_element[el]) {
      if (cluster.empty()) throw InvariantViolation("empty cluster in cover element " + std::to_string(el));
      MapperNode node;
      node.id = static_cast<NodeId>(g.nodes.size());
      node.element = static_cast<std::uint32_t>(el);
      node.members = cluster;
      std::sort(node.members.begin(), node.members.end());
      for (PointId p : node.members) {
        if (p >= point_count) throw InvariantViolation("cluster member out of range");
        auto& owners = point_nodes[p];
        if (!owners.empty()) {
          const NodeId last = owners.back();
          if (g.nodes[last].element == el) throw InvariantViolation("clusters of one cover element overlap");
        }
        owners.push_back(node.id);
      }
      g.nodes.push_back(std::move(node));
    }
  }
  for (std::size_t p = 0; p < point_count; ++p) {
    if (point_nodes[p].empty()) throw InvariantViolation("point " + std::to_string(p) + " is in no Mapper node");
    const auto& owners = point_nodes[p];
    for (std::size_t a = 0; a < owners.size(); ++a)
      for (std::size_t b = a + 1; b < owners.size(); ++b) g.edges.emplace_back(owners[a], owners[b]);
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  return g;
}

std::vector<std::vector<NodeId>> MapperGraph::adjacency() const {
  std::vector<std::vector<NodeId>> adj(nodes.size());
  for (auto [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());
  return adj;
}

std::size_t MapperGraph::component_count() const {
  DisjointSets sets(nodes.size());
  for (auto [u, v] : edges) sets.unite(u, v);
  std::size_t c = 0;
  for (std::size_t v = 0; v < nodes.size(); ++v) c += (sets.find(v) == v);
  return c;
}

std::size_t MapperGraph::max_degree() const {
  std::vector<std::size_t> deg(nodes.size(), 0);
  for (auto [u, v] : edges) {
    ++deg[u];
    ++deg[v];
  }
  return deg.empty() ? 0 : *std::max_element(deg.begin(), deg.end());
}

MapperGraph run_mapper(const FilterImage& image, const DissimilarityMatrix& dm, const MapperConfig& cfg) {
  if (image.size() != dm.size()) throw ValidationError("filter image and dissimilarity matrix sizes differ");
  const auto cover = build_cover(image, cfg.cover);
  std::vector<std::vector<std::vector<PointId>>> clusters(cover.size());
  parallel_for(cover.size(), cfg.exec.threads,
               [&](std::size_t j) { clusters[j] = local_cluster(cover[j], dm, cfg.bins); });
  return assemble_graph(clusters, dm.size());
}

FilterImage mapper_filter(const PointCloud& cloud, std::size_t dims) {
  if (cloud.empty()) throw ValidationError("Mapper needs at least one point");
  bool identical = true;
  for (std::size_t i = 1; i < cloud.size() && identical; ++i)
    identical = std::equal(cloud.row(i).begin(), cloud.row(i).end(), cloud.row(0).begin());
  if (!identical) return pca_filter(cloud, dims);

  if (dims < 1 || dims > cloud.dimension()) throw ValidationError("filter dimension out of range");
  FilterImage img;
  img.dims = dims;
  img.coords.assign(cloud.size() * dims, 0.0);
  img.axes = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(cloud.dimension()), static_cast<Eigen::Index>(dims));
  img.mean = Eigen::Map<const Eigen::VectorXd>(cloud.row(0).data(), static_cast<Eigen::Index>(cloud.dimension()));
  img.singular_values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims));
  return img;
}

MapperGraph run_mapper(const PointCloud& cloud, const MapperConfig& cfg) {
  cfg.cover.validate();
  const auto dm = dissimilarity_matrix(cloud, cfg.metric, cfg.exec);
  const auto image = mapper_filter(cloud, cfg.filter_dims);
  return run_mapper(image, dm, cfg);
}

}  // namespace flaremap
