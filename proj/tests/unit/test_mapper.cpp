#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "doctest.h"

#include "flaremap/error.hpp"
#include "flaremap/mapper.hpp"
#include "support.hpp"

using namespace flaremap;

namespace {

FilterImage line_image(const std::vector<double>& xs) {
  FilterImage img;
  img.dims = 1;
  img.coords = xs;
  return img;
}

CoverElement element_of(std::size_t n) {
  CoverElement e;
  for (std::size_t i = 0; i < n; ++i) e.members.push_back(static_cast<PointId>(i));
  return e;
}

DissimilarityMatrix line_matrix(const std::vector<double>& xs) {
  std::vector<std::vector<double>> rows;
  for (double x : xs) rows.push_back({x});
  return dissimilarity_matrix(fmtest::cloud_from_rows(rows), Metric::euclidean());
}

bool intersects(const std::vector<PointId>& a, const std::vector<PointId>& b) {
  std::vector<PointId> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return !out.empty();
}

// Partition from Kruskal merge heights and the histogram gap rule, computed
// without the library's clustering code.
std::set<std::vector<PointId>> oracle_partition(const std::vector<std::size_t>& pts, const DissimilarityMatrix& dm,
                                                int bins) {
  if (pts.size() == 1) return {{static_cast<PointId>(pts[0])}};
  auto heights = fmtest::kruskal_merge_heights(pts, dm);
  double maxpair = 0;
  for (auto p : pts)
    for (auto q : pts) maxpair = std::max(maxpair, dm(p, q));
  double cut = std::numeric_limits<double>::infinity();
  if (maxpair > 0) {
    std::vector<int> hist(bins, 0);
    for (double h : heights) hist[std::min(bins - 1, static_cast<int>(h / maxpair * bins))]++;
    int lowest = 0;
    while (hist[lowest] == 0) ++lowest;
    for (int b = lowest + 1; b < bins; ++b)
      if (hist[b] == 0) {
        cut = maxpair * b / bins;
        break;
      }
  }
  std::vector<std::size_t> parent(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) parent[i] = i;
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (dm(pts[i], pts[j]) < cut) parent[find(i)] = find(j);
  std::map<std::size_t, std::vector<PointId>> groups;
  for (std::size_t i = 0; i < pts.size(); ++i) groups[find(i)].push_back(static_cast<PointId>(pts[i]));
  std::set<std::vector<PointId>> out;
  for (auto& [_, g] : groups) {
    std::sort(g.begin(), g.end());
    out.insert(g);
  }
  return out;
}

void check_nerve(const MapperGraph& g) {
  std::set<std::pair<NodeId, NodeId>> edges(g.edges.begin(), g.edges.end());
  CHECK(edges.size() == g.edges.size());
  for (std::size_t u = 0; u < g.nodes.size(); ++u)
    for (std::size_t v = u + 1; v < g.nodes.size(); ++v)
      CHECK(edges.count({static_cast<NodeId>(u), static_cast<NodeId>(v)}) ==
            static_cast<std::size_t>(intersects(g.nodes[u].members, g.nodes[v].members)));
  std::vector<bool> covered(g.point_count, false);
  for (const auto& n : g.nodes) {
    CHECK_FALSE(n.members.empty());
    for (auto p : n.members) covered[p] = true;
  }
  CHECK(std::all_of(covered.begin(), covered.end(), [](bool b) { return b; }));
}

}  // namespace

TEST_CASE("cover with one cube holds everything") {
  auto img = line_image({0.0, 0.3, 1.0, 0.7});
  for (double o : {0.0, 0.5, 0.9}) {
    auto cover = build_cover(img, {1, o});
    REQUIRE(cover.size() == 1);
    CHECK(cover[0].members == std::vector<PointId>{0, 1, 2, 3});
  }
}

TEST_CASE("cover intervals follow the half-width rule") {
  auto no_overlap = build_cover(line_image({0.25, 0.75}), {2, 0.0});
  REQUIRE(no_overlap.size() == 2);
  CHECK(no_overlap[0].members == std::vector<PointId>{0});
  CHECK(no_overlap[1].members == std::vector<PointId>{1});

  auto half = build_cover(line_image({0.0, 0.5, 1.0}), {2, 0.5});
  REQUIRE(half.size() == 2);
  CHECK(half[0].lo[0] == doctest::Approx(-0.25));
  CHECK(half[0].hi[0] == doctest::Approx(0.75));
  CHECK(half[1].lo[0] == doctest::Approx(0.25));
  CHECK(half[1].hi[0] == doctest::Approx(1.25));
  CHECK(half[0].members == std::vector<PointId>{0, 1});
  CHECK(half[1].members == std::vector<PointId>{1, 2});
}

TEST_CASE("cover handles a flat dimension and rejects bad specs") {
  FilterImage img;
  img.dims = 2;
  img.coords = {0, 1, 1, 1, 2, 1};
  auto cover = build_cover(img, {4, 0.5});
  std::set<PointId> seen;
  for (const auto& e : cover) {
    CHECK(e.grid_index[1] == 0);
    seen.insert(e.members.begin(), e.members.end());
  }
  CHECK(seen.size() == 3);
  CHECK_THROWS_AS(build_cover(img, {0, 0.5}), ValidationError);
  CHECK_THROWS_AS(build_cover(img, {3, 1.0}), ValidationError);
  CHECK_THROWS_AS(build_cover(img, {3, -0.1}), ValidationError);
}

TEST_CASE("every point lands in a cover element inside its box") {
  auto cloud = fmtest::two_blob_cloud(60, 9);
  auto img = pca_filter(cloud, 2);
  for (int n : {1, 3, 10}) {
    auto cover = build_cover(img, {n, 0.3});
    std::vector<int> hits(cloud.size(), 0);
    for (const auto& e : cover) {
      CHECK_FALSE(e.members.empty());
      for (auto p : e.members) {
        ++hits[p];
        for (std::size_t k = 0; k < 2; ++k) {
          CHECK(img.coord(p, k) >= e.lo[k]);
          CHECK(img.coord(p, k) <= e.hi[k]);
        }
      }
    }
    CHECK(std::none_of(hits.begin(), hits.end(), [](int h) { return h == 0; }));
  }
}

TEST_CASE("gap heuristic examples") {
  auto single = local_cluster(element_of(1), line_matrix({3.0}), 10);
  CHECK(single == std::vector<std::vector<PointId>>{{0}});

  auto two = local_cluster(element_of(6), line_matrix({0, 0.05, 0.1, 10, 10.05, 10.1}), 10);
  CHECK(two == std::vector<std::vector<PointId>>{{0, 1, 2}, {3, 4, 5}});

  std::vector<double> even;
  for (int i = 0; i < 11; ++i) even.push_back(i);
  CHECK(local_cluster(element_of(11), line_matrix(even), 10).size() == 1);

  auto same = local_cluster(element_of(3), line_matrix({2, 2, 2}), 10);
  CHECK(same.size() == 1);
}

TEST_CASE("local clusters match a Kruskal oracle") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 2 + rng() % 30;
    auto rows = fmtest::gaussian_rows(n, 3, rng);
    for (std::size_t i = 0; i < n / 2; ++i) rows[i][0] += 8.0;
    auto dm = dissimilarity_matrix(fmtest::cloud_from_rows(rows), Metric::euclidean());
    std::vector<std::size_t> pts;
    CoverElement e;
    for (std::size_t i = 0; i < n; ++i)
      if (rng() % 3 != 0) pts.push_back(i), e.members.push_back(static_cast<PointId>(i));
    if (pts.empty()) continue;
    const int bins = 2 + static_cast<int>(rng() % 12);
    auto got = local_cluster(e, dm, bins);
    std::set<std::vector<PointId>> got_set(got.begin(), got.end());
    CHECK(got_set == oracle_partition(pts, dm, bins));
    CHECK(std::is_sorted(got.begin(), got.end(),
                         [](const auto& a, const auto& b) { return a.front() < b.front(); }));
  }
}

TEST_CASE("assemble graph from shared members") {
  auto g = assemble_graph({{{0, 1}}, {{1, 2}}}, 3);
  CHECK(g.nodes.size() == 2);
  CHECK(g.edges == std::vector<std::pair<NodeId, NodeId>>{{0, 1}});
  auto iso = assemble_graph({{{0}, {1}}, {{2}}}, 3);
  CHECK(iso.nodes.size() == 3);
  CHECK(iso.edges.empty());
  CHECK(iso.component_count() == 3);
}

TEST_CASE("nerve correctness and coverage on generated clouds") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    check_nerve(run_mapper(fmtest::circle_cloud(120, seed), {}));
    check_nerve(run_mapper(fmtest::y_cloud(40, seed), {}));
    MapperConfig cfg;
    cfg.cover = {8, 0.3};
    cfg.metric = Metric::euclidean();
    check_nerve(run_mapper(fmtest::two_blob_cloud(100, seed), cfg));
  }
}

TEST_CASE("raising overlap keeps every element-level edge") {
  auto cloud = fmtest::two_blob_cloud(80, 5);
  auto img = pca_filter(cloud, 2);
  auto edges_at = [&](double o) {
    auto cover = build_cover(img, {6, o});
    std::set<std::pair<std::vector<int>, std::vector<int>>> out;
    for (std::size_t a = 0; a < cover.size(); ++a)
      for (std::size_t b = a + 1; b < cover.size(); ++b)
        if (intersects(cover[a].members, cover[b].members)) out.insert({cover[a].grid_index, cover[b].grid_index});
    return out;
  };
  const double levels[] = {0.0, 0.2, 0.4, 0.6, 0.8};
  for (int i = 0; i + 1 < 5; ++i) {
    auto lo = edges_at(levels[i]), hi = edges_at(levels[i + 1]);
    CHECK(std::includes(hi.begin(), hi.end(), lo.begin(), lo.end()));
  }
}

TEST_CASE("mapper is deterministic across runs and thread counts") {
  auto cloud = fmtest::circle_cloud(100, 3);
  MapperConfig one;
  one.exec.threads = 1;
  MapperConfig four;
  four.exec.threads = 4;
  auto a = run_mapper(cloud, one);
  auto b = run_mapper(cloud, four);
  auto c = run_mapper(cloud, one);
  REQUIRE(a.nodes.size() == b.nodes.size());
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    CHECK(a.nodes[i].members == b.nodes[i].members);
    CHECK(a.nodes[i].members == c.nodes[i].members);
    CHECK(a.nodes[i].id == i);
  }
  CHECK(a.edges == b.edges);
  CHECK(a.edges == c.edges);
}

TEST_CASE("topology of standard shapes") {
  CHECK(run_mapper(fmtest::circle_cloud(100, 1), {}).cycle_rank() >= 1);
  CHECK(run_mapper(fmtest::two_blob_cloud(400, 1), {}).component_count() == 2);
  CHECK(run_mapper(fmtest::y_cloud(40, 1), {}).max_degree() >= 3);
  auto point = run_mapper(fmtest::cloud_from_rows({{1, 2, 3}}), {});
  CHECK(point.nodes.size() == 1);
  CHECK(point.edges.empty());
}
