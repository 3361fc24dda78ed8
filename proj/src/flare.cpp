#include "flaremap/flare.hpp"

#include <algorithm>
#include <deque>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "flaremap/csv.hpp"
#include "flaremap/error.hpp"
#include "flaremap/parallel.hpp"

namespace flaremap {

std::string Hops::str() const { return is_infinite() ? "inf" : std::to_string(value_); }

EntityGraph::EntityGraph(std::vector<std::string> entities, std::vector<std::vector<std::uint32_t>> node_entities,
                         std::vector<std::pair<NodeId, NodeId>> edges)
    : entities_(std::move(entities)), node_entities_(std::move(node_entities)) {
  const std::size_t n = node_entities_.size();
  for (std::uint32_t e = 0; e < entities_.size(); ++e) {
    if (!entity_lookup_.emplace(entities_[e], e).second)
      throw ValidationError("duplicate entity id '" + entities_[e] + "'");
  }
  entity_nodes_.resize(entities_.size());
  for (NodeId v = 0; v < n; ++v) {
    auto& ents = node_entities_[v];
    std::sort(ents.begin(), ents.end());
    ents.erase(std::unique(ents.begin(), ents.end()), ents.end());
    for (auto e : ents) {
      if (e >= entities_.size()) throw ValidationError("node references an unknown entity index");
      entity_nodes_[e].push_back(v);
    }
  }
  adjacency_.resize(n);
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) throw ValidationError("edge references a missing node");
    if (u == v) throw ValidationError("self-loop at node " + std::to_string(u));
    adjacency_[u].push_back(v);
    adjacency_[v].push_back(u);
  }
  for (auto& a : adjacency_) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }

  constexpr auto kUnset = ~std::uint32_t{0};
  component_.assign(n, kUnset);
  std::deque<NodeId> queue;
  for (NodeId s = 0; s < n; ++s) {
    if (component_[s] != kUnset) continue;
    const auto label = static_cast<std::uint32_t>(component_sizes_.size());
    component_sizes_.push_back(0);
    component_[s] = label;
    queue.push_back(s);
    while (!queue.empty()) {
      const NodeId u = queue.front();
      queue.pop_front();
      ++component_sizes_[label];
      for (NodeId w : adjacency_[u]) {
        if (component_[w] == kUnset) {
          component_[w] = label;
          queue.push_back(w);
        }
      }
    }
  }
}

EntityGraph EntityGraph::from_mapper(const MapperGraph& graph, const PointCloud& cloud,
                                     const std::vector<std::string>& extra_entities) {
  if (graph.point_count != cloud.size()) throw ValidationError("graph and point cloud sizes differ");
  std::vector<std::string> ids;
  ids.reserve(cloud.size() + extra_entities.size());
  for (const auto& l : cloud.labels()) ids.push_back(l.entity);
  ids.insert(ids.end(), extra_entities.begin(), extra_entities.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  std::vector<std::uint32_t> point_entity(cloud.size());
  for (std::size_t p = 0; p < cloud.size(); ++p) {
    point_entity[p] = static_cast<std::uint32_t>(
        std::lower_bound(ids.begin(), ids.end(), cloud.label(p).entity) - ids.begin());
  }
  std::vector<std::vector<std::uint32_t>> node_entities(graph.nodes.size());
  for (const auto& node : graph.nodes)
    for (PointId p : node.members) node_entities[node.id].push_back(point_entity[p]);
  return EntityGraph(std::move(ids), std::move(node_entities), graph.edges);
}

bool EntityGraph::contains(NodeId v, std::uint32_t entity) const {
  const auto& ents = node_entities_.at(v);
  return std::binary_search(ents.begin(), ents.end(), entity);
}

std::uint32_t EntityGraph::entity_index(std::string_view id) const {
  auto it = entity_lookup_.find(id);
  if (it == entity_lookup_.end()) throw LookupError("unknown entity '" + std::string(id) + "'");
  return it->second;
}

bool EntitySubgraph::in_subgraph(NodeId v) const { return std::binary_search(nodes.begin(), nodes.end(), v); }
bool EntitySubgraph::in_interior(NodeId v) const { return std::binary_search(interior.begin(), interior.end(), v); }

EntitySubgraph entity_subgraph(const EntityGraph& graph, std::uint32_t entity) {
  if (entity >= graph.entities().size()) throw LookupError("entity index out of range");
  EntitySubgraph sub;
  sub.entity = entity;
  sub.nodes = graph.nodes_of(entity);
  sub.absent = sub.nodes.empty();
  // Boundary first: a node of G_i with any neighbor outside G_i.
  for (NodeId v : sub.nodes) {
    auto& restricted = sub.adjacency[v];
    bool on_boundary = false;
    for (NodeId w : graph.neighbors(v)) {
      if (graph.contains(w, entity)) {
        restricted.push_back(w);
      } else {
        on_boundary = true;
      }
    }
    (on_boundary ? sub.boundary : sub.interior).push_back(v);
  }
  return sub;
}

EntitySubgraph entity_subgraph(const EntityGraph& graph, std::string_view entity) {
  return entity_subgraph(graph, graph.entity_index(entity));
}

std::map<NodeId, Hops> exit_distances(const EntitySubgraph& sub) {
  std::map<NodeId, Hops> dist;
  std::deque<NodeId> queue;
  for (NodeId b : sub.boundary) {
    dist.emplace(b, Hops(0));
    queue.push_back(b);
  }
  // Unit weights: breadth-first order is shortest-path order.
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    const Hops du = dist.at(u);
    for (NodeId w : sub.adjacency.at(u)) {
      if (dist.contains(w)) continue;
      dist.emplace(w, Hops(du.value() + kUnitEdgeWeight));
      queue.push_back(w);
    }
  }
  std::map<NodeId, Hops> exits;
  for (NodeId u : sub.interior) {
    auto it = dist.find(u);
    exits.emplace(u, it == dist.end() ? Hops::infinity() : it->second);
  }
  return exits;
}

FlareSignature flare_signature(const EntitySubgraph& sub, const EntityGraph& graph) {
  const auto exits = exit_distances(sub);
  struct Component {
    Hops index;
    std::vector<NodeId> nodes;
  };
  std::vector<Component> comps;
  std::map<NodeId, bool> visited;
  for (NodeId s : sub.interior) visited[s] = false;
  for (NodeId s : sub.interior) {
    if (visited[s]) continue;
    Component c{Hops(0), {}};
    std::deque<NodeId> queue{s};
    visited[s] = true;
    while (!queue.empty()) {
      const NodeId u = queue.front();
      queue.pop_front();
      c.nodes.push_back(u);
      c.index = std::max(c.index, exits.at(u));
      for (NodeId w : sub.adjacency.at(u)) {
        auto it = visited.find(w);
        if (it != visited.end() && !it->second) {
          it->second = true;
          queue.push_back(w);
        }
      }
    }
    std::sort(c.nodes.begin(), c.nodes.end());
    const bool island = c.nodes.size() == graph.component_size(graph.components()[c.nodes.front()]);
    if (island != c.index.is_infinite()) {
      throw InvariantViolation("entity '" + graph.entities()[sub.entity] + "': component at node " +
                               std::to_string(c.nodes.front()) + (island ? " is" : " is not") +
                               " a component of G but has flare index " + c.index.str());
    }
    comps.push_back(std::move(c));
  }
  std::stable_sort(comps.begin(), comps.end(), [](const Component& a, const Component& b) { return a.index > b.index; });
  FlareSignature sig;
  sig.entity = sub.entity;
  for (auto& c : comps) {
    sig.indices.push_back(c.index);
    sig.components.push_back(std::move(c.nodes));
  }
  return sig;
}

const char* to_string(FlareType type) noexcept {
  switch (type) {
    case FlareType::Type0:
      return "Type0";
    case FlareType::Type1:
      return "Type1";
    case FlareType::Type2:
      return "Type2";
    case FlareType::Type3:
      return "Type3";
  }
  return "?";
}

FlareReport flare_report(const FlareSignature& sig, std::string entity) {
  FlareReport r;
  r.entity = std::move(entity);
  r.signature = sig.indices;
  std::sort(r.signature.begin(), r.signature.end(), std::greater<>());
  const bool any_finite = std::any_of(r.signature.begin(), r.signature.end(), [](Hops h) { return h.is_finite(); });
  const bool any_infinite = std::any_of(r.signature.begin(), r.signature.end(), [](Hops h) { return h.is_infinite(); });
  if (r.signature.empty()) {
    r.length = Hops(0);
    r.type = FlareType::Type0;
  } else if (any_finite) {
    Hops finmax(0);
    for (Hops h : r.signature)
      if (h.is_finite()) finmax = std::max(finmax, h);
    r.length = finmax;
    r.type = any_infinite ? FlareType::Type2 : FlareType::Type1;
  } else {
    r.length = Hops::infinity();
    r.type = FlareType::Type3;
  }
  return r;
}

std::string format_signature(const std::vector<Hops>& signature) {
  std::string out;
  for (std::size_t k = 0; k < signature.size(); ++k) {
    if (k) out += ';';
    out += signature[k].str();
  }
  return out;
}

FlareCensus flare_census(const EntityGraph& graph, ExecOptions exec) {
  FlareCensus census;
  const std::size_t ne = graph.entities().size();
  census.reports.resize(ne);
  parallel_for(
      ne, exec.threads,
      [&](std::size_t e) {
        const auto sub = entity_subgraph(graph, static_cast<std::uint32_t>(e));
        auto report = flare_report(flare_signature(sub, graph), graph.entities()[e]);
        report.absent = sub.absent;
        census.reports[e] = std::move(report);
      },
      8);

  auto& h = census.histogram;
  Hops::value_type max_finite = 0;
  for (const auto& r : census.reports) {
    if (r.absent) continue;
    ++h.total;
    if (r.length.is_finite()) max_finite = std::max(max_finite, r.length.value());
  }
  for (Hops::value_type k = 0; k <= max_finite; ++k) h.lengths.push_back(Hops(k));
  h.lengths.push_back(Hops::infinity());
  h.frequency.assign(h.lengths.size(), 0);
  for (const auto& r : census.reports) {
    if (r.absent) continue;
    const std::size_t slot = r.length.is_finite() ? r.length.value() : h.lengths.size() - 1;
    ++h.frequency[slot];
  }
  double cumulative = 0.0;
  std::size_t running = 0;
  for (std::size_t f : h.frequency) {
    const double pct = h.total ? 100.0 * static_cast<double>(f) / static_cast<double>(h.total) : 0.0;
    running += f;
    cumulative = h.total ? 100.0 * static_cast<double>(running) / static_cast<double>(h.total) : 0.0;
    h.percentage.push_back(pct);
    h.cumulative_percentage.push_back(cumulative);
  }
  return census;
}

void write_census_csv(std::ostream& out, const FlareCensus& census) {
  out << "entity,flare_length,type,signature\n";
  for (const auto& r : census.reports) {
    out << csv::escape_field(r.entity) << ',';
    if (r.absent) {
      out << ",absent,\n";
      continue;
    }
    out << r.length.str() << ',' << to_string(r.type) << ',' << format_signature(r.signature) << '\n';
  }
}

nlohmann::json histogram_json(const LengthHistogram& hist) {
  nlohmann::json lengths = nlohmann::json::array();
  for (Hops h : hist.lengths) lengths.push_back(h.str());
  auto round2 = [](const std::vector<double>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (double x : v) a.push_back(std::round(x * 100.0) / 100.0);
    return a;
  };
  return {{"flare_length", lengths},
          {"frequency", hist.frequency},
          {"percentage", round2(hist.percentage)},
          {"cumulative_percentage", round2(hist.cumulative_percentage)},
          {"total", hist.total}};
}

void write_histogram_table(std::ostream& out, const LengthHistogram& hist) {
  auto row = [&](const std::string& head, auto&& cell) {
    out << std::left << std::setw(14) << head;
    for (std::size_t k = 0; k < hist.lengths.size(); ++k) out << std::right << std::setw(9) << cell(k);
    out << '\n';
  };
  auto fixed2 = [](double x) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << x;
    return os.str();
  };
  row("Flare length", [&](std::size_t k) { return hist.lengths[k].is_infinite() ? std::string("inf") : hist.lengths[k].str(); });
  row("Frequency", [&](std::size_t k) { return std::to_string(hist.frequency[k]); });
  row("Percentage", [&](std::size_t k) { return fixed2(hist.percentage[k]); });
  row("Cumulative %", [&](std::size_t k) { return fixed2(hist.cumulative_percentage[k]); });
}

}  // namespace flaremap
