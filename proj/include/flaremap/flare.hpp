#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "flaremap/mapper.hpp"

namespace flaremap {

/// Path length in a unit-weight graph, or infinity. Edge weights enter only
/// through `kUnitEdgeWeight`; positive non-unit weights would turn the BFS in
/// exit_distances into Dijkstra without changing this type.
class Hops {
 public:
  using value_type = std::uint32_t;

  constexpr Hops() = default;
  constexpr explicit Hops(value_type n) : value_(n) {}
  static constexpr Hops infinity() { return Hops(kInf); }

  constexpr bool is_infinite() const noexcept { return value_ == kInf; }
  constexpr bool is_finite() const noexcept { return value_ != kInf; }
  /// Precondition: finite.
  constexpr value_type value() const noexcept { return value_; }

  friend constexpr bool operator==(Hops, Hops) = default;
  friend constexpr auto operator<=>(Hops, Hops) = default;

  std::string str() const;

 private:
  static constexpr value_type kInf = ~value_type{0};
  value_type value_ = 0;
};

inline constexpr Hops::value_type kUnitEdgeWeight = 1;

/// A graph whose nodes are labeled with the entities they contain.
class EntityGraph {
 public:
  /// `node_entities[v]` lists entity indices (into `entities`) present in node v.
  EntityGraph(std::vector<std::string> entities, std::vector<std::vector<std::uint32_t>> node_entities,
              std::vector<std::pair<NodeId, NodeId>> edges);

  /// Labels Mapper nodes by the entities of their member points. Every entity of
  /// the cloud is registered, plus any in `extra_entities` (e.g. panel entities
  /// that produced no points).
  static EntityGraph from_mapper(const MapperGraph& graph, const PointCloud& cloud,
                                 const std::vector<std::string>& extra_entities = {});

  std::size_t node_count() const noexcept { return adjacency_.size(); }
  const std::vector<std::string>& entities() const noexcept { return entities_; }
  const std::vector<NodeId>& neighbors(NodeId v) const { return adjacency_.at(v); }
  const std::vector<std::vector<NodeId>>& adjacency() const noexcept { return adjacency_; }
  const std::vector<std::uint32_t>& entities_of(NodeId v) const { return node_entities_.at(v); }
  bool contains(NodeId v, std::uint32_t entity) const;
  /// Nodes containing the entity, ascending.
  const std::vector<NodeId>& nodes_of(std::uint32_t entity) const { return entity_nodes_.at(entity); }

  std::uint32_t entity_index(std::string_view id) const;  // throws LookupError

  /// Connected-component label per node.
  const std::vector<std::uint32_t>& components() const noexcept { return component_; }
  std::size_t component_size(std::uint32_t component) const { return component_sizes_.at(component); }

 private:
  std::vector<std::string> entities_;
  std::map<std::string, std::uint32_t, std::less<>> entity_lookup_;
  std::vector<std::vector<std::uint32_t>> node_entities_;
  std::vector<std::vector<NodeId>> entity_nodes_;
  std::vector<std::vector<NodeId>> adjacency_;
  std::vector<std::uint32_t> component_;
  std::vector<std::size_t> component_sizes_;
};

/// G_i with its interior / boundary split.
struct EntitySubgraph {
  std::uint32_t entity = 0;
  std::vector<NodeId> nodes;     // G_i, ascending
  std::vector<NodeId> interior;  // F_i, ascending
  std::vector<NodeId> boundary;  // G_i \ F_i, ascending
  std::map<NodeId, std::vector<NodeId>> adjacency;  // restricted to G_i
  bool absent = false;  // entity lies in no node

  bool in_subgraph(NodeId v) const;
  bool in_interior(NodeId v) const;
};

EntitySubgraph entity_subgraph(const EntityGraph& graph, std::uint32_t entity);
EntitySubgraph entity_subgraph(const EntityGraph& graph, std::string_view entity);

/// Exit distance of every interior node: multi-source BFS inside G_i seeded
/// at the boundary. Interior nodes the boundary cannot reach map to infinity.
std::map<NodeId, Hops> exit_distances(const EntitySubgraph& sub);

/// Multiset of flare indices, sorted descending with infinity first.
struct FlareSignature {
  std::uint32_t entity = 0;
  std::vector<Hops> indices;
  std::vector<std::vector<NodeId>> components;  // same order as `indices`
};

/// Components of the interior and their flare indices. Throws
/// InvariantViolation if the island test on the full graph disagrees with an
/// infinite index.
FlareSignature flare_signature(const EntitySubgraph& sub, const EntityGraph& graph);

enum class FlareType { Type0, Type1, Type2, Type3 };
const char* to_string(FlareType type) noexcept;

struct FlareReport {
  std::string entity;
  Hops length{0};
  FlareType type = FlareType::Type0;
  std::vector<Hops> signature;
  bool absent = false;
};

FlareReport flare_report(const FlareSignature& sig, std::string entity);

/// Text form of a signature: "inf;3;1", empty string when empty.
std::string format_signature(const std::vector<Hops>& signature);

/// Table-2 style histogram over flare lengths 0..max finite, then infinity.
struct LengthHistogram {
  std::vector<Hops> lengths;
  std::vector<std::size_t> frequency;
  std::vector<double> percentage;
  std::vector<double> cumulative_percentage;
  std::size_t total = 0;
};

struct FlareCensus {
  std::vector<FlareReport> reports;  // entity order of the graph
  LengthHistogram histogram;         // absent entities excluded
};

FlareCensus flare_census(const EntityGraph& graph, ExecOptions exec = {});

void write_census_csv(std::ostream& out, const FlareCensus& census);
nlohmann::json histogram_json(const LengthHistogram& hist);
/// Three-row text table: frequency, percentage, cumulative percentage.
void write_histogram_table(std::ostream& out, const LengthHistogram& hist);

}  // namespace flaremap
