#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"

#include "flaremap/flare.hpp"
#include "flaremap/mapper.hpp"

namespace flaremap {

/// Nodes with member labels and mean period, edges as id pairs.
nlohmann::json graph_json(const MapperGraph& graph, const PointCloud& cloud);

/// Graphviz DOT; node fill runs from blue (earliest mean period) to red (latest).
void write_dot(std::ostream& out, const MapperGraph& graph, const PointCloud& cloud);

/// Self-contained HTML page with the graph JSON and census embedded.
void write_html_report(std::ostream& out, const nlohmann::json& graph, const FlareCensus* census,
                       const std::string& title);

/// "#rrggbb" on the blue->red ramp for t in [0, 1].
std::string period_color(double t);

}  // namespace flaremap
