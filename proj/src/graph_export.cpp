#include "flaremap/graph_export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <set>

namespace flaremap {

namespace {

double mean_period(const MapperNode& node, const PointCloud& cloud) {
  double s = 0.0;
  for (PointId p : node.members) s += cloud.label(p).period;
  return s / static_cast<double>(node.members.size());
}

std::string dot_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

// Escapes "</" so embedded JSON cannot close the surrounding <script> element.
std::string script_safe(std::string s) {
  for (std::size_t pos = 0; (pos = s.find("</", pos)) != std::string::npos; pos += 3) s.replace(pos, 2, "<\\/");
  return s;
}

std::string html_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string period_color(double t) {
  if (!std::isfinite(t)) t = 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(255.0 * t));
  const int b = 255 - r;
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x00%02x", r, b);
  return buf;
}

nlohmann::json graph_json(const MapperGraph& graph, const PointCloud& cloud) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& node : graph.nodes) {
    nlohmann::json members = nlohmann::json::array();
    for (PointId p : node.members) {
      const auto& l = cloud.label(p);
      members.push_back({{"entity", l.entity}, {"period", l.period}});
    }
    nodes.push_back({{"id", node.id},
                     {"element", node.element},
                     {"size", node.members.size()},
                     {"avg_period", mean_period(node, cloud)},
                     {"members", std::move(members)}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (auto [u, v] : graph.edges) edges.push_back({u, v});
  return {{"nodes", std::move(nodes)},
          {"edges", std::move(edges)},
          {"summary",
           {{"nodes", graph.nodes.size()},
            {"edges", graph.edges.size()},
            {"components", graph.component_count()},
            {"cycle_rank", graph.cycle_rank()},
            {"points", graph.point_count}}}};
}

void write_dot(std::ostream& out, const MapperGraph& graph, const PointCloud& cloud) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::vector<double> avg(graph.nodes.size());
  for (const auto& node : graph.nodes) {
    avg[node.id] = mean_period(node, cloud);
    lo = std::min(lo, avg[node.id]);
    hi = std::max(hi, avg[node.id]);
  }
  out << "graph mapper {\n  node [shape=circle, style=filled, label=\"\", fontsize=8];\n";
  for (const auto& node : graph.nodes) {
    const double t = hi > lo ? (avg[node.id] - lo) / (hi - lo) : 0.5;
    const double width = 0.1 + 0.05 * std::sqrt(static_cast<double>(node.members.size()));
    std::set<std::string> ids;
    for (PointId p : node.members) ids.insert(cloud.label(p).entity);
    std::string entities;
    for (const auto& e : ids) entities += (entities.empty() ? "" : " ") + e;
    out << "  n" << node.id << " [fillcolor=" << dot_quote(period_color(t)) << ", width=" << width
        << ", tooltip=" << dot_quote(entities) << "];\n";
  }
  for (auto [u, v] : graph.edges) out << "  n" << u << " -- n" << v << ";\n";
  out << "}\n";
}

void write_html_report(std::ostream& out, const nlohmann::json& graph, const FlareCensus* census,
                       const std::string& title) {
  out << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>" << html_escape(title)
      << "</title>\n<style>body{font-family:sans-serif;margin:2em}table{border-collapse:collapse}"
         "td,th{border:1px solid #ccc;padding:2px 8px;text-align:right}</style>\n</head>\n<body>\n<h1>"
      << html_escape(title) << "</h1>\n";
  const auto& s = graph.at("summary");
  out << "<p>" << s.at("nodes") << " nodes, " << s.at("edges") << " edges, " << s.at("components")
      << " components, cycle rank " << s.at("cycle_rank") << ", " << s.at("points") << " points.</p>\n";
  if (census) {
    const auto& h = census->histogram;
    out << "<h2>Entities by flare length</h2>\n<table>\n<tr><th>Flare length</th>";
    for (Hops k : h.lengths) out << "<th>" << k.str() << "</th>";
    out << "</tr>\n<tr><th>Frequency</th>";
    for (auto f : h.frequency) out << "<td>" << f << "</td>";
    out << "</tr>\n</table>\n";
  }
  out << "<script type=\"application/json\" id=\"graph-data\">" << script_safe(graph.dump()) << "</script>\n";
  if (census) {
    out << "<script type=\"application/json\" id=\"census-data\">"
        << script_safe(histogram_json(census->histogram).dump()) << "</script>\n";
  }
  out << "</body>\n</html>\n";
}

}  // namespace flaremap
