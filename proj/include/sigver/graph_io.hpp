#pragma once

#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "sigver/keypoint_graph.hpp"

namespace sigver {

/// Line-oriented text: `n m`, then n lines `id x y`, then m lines `id1 id2`.
inline void write_graph_text(std::ostream& os, const KeypointGraph& g) {
  os << g.node_count() << ' ' << g.edge_count() << '\n';
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (int v = 0; v < g.node_count(); ++v) os << v << ' ' << g.label(v).x << ' ' << g.label(v).y << '\n';
  for (const auto& [a, b] : g.edges()) os << a << ' ' << b << '\n';
}

inline KeypointGraph read_graph_text(std::istream& is) {
  int n = 0, m = 0;
  if (!(is >> n >> m) || n < 0 || m < 0) throw Error(ErrorCode::kInvalidArgument, "bad graph header");
  std::vector<Point2> labels(n);
  std::vector<bool> seen(n, false);
  for (int i = 0; i < n; ++i) {
    int id = 0;
    Point2 p;
    if (!(is >> id >> p.x >> p.y) || id < 0 || id >= n || seen[id]) {
      throw Error(ErrorCode::kInvalidArgument, "bad node line");
    }
    seen[id] = true;
    labels[id] = p;
  }
  std::vector<Edge> edges(m);
  for (auto& e : edges) {
    if (!(is >> e.first >> e.second)) throw Error(ErrorCode::kInvalidArgument, "bad edge line");
  }
  return KeypointGraph(std::move(labels), std::move(edges));
}

/// GXL export with float node attributes `x` and `y`.
inline void write_graph_gxl(std::ostream& os, const KeypointGraph& g, const std::string& id = "graph") {
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<!DOCTYPE gxl SYSTEM \"http://www.gupro.de/GXL/gxl-1.0.dtd\">\n"
     << "<gxl xmlns:xlink=\"http://www.w3.org/1999/xlink\">\n"
     << "  <graph id=\"" << id << "\" edgeids=\"false\" edgemode=\"undirected\">\n";
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (int v = 0; v < g.node_count(); ++v) {
    os << "    <node id=\"_" << v << "\">"
       << "<attr name=\"x\"><float>" << g.label(v).x << "</float></attr>"
       << "<attr name=\"y\"><float>" << g.label(v).y << "</float></attr></node>\n";
  }
  for (const auto& [a, b] : g.edges()) os << "    <edge from=\"_" << a << "\" to=\"_" << b << "\"/>\n";
  os << "  </graph>\n</gxl>\n";
}

inline std::string to_text(const KeypointGraph& g) {
  std::ostringstream os;
  write_graph_text(os, g);
  return os.str();
}

}  // namespace sigver
