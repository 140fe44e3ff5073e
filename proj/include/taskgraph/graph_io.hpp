#pragma once

// Task graph files: {"K": int, "edges": [[i, j, count], ...]}. Only non-zero
// counts are listed; weights are recomputed on load.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "taskgraph/graph.hpp"
#include "taskgraph/ingest.hpp"

namespace taskgraph {

inline nlohmann::ordered_json graph_to_json(const TaskGraph& graph,
                                            const std::optional<Provenance>& prov = std::nullopt) {
  nlohmann::ordered_json j;
  j["K"] = graph.size();
  auto edges = nlohmann::ordered_json::array();
  const auto K = static_cast<KeystepId>(graph.size());
  for (KeystepId a = 0; a < K; ++a)
    for (KeystepId b = 0; b < K; ++b) {
      const double c = graph.count(a, b);
      if (c <= 0.0) continue;
      // Mined graphs hold integer tallies; planted graphs may hold fractional mass.
      if (c == std::floor(c) && c < 9.0e15)
        edges.push_back({a, b, static_cast<std::int64_t>(c)});
      else
        edges.push_back({a, b, c});
    }
  j["edges"] = std::move(edges);
  if (prov) j["provenance"] = {{"config_hash", prov->config_hash}, {"seed", prov->seed}};
  return j;
}

inline TaskGraph graph_from_json(const nlohmann::json& j, const std::string& source = "<graph>") {
  if (!j.is_object() || !j.contains("K") || !j["K"].is_number_integer() || !j.contains("edges") ||
      !j["edges"].is_array())
    fail(ErrorKind::format, source + ": expected {\"K\": int, \"edges\": [[i, j, count], ...]}");
  const auto k = j["K"].get<std::int64_t>();
  if (k < 1) fail(ErrorKind::format, source + ": K must be positive");
  TransitionCounts counts(static_cast<std::size_t>(k));
  for (const auto& e : j["edges"]) {
    if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() ||
        !e[1].is_number_integer() || !e[2].is_number())
      fail(ErrorKind::format, source + ": malformed edge " + e.dump());
    const auto a = e[0].get<std::int64_t>();
    const auto b = e[1].get<std::int64_t>();
    const double c = e[2].get<double>();
    if (a < 0 || b < 0 || a >= k || b >= k)
      fail(ErrorKind::range, source + ": edge " + e.dump() + " outside K=" + std::to_string(k));
    if (!std::isfinite(c) || c < 0.0)
      fail(ErrorKind::value, source + ": edge " + e.dump() + " has an invalid count");
    counts.add(static_cast<KeystepId>(a), static_cast<KeystepId>(b), c);
  }
  return TaskGraph(std::move(counts));
}

inline void save_graph(const std::filesystem::path& path, const TaskGraph& graph,
                       const std::optional<Provenance>& prov = std::nullopt) {
  auto out = detail::open_output(path);
  out << graph_to_json(graph, prov).dump() << '\n';
}

inline TaskGraph load_graph(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::format, path.string() + ": " + e.what());
  }
  return graph_from_json(j, path.string());
}

namespace detail {

inline std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace detail

/// Directed DOT graph with each keystep's top-n successors. Keysteps without
/// support or incoming top edges are omitted.
inline void write_dot(std::ostream& out, const TaskGraph& graph, const Vocabulary* vocab,
                      std::size_t top_n, const std::optional<Provenance>& prov = std::nullopt) {
  if (vocab && vocab->size() != graph.size())
    fail(ErrorKind::dimension, "vocabulary size does not match the graph");
  auto label = [&](KeystepId k) {
    return vocab ? detail::dot_escape(vocab->name(k)) : std::to_string(k);
  };
  out << "digraph task_graph {\n";
  if (prov) out << "  // config_hash=" << prov->config_hash << " seed=" << prov->seed << '\n';
  out << "  rankdir=LR;\n  node [shape=box];\n";
  const auto K = static_cast<KeystepId>(graph.size());
  std::vector<bool> used(graph.size(), false);
  std::ostringstream edges;
  char buf[32];
  for (KeystepId a = 0; a < K; ++a) {
    if (!graph.has_support(a)) continue;
    for (const auto& [b, w] : top_transitions(graph, a, top_n)) {
      used[static_cast<std::size_t>(a)] = used[static_cast<std::size_t>(b)] = true;
      std::snprintf(buf, sizeof buf, "%.3f", w);
      edges << "  n" << a << " -> n" << b << " [label=\"" << buf << "\", penwidth="
            << (1.0 + 3.0 * w) << "];\n";
    }
  }
  for (KeystepId k = 0; k < K; ++k)
    if (used[static_cast<std::size_t>(k)]) out << "  n" << k << " [label=\"" << label(k) << "\"];\n";
  out << edges.str() << "}\n";
}

}  // namespace taskgraph
