#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "qmflab/errors.hpp"
#include "qmflab/network.hpp"

namespace qmf {

namespace detail {

inline std::size_t line_of(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

inline const nlohmann::json& field(const nlohmann::json& obj, const char* key,
                                   const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing field '" + key + "'");
  return *it;
}

inline int int_field(const nlohmann::json& obj, const char* key,
                     const std::string& where) {
  const auto& value = field(obj, key, where);
  if (!value.is_number_integer())
    throw ParseError(where + "." + key + ": expected an integer");
  return value.get<int>();
}

inline std::string string_field(const nlohmann::json& obj, const char* key,
                                const std::string& where) {
  const auto& value = field(obj, key, where);
  if (!value.is_string()) throw ParseError(where + "." + key + ": expected a string");
  return value.get<std::string>();
}

}  // namespace detail

/// Parses and validates a network file. Throws ParseError for syntax or
/// schema problems and ValidationError for violated graph invariants.
inline TensorNetworkGraph load_network(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("line " + std::to_string(detail::line_of(text, e.byte)) +
                     ": " + e.what());
  }
  const std::string name =
      doc.contains("name") ? detail::string_field(doc, "name", "network") : "";
  std::vector<Vertex> vertices;
  const auto& jv = detail::field(doc, "vertices", "network");
  if (!jv.is_array()) throw ParseError("network.vertices: expected an array");
  for (std::size_t i = 0; i < jv.size(); ++i) {
    const std::string where = "vertices[" + std::to_string(i) + "]";
    vertices.push_back({detail::string_field(jv[i], "id", where),
                        detail::int_field(jv[i], "degree", where)});
  }
  auto vertex_index = [&](const std::string& id, const std::string& where) {
    for (std::size_t v = 0; v < vertices.size(); ++v)
      if (vertices[v].id == id) return v;
    throw ValidationError(where + ": unknown vertex '" + id + "'");
  };
  auto endpoint = [&](const nlohmann::json& j, const std::string& where) {
    const std::string id = detail::string_field(j, "vertex", where);
    return Endpoint{vertex_index(id, where), detail::int_field(j, "slot", where)};
  };
  std::vector<Edge> edges;
  const auto& je = detail::field(doc, "edges", "network");
  if (!je.is_array()) throw ParseError("network.edges: expected an array");
  for (std::size_t i = 0; i < je.size(); ++i) {
    const std::string where = "edges[" + std::to_string(i) + "]";
    const std::string kind = detail::string_field(je[i], "kind", where);
    if (kind == "closed") {
      const auto& ends = detail::field(je[i], "ends", where);
      if (!ends.is_array() || ends.size() != 2)
        throw ParseError(where + ".ends: expected an array of two endpoints");
      edges.push_back(Edge::closed(endpoint(ends[0], where + ".ends[0]"),
                                   endpoint(ends[1], where + ".ends[1]")));
    } else if (kind == "input") {
      edges.push_back(Edge::input(endpoint(detail::field(je[i], "end", where), where + ".end")));
    } else if (kind == "output") {
      edges.push_back(Edge::output(endpoint(detail::field(je[i], "end", where), where + ".end")));
    } else if (kind == "identity") {
      edges.push_back(Edge::identity());
    } else {
      throw ParseError(where + ".kind: unknown edge kind '" + kind + "'");
    }
  }
  return TensorNetworkGraph(name, std::move(vertices), std::move(edges));
}

inline TensorNetworkGraph load_network_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open network file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_network(buffer.str());
}

inline nlohmann::json network_to_json(const TensorNetworkGraph& g) {
  nlohmann::json doc;
  doc["name"] = g.name();
  doc["vertices"] = nlohmann::json::array();
  for (const auto& v : g.vertices())
    doc["vertices"].push_back({{"id", v.id}, {"degree", v.degree}});
  auto end = [&](Endpoint p) {
    return nlohmann::json{{"vertex", g.vertex(p.vertex).id}, {"slot", p.slot}};
  };
  doc["edges"] = nlohmann::json::array();
  for (const auto& e : g.edges()) {
    nlohmann::json je{{"kind", std::string(to_string(e.kind))}};
    if (e.kind == EdgeKind::closed)
      je["ends"] = {end(e.ends[0]), end(e.ends[1])};
    else if (e.kind != EdgeKind::identity)
      je["end"] = end(e.ends[0]);
    doc["edges"].push_back(std::move(je));
  }
  return doc;
}

}  // namespace qmf
