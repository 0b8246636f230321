#pragma once

// JSON and CSV serialisation of meshes, link fields and reports.

#include "glat/complex.hpp"
#include "glat/discretize.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace glat {

using Json = nlohmann::ordered_json;

Json complex_to_json(const Complex& c);
Complex complex_from_json(const Json& j);

/// Git blob hash ("blob <size>\0<bytes>") of the compact mesh JSON.
std::string complex_content_hash(const Complex& c);
std::string git_blob_sha1(const std::string& bytes);

/// Writes through a temporary file in the same directory and renames it.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// Deterministic rendering of a double for reports (17 significant digits).
std::string format_number(double x);

template <int N>
Json matrix_to_json(const GroupElement<N>& g) {
  Json rows = Json::array();
  for (int r = 0; r < N; ++r) {
    Json row = Json::array();
    for (int c = 0; c < N; ++c) row.push_back({g(r, c).real(), g(r, c).imag()});
    rows.push_back(row);
  }
  return rows;
}

template <int N>
GroupElement<N> matrix_from_json(const Json& j) {
  GroupElement<N> g;
  if (!j.is_array() || j.size() != static_cast<std::size_t>(N)) throw InvalidArgument("matrix has the wrong shape");
  for (int r = 0; r < N; ++r) {
    if (j[r].size() != static_cast<std::size_t>(N)) throw InvalidArgument("matrix has the wrong shape");
    for (int c = 0; c < N; ++c) g(r, c) = {j[r][c].at(0).get<double>(), j[r][c].at(1).get<double>()};
  }
  return g;
}

/// Links are written per edge in stored direction (tail -> head) and also
/// in the enumeration direction when the field carries one.
template <int N>
Json link_field_to_json(const LinkField<N>& lf) {
  require_complete(lf);
  Json j;
  j["group"] = group_name(group_kind<N>());
  j["mesh_hash"] = complex_content_hash(lf.mesh());
  j["discovery_order"] = lf.discovery_order;
  j["tree"] = lf.tree;
  j["settings"] = {{"steps_per_unit_length", lf.settings.steps_per_unit_length},
                   {"tolerance", lf.settings.tolerance},
                   {"max_doublings", lf.settings.max_doublings}};
  std::vector<std::size_t> rank;
  if (!lf.discovery_order.empty()) rank = enumeration_rank(lf.discovery_order, lf.mesh().node_count());
  Json links = Json::array();
  for (EdgeIndex e = 0; e < lf.links.size(); ++e) {
    const Edge& edge = lf.mesh().edges()[e];
    Json l;
    l["edge"] = e;
    l["tail"] = edge.tail;
    l["head"] = edge.head;
    l["value"] = matrix_to_json<N>(lf.links[e]);
    if (!rank.empty()) {
      const auto d = lf.directed(e, rank);
      l["from"] = d.from;
      l["to"] = d.to;
    }
    links.push_back(std::move(l));
  }
  j["links"] = std::move(links);
  return j;
}

template <int N>
LinkField<N> link_field_from_json(const Json& j, std::shared_ptr<const Complex> complex) {
  if (j.at("group").get<std::string>() != group_name(group_kind<N>()))
    throw InvalidArgument("link field is for group " + j.at("group").get<std::string>());
  LinkField<N> lf;
  lf.complex = std::move(complex);
  lf.links.assign(lf.complex->edge_count(), GroupElement<N>::Identity());
  std::vector<bool> seen(lf.complex->edge_count(), false);
  for (const Json& l : j.at("links")) {
    const EdgeIndex e = l.at("edge").get<EdgeIndex>();
    if (e >= lf.links.size()) throw InvalidArgument("link for unknown edge " + std::to_string(e));
    lf.links[e] = matrix_from_json<N>(l.at("value"));
    seen[e] = true;
  }
  for (EdgeIndex e = 0; e < seen.size(); ++e)
    if (!seen[e]) throw MissingLinkError("no link for edge " + std::to_string(e));
  lf.tree = j.value("tree", std::vector<EdgeIndex>{});
  lf.discovery_order = j.value("discovery_order", std::vector<NodeIndex>{});
  if (j.contains("settings")) {
    const Json& s = j["settings"];
    lf.settings.steps_per_unit_length = s.value("steps_per_unit_length", lf.settings.steps_per_unit_length);
    lf.settings.tolerance = s.value("tolerance", lf.settings.tolerance);
    lf.settings.max_doublings = s.value("max_doublings", lf.settings.max_doublings);
  }
  return lf;
}

}  // namespace glat
