#include "glat/io.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace glat {

namespace {

Json point_to_json(const Point& p) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < p.size(); ++k) a.push_back(p(k));
  return a;
}

Point point_from_json(const Json& j, int dim) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(dim))
    throw InvalidArgument("coordinate list does not match the mesh dimension");
  Point p(dim);
  for (int k = 0; k < dim; ++k) p(k) = j[k].get<double>();
  return p;
}

const char* face_kind_name(FaceKind k) {
  switch (k) {
    case FaceKind::Triangle: return "triangle";
    case FaceKind::Square: return "square";
    case FaceKind::Polygon: return "polygon";
  }
  return "?";
}

FaceKind face_kind_from(const std::string& s) {
  if (s == "triangle") return FaceKind::Triangle;
  if (s == "square") return FaceKind::Square;
  if (s == "polygon") return FaceKind::Polygon;
  throw InvalidArgument("unknown face kind '" + s + "'");
}

}  // namespace

Json complex_to_json(const Complex& c) {
  Json j;
  j["dimension"] = c.dimension();
  j["kind"] = c.kind() == ComplexKind::Simplicial ? "simplicial" : "cubical";
  j["periods"] = point_to_json(c.periods());
  j["length_scale"] = c.length_scale();
  Json nodes = Json::array();
  for (const Point& p : c.nodes()) nodes.push_back(point_to_json(p));
  j["nodes"] = std::move(nodes);
  Json edges = Json::array();
  for (const Edge& e : c.edges()) edges.push_back({{"tail", e.tail}, {"head", e.head}, {"displacement", point_to_json(e.displacement)}});
  j["edges"] = std::move(edges);
  Json faces = Json::array();
  for (const Face& f : c.faces()) {
    Json boundary = Json::array();
    for (const OrientedEdge& oe : f.boundary) boundary.push_back({oe.edge, oe.forward ? 1 : -1});
    faces.push_back({{"kind", face_kind_name(f.kind)},
                     {"nodes", f.nodes},
                     {"boundary", std::move(boundary)},
                     {"area", f.area},
                     {"anchor", f.anchor}});
  }
  j["faces"] = std::move(faces);
  Json cells = Json::array();
  for (const Cell& k : c.cells()) cells.push_back({{"nodes", k.nodes}, {"volume", k.volume}, {"anchor", k.anchor}});
  j["cells"] = std::move(cells);
  if (const LatticeInfo* l = c.lattice()) {
    Json lat;
    lat["sites"] = l->sites;
    lat["spacing"] = l->spacing;
    lat["periodic"] = l->periodic;
    lat["node_at"] = l->node_at;
    Json cells4 = Json::array();
    for (const Cell4& k : c.cells4())
      cells4.push_back({{"node", k.node}, {"edge_frame", k.edge_frame}, {"faces", k.faces}, {"planes", k.planes}});
    lat["cells4"] = std::move(cells4);
    j["lattice"] = std::move(lat);
  }
  return j;
}

Complex complex_from_json(const Json& j) {
  const int dim = j.at("dimension").get<int>();
  if (dim < 1 || dim > 4) throw InvalidArgument("mesh dimension must be between 1 and 4");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind != "simplicial" && kind != "cubical") throw InvalidArgument("unknown mesh kind '" + kind + "'");
  ComplexBuilder b(dim, kind == "simplicial" ? ComplexKind::Simplicial : ComplexKind::Cubical,
                   point_from_json(j.at("periods"), dim), j.at("length_scale").get<double>());
  for (const Json& p : j.at("nodes")) b.add_node(point_from_json(p, dim));
  std::size_t expected = 0;
  for (const Json& e : j.at("edges")) {
    const OrientedEdge oe = b.add_edge(e.at("tail").get<NodeIndex>(), e.at("head").get<NodeIndex>(),
                                       point_from_json(e.at("displacement"), dim));
    if (oe.edge != expected++ || !oe.forward) throw InvalidArgument("mesh lists a duplicate edge");
  }
  const Json& edges = j.at("edges");
  for (const Json& f : j.at("faces")) {
    std::vector<NodeIndex> cycle = f.at("nodes").get<std::vector<NodeIndex>>();
    std::vector<Point> sides;
    for (const Json& oe : f.at("boundary")) {
      const std::size_t e = oe.at(0).get<std::size_t>();
      const Point d = point_from_json(edges.at(e).at("displacement"), dim);
      sides.push_back(oe.at(1).get<int>() > 0 ? d : Point(-d));
    }
    b.add_face(face_kind_from(f.at("kind").get<std::string>()), cycle, sides);
  }
  for (const Json& k : j.at("cells"))
    b.add_cell(k.at("nodes").get<std::vector<NodeIndex>>(), k.at("volume").get<double>(),
               k.at("anchor").get<NodeIndex>());
  if (j.contains("lattice")) {
    const Json& lat = j.at("lattice");
    LatticeInfo info;
    info.sites = lat.at("sites").get<int>();
    info.spacing = lat.at("spacing").get<double>();
    info.periodic = lat.at("periodic").get<bool>();
    info.node_at = lat.at("node_at").get<std::vector<NodeIndex>>();
    const std::size_t n = info.node_at.size();
    info.coords.resize(n);
    for (std::size_t l = 0; l < n; ++l) {
      std::array<int, 4> c{0, 0, 0, 0};
      std::size_t rest = l;
      for (int mu = 0; mu < dim; ++mu) {
        c[mu] = static_cast<int>(rest % info.sites);
        rest /= info.sites;
      }
      info.coords.at(info.node_at[l]) = c;
    }
    // Axis edges and coordinate plaquettes are recovered from the edge and
    // face lists.
    info.edge_at.assign(n * dim, kNoIndex);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const Point d = point_from_json(edges[e].at("displacement"), dim);
      for (int mu = 0; mu < dim; ++mu)
        if (d(mu) > 0.0 && std::abs(d.norm() - d(mu)) < 1e-12 * info.spacing)
          info.edge_at[edges[e].at("tail").get<std::size_t>() * dim + mu] = e;
    }
    info.face_at.assign(n * 6, kNoIndex);
    std::size_t fi = 0;
    for (const Json& f : j.at("faces")) {
      const Json& bd = f.at("boundary");
      int axes[2] = {-1, -1};
      for (int s = 0; s < 2; ++s) {
        const Point d = point_from_json(edges.at(bd.at(s).at(0).get<std::size_t>()).at("displacement"), dim);
        for (int mu = 0; mu < dim; ++mu)
          if (d(mu) != 0.0) axes[s] = mu;
      }
      if (axes[0] >= 0 && axes[1] >= 0 && axes[0] != axes[1])
        info.face_at[f.at("anchor").get<std::size_t>() * 6 + plane_index(axes[0], axes[1])] = fi;
      ++fi;
    }
    for (const Json& k : lat.at("cells4")) {
      Cell4 cell;
      cell.node = k.at("node").get<NodeIndex>();
      cell.edge_frame = k.at("edge_frame").get<std::array<EdgeIndex, 4>>();
      cell.faces = k.at("faces").get<std::array<FaceIndex, 2>>();
      cell.planes = k.at("planes").get<std::array<FaceIndex, 6>>();
      b.add_cell4(cell);
    }
    b.set_lattice(std::move(info));
  }
  return std::move(b).build();
}

std::string git_blob_sha1(const std::string& bytes) {
  const std::string payload = "blob " + std::to_string(bytes.size()) + std::string(1, '\0') + bytes;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(payload.data(), payload.size(), digest, &len, EVP_sha1(), nullptr) != 1)
    throw Error("SHA-1 digest failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str();
}

std::string complex_content_hash(const Complex& c) { return git_blob_sha1(complex_to_json(c).dump()); }

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace glat
