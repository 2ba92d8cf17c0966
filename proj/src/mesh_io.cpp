#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "topo/errors.hpp"
#include "topo/mesh.hpp"

namespace topo {

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next non-blank line; false at end of input.
  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  }

  std::string require(const std::string& what) {
    std::string line;
    if (!next(line)) throw ParseError(0, "unexpected end of file: missing " + what);
    return line;
  }

  std::size_t line_no() const { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

std::size_t parse_count(std::istringstream& ss, std::size_t line, const char* section) {
  long long count = -1;
  if (!(ss >> count) || count < 0)
    throw ParseError(line, fmt::format("bad or missing count in '{}' header", section));
  return static_cast<std::size_t>(count);
}

}  // namespace

MeshFile parse_mesh(std::istream& in) {
  LineReader reader(in);

  std::istringstream header(reader.require("header 'topomesh v1 <dim>'"));
  std::string magic, version;
  int dim = 0;
  header >> magic >> version >> dim;
  if (magic != "topomesh" || version != "v1")
    throw ParseError(reader.line_no(), "expected header 'topomesh v1 <dim>'");
  if (dim != 2 && dim != 3) throw ParseError(reader.line_no(), "dimension must be 2 or 3");

  std::istringstream nodes_header(reader.require("section 'nodes'"));
  std::string keyword;
  nodes_header >> keyword;
  if (keyword != "nodes") throw ParseError(reader.line_no(), "expected section 'nodes'");
  const std::size_t num_nodes = parse_count(nodes_header, reader.line_no(), "nodes");

  std::vector<Point> nodes(num_nodes, Point{0, 0, 0});
  for (std::size_t i = 0; i < num_nodes; ++i) {
    std::istringstream row(reader.require(fmt::format("node row {} of section 'nodes'", i)));
    for (int d = 0; d < dim; ++d) {
      if (!(row >> nodes[i][d]))
        throw ParseError(reader.line_no(), fmt::format("node {} needs {} coordinates", i, dim));
    }
  }

  std::istringstream cells_header(reader.require("section 'cells'"));
  cells_header >> keyword;
  if (keyword != "cells") throw ParseError(reader.line_no(), "expected section 'cells'");
  const std::size_t num_cells = parse_count(cells_header, reader.line_no(), "cells");

  std::vector<Index> cells;
  cells.reserve(num_cells * (dim + 1));
  for (std::size_t c = 0; c < num_cells; ++c) {
    std::istringstream row(reader.require(fmt::format("cell row {} of section 'cells'", c)));
    std::vector<long long> ids;
    long long id = 0;
    while (row >> id) ids.push_back(id);
    if (!row.eof()) throw ParseError(reader.line_no(), "non-integer node index in cell row");
    if (ids.size() != static_cast<std::size_t>(dim + 1))
      throw UnsupportedElement(fmt::format("line {}: cell with {} nodes is not a {}D simplex",
                                           reader.line_no(), ids.size(), dim));
    for (long long v : ids) {
      if (v < 0 || static_cast<std::size_t>(v) >= num_nodes)
        throw ParseError(reader.line_no(), fmt::format("node index {} out of range", v));
      cells.push_back(static_cast<Index>(v));
    }
  }

  MeshFile file{Mesh(dim, std::move(nodes), std::move(cells)), {}};

  std::string line;
  while (reader.next(line)) {
    std::istringstream mh(line);
    std::string kind;
    int tag = -1;
    mh >> keyword >> kind;
    if (keyword != "marker") throw ParseError(reader.line_no(), "expected section 'marker'");
    if (kind != "cell" && kind != "facet")
      throw ParseError(reader.line_no(), "marker kind must be 'cell' or 'facet'");
    if (!(mh >> tag) || tag < 0) throw ParseError(reader.line_no(), "bad marker tag");
    const std::size_t count = parse_count(mh, reader.line_no(), "marker");

    const EntityKind ek = kind == "cell" ? EntityKind::Cell : EntityKind::Facet;
    EntityMarker marker = EntityMarker::empty(file.mesh, ek);
    std::size_t read = 0;
    while (read < count) {
      std::istringstream row(reader.require(
          fmt::format("{} of {} entity indices in marker section", count - read, count)));
      long long idx = 0;
      while (row >> idx) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= marker.tags.size())
          throw ParseError(reader.line_no(), fmt::format("{} index {} out of range", kind, idx));
        marker.tags[idx] = tag;
        if (++read > count) throw ParseError(reader.line_no(), "more indices than marker count");
      }
      if (!row.eof()) throw ParseError(reader.line_no(), "non-integer entity index");
    }
    file.markers.push_back(std::move(marker));
  }
  return file;
}

MeshFile load_mesh_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh file " + path.string());
  return parse_mesh(in);
}

void write_mesh(std::ostream& out, const Mesh& mesh, std::span<const EntityMarker> markers) {
  const int dim = mesh.dim();
  fmt::print(out, "topomesh v1 {}\n", dim);
  fmt::print(out, "nodes {}\n", mesh.num_nodes());
  for (const auto& p : mesh.nodes()) {
    if (dim == 2)
      fmt::print(out, "{} {}\n", p[0], p[1]);
    else
      fmt::print(out, "{} {} {}\n", p[0], p[1], p[2]);
  }
  fmt::print(out, "cells {}\n", mesh.num_cells());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) fmt::print(out, "{}\n", fmt::join(mesh.cell(c), " "));

  for (const auto& marker : markers) {
    std::vector<int> tags;
    for (int t : marker.tags)
      if (t != 0 && std::find(tags.begin(), tags.end(), t) == tags.end()) tags.push_back(t);
    std::sort(tags.begin(), tags.end());
    for (int t : tags) {
      const auto ids = marker.where_equal(t);
      fmt::print(out, "marker {} {} {}\n", marker.kind == EntityKind::Cell ? "cell" : "facet", t,
                 ids.size());
      fmt::print(out, "{}\n", fmt::join(ids, " "));
    }
  }
}

void write_mesh_file(const std::filesystem::path& path, const Mesh& mesh,
                     std::span<const EntityMarker> markers) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write mesh file " + path.string());
  write_mesh(out, mesh, markers);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace topo
