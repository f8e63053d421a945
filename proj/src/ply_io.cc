#include "maskval/ply_io.h"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace maskval {
namespace {

std::vector<std::string> Tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream in(line);
  std::string t;
  while (in >> t) tokens.push_back(t);
  return tokens;
}

double ParseDouble(const std::string& token, int line) {
  double value = 0.0;
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw PlyParseError(line, "expected a number, got '" + token + "'");
  }
  return value;
}

long long ParseInt(const std::string& token, int line) {
  long long value = 0;
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw PlyParseError(line, "expected an integer, got '" + token + "'");
  }
  return value;
}

bool IsScalarType(const std::string& t) {
  static const char* kTypes[] = {"char",  "uchar",  "short",   "ushort",
                                 "int",   "uint",   "float",   "double",
                                 "int8",  "uint8",  "int16",   "uint16",
                                 "int32", "uint32", "float32", "float64"};
  for (const char* k : kTypes) {
    if (t == k) return true;
  }
  return false;
}

}  // namespace

TriangleMesh ParsePly(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
    return false;
  };

  if (!next_line() || line != "ply") throw PlyParseError(1, "missing 'ply' magic");

  enum class Section { kNone, kVertex, kFace };
  Section section = Section::kNone;
  long long vertex_count = -1, face_count = -1;
  int vertex_props = 0;
  int x_index = -1, y_index = -1, z_index = -1;
  bool face_list_seen = false;
  bool format_seen = false;
  bool header_done = false;

  while (next_line()) {
    const auto tok = Tokenize(line);
    if (tok.empty()) continue;
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") {
      header_done = true;
      break;
    }
    if (tok[0] == "format") {
      if (tok.size() != 3 || tok[1] != "ascii") {
        throw PlyParseError(line_no, "only 'format ascii 1.0' is supported");
      }
      format_seen = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw PlyParseError(line_no, "malformed element line");
      const long long count = ParseInt(tok[2], line_no);
      if (count < 0) throw PlyParseError(line_no, "negative element count");
      if (tok[1] == "vertex") {
        section = Section::kVertex;
        vertex_count = count;
      } else if (tok[1] == "face") {
        section = Section::kFace;
        face_count = count;
      } else {
        throw PlyParseError(line_no, "unsupported element '" + tok[1] + "'");
      }
    } else if (tok[0] == "property") {
      if (section == Section::kVertex) {
        if (tok.size() != 3 || !IsScalarType(tok[1])) {
          throw PlyParseError(line_no, "malformed vertex property");
        }
        if (tok[2] == "x") x_index = vertex_props;
        if (tok[2] == "y") y_index = vertex_props;
        if (tok[2] == "z") z_index = vertex_props;
        ++vertex_props;
      } else if (section == Section::kFace) {
        if (tok.size() != 5 || tok[1] != "list" ||
            (tok[4] != "vertex_indices" && tok[4] != "vertex_index")) {
          throw PlyParseError(line_no,
                              "face element needs 'property list <t> <t> "
                              "vertex_indices'");
        }
        if (face_list_seen) {
          throw PlyParseError(line_no, "extra face property");
        }
        face_list_seen = true;
      } else {
        throw PlyParseError(line_no, "property outside an element");
      }
    } else {
      throw PlyParseError(line_no, "unexpected header line '" + tok[0] + "'");
    }
  }
  if (!header_done) throw PlyParseError(line_no, "missing end_header");
  if (!format_seen) throw PlyParseError(line_no, "missing format line");
  if (vertex_count < 0 || x_index < 0 || y_index < 0 || z_index < 0) {
    throw PlyParseError(line_no, "vertex element with x, y, z required");
  }
  if (face_count < 0 || !face_list_seen) {
    throw PlyParseError(line_no, "face element required");
  }
  if (face_count == 0) throw PlyParseError(line_no, "mesh has zero triangles");

  TriangleMesh mesh;
  mesh.vertices.reserve(vertex_count);
  for (long long i = 0; i < vertex_count; ++i) {
    if (!next_line()) {
      throw PlyParseError(line_no + 1, "unexpected end of file in vertex list");
    }
    const auto tok = Tokenize(line);
    if (static_cast<int>(tok.size()) != vertex_props) {
      throw PlyParseError(line_no, "expected " + std::to_string(vertex_props) +
                                       " vertex values");
    }
    mesh.vertices.emplace_back(ParseDouble(tok[x_index], line_no),
                               ParseDouble(tok[y_index], line_no),
                               ParseDouble(tok[z_index], line_no));
  }
  mesh.triangles.reserve(face_count);
  for (long long i = 0; i < face_count; ++i) {
    if (!next_line()) {
      throw PlyParseError(line_no + 1, "unexpected end of file in face list");
    }
    const auto tok = Tokenize(line);
    if (tok.size() != 4 || ParseInt(tok[0], line_no) != 3) {
      throw PlyParseError(line_no, "faces must be triangles: '3 a b c'");
    }
    std::array<std::uint32_t, 3> tri{};
    for (int c = 0; c < 3; ++c) {
      const long long idx = ParseInt(tok[c + 1], line_no);
      if (idx < 0 || idx >= vertex_count) {
        throw PlyParseError(line_no, "vertex index " + tok[c + 1] +
                                         " out of range");
      }
      tri[c] = static_cast<std::uint32_t>(idx);
    }
    mesh.triangles.push_back(tri);
  }
  while (next_line()) {
    if (!Tokenize(line).empty()) {
      throw PlyParseError(line_no, "trailing data after face list");
    }
  }
  return mesh;
}

TriangleMesh LoadMesh(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open mesh file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return ParsePly(buf.str());
  } catch (const PlyParseError& e) {
    throw PlyParseError(e.line(), e.message(), path.string());
  }
}

std::string FormatPly(const TriangleMesh& mesh) {
  std::ostringstream out;
  out.precision(17);
  out << "ply\nformat ascii 1.0\n"
      << "element vertex " << mesh.vertices.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "element face " << mesh.triangles.size() << "\n"
      << "property list uchar int vertex_indices\nend_header\n";
  for (const auto& v : mesh.vertices) {
    out << v.x() << " " << v.y() << " " << v.z() << "\n";
  }
  for (const auto& t : mesh.triangles) {
    out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  }
  return out.str();
}

void SaveMesh(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write mesh file " + path.string());
  out << FormatPly(mesh);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace maskval
