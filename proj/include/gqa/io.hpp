#ifndef GQA_IO_HPP
#define GQA_IO_HPP

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gqa/common.hpp"
#include "gqa/point_cloud.hpp"

namespace gqa {

enum class CloudFormat { kPlyAscii, kXyzText };

namespace detail {

inline ParseError parse_error(const std::filesystem::path& path, int line,
                              const std::string& what) {
  return ParseError(path.string() + ":" + std::to_string(line) + ": " + what);
}

/// Splits a line into whitespace-separated tokens.
inline std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline double parse_double(const std::string& tok, const std::filesystem::path& path,
                           int line) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') {
    throw parse_error(path, line, "cannot parse number '" + tok + "'");
  }
  return v;
}

inline double parse_finite(const std::string& tok, const std::filesystem::path& path,
                           int line) {
  const double v = parse_double(tok, path, line);
  if (!std::isfinite(v)) {
    throw parse_error(path, line, "non-finite coordinate '" + tok + "'");
  }
  return v;
}

inline bool is_float_type(const std::string& t) {
  return t == "float" || t == "float32" || t == "double" || t == "float64";
}

struct PlyElement {
  std::string name;
  long count = 0;
  std::vector<std::string> properties;  // scalar property names, in order
};

inline PointCloud load_ply_ascii(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::string line;
  int lineno = 0;

  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++lineno;
    return true;
  };

  if (!next_line() || tokenize(line) != std::vector<std::string>{"ply"}) {
    throw parse_error(path, lineno ? lineno : 1, "missing 'ply' magic");
  }
  if (!next_line()) throw parse_error(path, lineno, "truncated header");
  {
    const auto toks = tokenize(line);
    if (toks.size() != 3 || toks[0] != "format" || toks[1] != "ascii") {
      throw parse_error(path, lineno, "only 'format ascii 1.0' is supported");
    }
  }

  std::vector<PlyElement> elements;
  for (;;) {
    if (!next_line()) throw parse_error(path, lineno, "header missing end_header");
    const auto toks = tokenize(line);
    if (toks.empty() || toks[0] == "comment" || toks[0] == "obj_info") continue;
    if (toks[0] == "end_header") break;
    if (toks[0] == "element") {
      if (toks.size() != 3) throw parse_error(path, lineno, "malformed element line");
      PlyElement el;
      el.name = toks[1];
      try {
        el.count = std::stol(toks[2]);
      } catch (const std::exception&) {
        throw parse_error(path, lineno, "malformed element count '" + toks[2] + "'");
      }
      if (el.count < 0) throw parse_error(path, lineno, "negative element count");
      elements.push_back(el);
    } else if (toks[0] == "property") {
      if (elements.empty()) throw parse_error(path, lineno, "property before element");
      if (toks.size() >= 2 && toks[1] == "list") {
        if (elements.back().name == "vertex") {
          throw parse_error(path, lineno, "list property in vertex element");
        }
        elements.back().properties.push_back("<list>");
        continue;
      }
      if (toks.size() != 3) throw parse_error(path, lineno, "malformed property line");
      if (elements.back().name == "vertex" && !is_float_type(toks[1]) &&
          (toks[2] == "x" || toks[2] == "y" || toks[2] == "z" || toks[2] == "nx" ||
           toks[2] == "ny" || toks[2] == "nz")) {
        throw parse_error(path, lineno, "coordinate property must be float-typed");
      }
      elements.back().properties.push_back(toks[2]);
    } else {
      throw parse_error(path, lineno, "unrecognised header line '" + toks[0] + "'");
    }
  }

  const PlyElement* vertex = nullptr;
  for (const auto& el : elements) {
    if (el.name == "vertex") vertex = &el;
  }
  if (!vertex) throw parse_error(path, lineno, "no vertex element");
  if (vertex->count == 0) throw parse_error(path, lineno, "empty cloud (0 vertices)");

  auto find_prop = [&](const char* name) -> int {
    for (std::size_t i = 0; i < vertex->properties.size(); ++i) {
      if (vertex->properties[i] == name) return static_cast<int>(i);
    }
    return -1;
  };
  const int ix = find_prop("x"), iy = find_prop("y"), iz = find_prop("z");
  const int inx = find_prop("nx"), iny = find_prop("ny"), inz = find_prop("nz");
  if (ix < 0 || iy < 0 || iz < 0) {
    throw parse_error(path, lineno, "vertex element lacks x/y/z properties");
  }
  const bool with_normals = inx >= 0 && iny >= 0 && inz >= 0;

  PointCloud pc;
  pc.points.reserve(vertex->count);
  if (with_normals) pc.normals.reserve(vertex->count);

  for (const auto& el : elements) {
    for (long row = 0; row < el.count; ++row) {
      if (!next_line()) throw parse_error(path, lineno, "unexpected end of data");
      if (&el != vertex) continue;  // other elements are skipped wholesale
      const auto toks = tokenize(line);
      if (toks.size() != el.properties.size()) {
        throw parse_error(path, lineno, "expected " +
                                            std::to_string(el.properties.size()) +
                                            " values, got " +
                                            std::to_string(toks.size()));
      }
      pc.points.emplace_back(parse_finite(toks[ix], path, lineno),
                             parse_finite(toks[iy], path, lineno),
                             parse_finite(toks[iz], path, lineno));
      if (with_normals) {
        pc.normals.emplace_back(parse_finite(toks[inx], path, lineno),
                                parse_finite(toks[iny], path, lineno),
                                parse_finite(toks[inz], path, lineno));
      }
    }
  }
  return pc;
}

inline PointCloud load_xyz_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  PointCloud pc;
  std::string line;
  int lineno = 0;
  int columns = 0;  // 3 or 6, fixed by the first data line
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto toks = tokenize(line);
    if (toks.empty() || toks[0][0] == '#') continue;
    if (columns == 0) {
      if (toks.size() != 3 && toks.size() != 6) {
        throw parse_error(path, lineno, "expected 3 or 6 columns, got " +
                                            std::to_string(toks.size()));
      }
      columns = static_cast<int>(toks.size());
    } else if (static_cast<int>(toks.size()) != columns) {
      throw parse_error(path, lineno, "inconsistent column count");
    }
    pc.points.emplace_back(parse_finite(toks[0], path, lineno),
                           parse_finite(toks[1], path, lineno),
                           parse_finite(toks[2], path, lineno));
    if (columns == 6) {
      pc.normals.emplace_back(parse_finite(toks[3], path, lineno),
                              parse_finite(toks[4], path, lineno),
                              parse_finite(toks[5], path, lineno));
    }
  }
  if (pc.empty()) throw parse_error(path, lineno ? lineno : 1, "empty cloud");
  return pc;
}

/// %.17g: shortest text that round-trips an IEEE double exactly enough.
inline void append_number(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace detail

inline CloudFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".ply") return CloudFormat::kPlyAscii;
  if (ext == ".xyz" || ext == ".txt") return CloudFormat::kXyzText;
  throw DataError("cannot infer cloud format from '" + path.string() + "'");
}

/// Loads a point cloud; normals are populated only when present in the file.
inline PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format) {
  PointCloud pc = format == CloudFormat::kPlyAscii ? detail::load_ply_ascii(path)
                                                   : detail::load_xyz_text(path);
  pc.validate();
  return pc;
}

inline PointCloud load_cloud(const std::filesystem::path& path) {
  return load_cloud(path, format_from_path(path));
}

/// Writes a point cloud. `comments` become PLY `comment` lines (ignored for
/// xyz-text). All coordinates keep full double precision.
inline void save_cloud(const std::filesystem::path& path, const PointCloud& pc,
                       CloudFormat format,
                       const std::vector<std::string>& comments = {}) {
  if (pc.empty()) throw DataError("refusing to write an empty cloud");
  pc.validate();
  std::string out;
  out.reserve(pc.size() * 60);
  if (format == CloudFormat::kPlyAscii) {
    out += "ply\nformat ascii 1.0\n";
    for (const auto& c : comments) out += "comment " + c + "\n";
    out += "element vertex " + std::to_string(pc.size()) + "\n";
    out += "property double x\nproperty double y\nproperty double z\n";
    if (pc.has_normals()) {
      out += "property double nx\nproperty double ny\nproperty double nz\n";
    }
    out += "end_header\n";
  }
  for (std::size_t i = 0; i < pc.size(); ++i) {
    const Vec3& p = pc.points[i];
    detail::append_number(out, p.x());
    out += ' ';
    detail::append_number(out, p.y());
    out += ' ';
    detail::append_number(out, p.z());
    if (pc.has_normals()) {
      const Vec3& n = pc.normals[i];
      for (int c = 0; c < 3; ++c) {
        out += ' ';
        detail::append_number(out, n[c]);
      }
    }
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);  // binary: keep \n exact
  if (!f) throw DataError("cannot write '" + path.string() + "'");
  f << out;
  if (!f) throw DataError("write failed for '" + path.string() + "'");
}

inline void save_cloud(const std::filesystem::path& path, const PointCloud& pc,
                       const std::vector<std::string>& comments = {}) {
  save_cloud(path, pc, format_from_path(path), comments);
}

}  // namespace gqa

#endif  // GQA_IO_HPP
