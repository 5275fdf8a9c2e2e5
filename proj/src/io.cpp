// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "aerosplat/io.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "aerosplat/errors.hpp"
#include "json.hpp"

namespace aerosplat {

namespace {

using Tokens = std::vector<std::string_view>;

Tokens split_ws(std::string_view line) {
  Tokens out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Splits on '\n', keeping empty lines (they are meaningful in images.txt).
std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

bool is_comment_or_blank(std::string_view line) {
  const std::string_view t = trim(line);
  return t.empty() || t.front() == '#';
}

template <typename T>
T parse_number(std::string_view tok, std::size_t line, const char* what) {
  T value{};
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const char* end = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(std::string("invalid ") + what + " '" + std::string(tok) + "'", line);
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) {
      throw ParseError(std::string("non-finite ") + what, line);
    }
  }
  return value;
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

// --- COLMAP -----------------------------------------------------------------

std::map<int, CameraIntrinsics> parse_colmap_cameras(std::string_view text) {
  std::map<int, CameraIntrinsics> out;
  const auto lines = split_lines(text);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    if (is_comment_or_blank(lines[li])) continue;
    const Tokens tok = split_ws(lines[li]);
    if (tok.size() < 4) throw ParseError("cameras: expected CAMERA_ID MODEL WIDTH HEIGHT PARAMS", line_no);
    const int id = parse_number<int>(tok[0], line_no, "camera id");
    const std::string model(tok[1]);
    CameraIntrinsics k;
    k.width = parse_number<int>(tok[2], line_no, "width");
    k.height = parse_number<int>(tok[3], line_no, "height");
    std::vector<double> params;
    for (std::size_t i = 4; i < tok.size(); ++i) {
      params.push_back(parse_number<double>(tok[i], line_no, "camera parameter"));
    }
    if (model == "PINHOLE") {
      if (params.size() != 4) throw ParseError("cameras: PINHOLE takes 4 parameters", line_no);
      k.fx = params[0];
      k.fy = params[1];
      k.cx = params[2];
      k.cy = params[3];
    } else if (model == "SIMPLE_PINHOLE") {
      if (params.size() != 3) {
        throw ParseError("cameras: SIMPLE_PINHOLE takes 3 parameters", line_no);
      }
      k.fx = k.fy = params[0];
      k.cx = params[1];
      k.cy = params[2];
    } else {
      throw ParseError("cameras: unsupported camera model '" + model + "'", line_no);
    }
    if (k.width <= 0 || k.height <= 0) throw ParseError("cameras: non-positive size", line_no);
    try {
      k.validate();
    } catch (const DomainError& e) {
      throw ParseError(std::string("cameras: ") + e.what(), line_no);
    }
    if (!out.emplace(id, k).second) {
      throw ParseError("cameras: duplicate camera id " + std::to_string(id), line_no);
    }
  }
  return out;
}

std::string export_colmap_cameras(const std::map<int, CameraIntrinsics>& cameras) {
  std::ostringstream os;
  os << "# Camera list with one line of data per camera:\n"
     << "#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n";
  os << std::setprecision(17);
  for (const auto& [id, k] : cameras) {
    os << id << " PINHOLE " << k.width << ' ' << k.height << ' ' << k.fx << ' ' << k.fy << ' '
       << k.cx << ' ' << k.cy << '\n';
  }
  return os.str();
}

std::vector<ColmapImage> parse_colmap_images(std::string_view text,
                                             const std::map<int, CameraIntrinsics>* cameras,
                                             std::vector<std::string>* warnings) {
  std::vector<ColmapImage> out;
  std::set<int> seen;
  const auto lines = split_lines(text);
  bool expect_image = true;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    const std::string_view t = trim(lines[li]);
    if (!t.empty() && t.front() == '#') continue;
    if (!expect_image) {
      expect_image = true;  // 2D point observations, not used
      continue;
    }
    if (t.empty()) continue;
    const Tokens tok = split_ws(t);
    if (tok.size() < 10) {
      throw ParseError("images: expected IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME", line_no);
    }
    ColmapImage img;
    img.image_id = parse_number<int>(tok[0], line_no, "image id");
    Vec4 q;
    for (int i = 0; i < 4; ++i) q[i] = parse_number<double>(tok[1 + i], line_no, "quaternion");
    Vec3 tvec;
    for (int i = 0; i < 3; ++i) tvec[i] = parse_number<double>(tok[5 + i], line_no, "translation");
    img.camera_id = parse_number<int>(tok[8], line_no, "camera id");
    // NAME is the rest of the line (may contain spaces).
    const auto name_pos = static_cast<std::size_t>(tok[9].data() - t.data());
    img.name = std::string(trim(t.substr(name_pos)));

    const double norm = q.norm();
    if (!(norm > 1e-12)) throw ParseError("images: zero quaternion", line_no);
    if (std::abs(norm - 1.0) > 1e-3 && warnings) {
      warnings->push_back("line " + std::to_string(line_no) + ": quaternion norm " +
                          format_double(norm) + " normalized");
    }
    if (cameras && !cameras->contains(img.camera_id)) {
      throw ParseError("images: unknown camera id " + std::to_string(img.camera_id), line_no);
    }
    if (!seen.insert(img.image_id).second) {
      throw ParseError("images: duplicate image id " + std::to_string(img.image_id), line_no);
    }
    const Mat3 r = quaternion_to_rotation(q / norm);
    img.pose.rotation = r.transpose();
    img.pose.center = -(r.transpose() * tvec);
    out.push_back(std::move(img));
    expect_image = false;
  }
  return out;
}

std::string export_colmap_images(const std::vector<ColmapImage>& images) {
  std::ostringstream os;
  os << "# Image list with two lines of data per image:\n"
     << "#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n"
     << "#   POINTS2D[] as (X, Y, POINT3D_ID)\n";
  os << std::setprecision(17);
  for (const ColmapImage& img : images) {
    const Mat3 r = img.pose.rotation.transpose();
    Eigen::Quaterniond q(r);
    q.normalize();
    if (q.w() < 0) q.coeffs() *= -1.0;
    const Vec3 t = -(r * img.pose.center);
    os << img.image_id << ' ' << q.w() << ' ' << q.x() << ' ' << q.y() << ' ' << q.z() << ' '
       << t.x() << ' ' << t.y() << ' ' << t.z() << ' ' << img.camera_id << ' ' << img.name
       << "\n\n";
  }
  return os.str();
}

std::vector<ColoredPoint> parse_colmap_points(std::string_view text) {
  std::vector<ColoredPoint> out;
  const auto lines = split_lines(text);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    if (is_comment_or_blank(lines[li])) continue;
    const Tokens tok = split_ws(lines[li]);
    if (tok.size() < 8) {
      throw ParseError("points3D: expected POINT3D_ID X Y Z R G B ERROR TRACK[]", line_no);
    }
    if ((tok.size() - 8) % 2 != 0) throw ParseError("points3D: odd-length track", line_no);
    parse_number<long long>(tok[0], line_no, "point id");
    ColoredPoint p;
    for (int i = 0; i < 3; ++i) p.position[i] = parse_number<double>(tok[1 + i], line_no, "coordinate");
    for (int i = 0; i < 3; ++i) {
      const int c = parse_number<int>(tok[4 + i], line_no, "color");
      if (c < 0 || c > 255) throw ParseError("points3D: color outside [0, 255]", line_no);
      p.color[i] = c / 255.0;
    }
    parse_number<double>(tok[7], line_no, "reprojection error");
    out.push_back(p);
  }
  return out;
}

std::string export_colmap_points(const std::vector<ColoredPoint>& points) {
  std::ostringstream os;
  os << "# 3D point list with one line of data per point:\n"
     << "#   POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[] as (IMAGE_ID, POINT2D_IDX)\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    os << i + 1 << ' ' << p.position.x() << ' ' << p.position.y() << ' ' << p.position.z();
    for (int c = 0; c < 3; ++c) {
      os << ' ' << static_cast<int>(std::lround(std::clamp(p.color[c], 0.0, 1.0) * 255.0));
    }
    os << " 0\n";
  }
  return os.str();
}

// --- PLY --------------------------------------------------------------------

namespace {

enum class PlyType { kI8, kU8, kI16, kU16, kI32, kU32, kF32, kF64 };

PlyType ply_type(std::string_view name, std::size_t line) {
  if (name == "char" || name == "int8") return PlyType::kI8;
  if (name == "uchar" || name == "uint8") return PlyType::kU8;
  if (name == "short" || name == "int16") return PlyType::kI16;
  if (name == "ushort" || name == "uint16") return PlyType::kU16;
  if (name == "int" || name == "int32") return PlyType::kI32;
  if (name == "uint" || name == "uint32") return PlyType::kU32;
  if (name == "float" || name == "float32") return PlyType::kF32;
  if (name == "double" || name == "float64") return PlyType::kF64;
  throw ParseError("ply: unknown property type '" + std::string(name) + "'", line);
}

std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::kI8: case PlyType::kU8: return 1;
    case PlyType::kI16: case PlyType::kU16: return 2;
    case PlyType::kI32: case PlyType::kU32: case PlyType::kF32: return 4;
    case PlyType::kF64: return 8;
  }
  return 0;
}

double ply_type_max(PlyType t) {
  switch (t) {
    case PlyType::kI8: return 127.0;
    case PlyType::kU8: return 255.0;
    case PlyType::kI16: return 32767.0;
    case PlyType::kU16: return 65535.0;
    case PlyType::kI32: return 2147483647.0;
    case PlyType::kU32: return 4294967295.0;
    default: return 1.0;
  }
}

bool ply_is_float(PlyType t) { return t == PlyType::kF32 || t == PlyType::kF64; }

template <typename T>
T load_le(const unsigned char* p) {
  using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
            std::conditional_t<sizeof(T) == 2, std::uint16_t,
            std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(U(p[i]) << (8 * i));
  return std::bit_cast<T>(u);
}

double ply_read_binary(PlyType t, const unsigned char* p) {
  switch (t) {
    case PlyType::kI8: return load_le<std::int8_t>(p);
    case PlyType::kU8: return load_le<std::uint8_t>(p);
    case PlyType::kI16: return load_le<std::int16_t>(p);
    case PlyType::kU16: return load_le<std::uint16_t>(p);
    case PlyType::kI32: return load_le<std::int32_t>(p);
    case PlyType::kU32: return load_le<std::uint32_t>(p);
    case PlyType::kF32: return load_le<float>(p);
    case PlyType::kF64: return load_le<double>(p);
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kF32;
  bool is_list = false;
  PlyType count_type = PlyType::kU8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

}  // namespace

std::vector<ColoredPoint> parse_ply_points(std::string_view bytes) {
  // Header.
  std::vector<PlyElement> elements;
  bool binary = false;
  bool have_format = false;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool ended = false;
  while (pos < bytes.size()) {
    std::size_t end = bytes.find('\n', pos);
    if (end == std::string_view::npos) break;
    std::string_view line = bytes.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;
    const Tokens tok = split_ws(line);
    if (line_no == 1) {
      if (tok.size() != 1 || tok[0] != "ply") throw ParseError("ply: missing 'ply' magic", 1);
      continue;
    }
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") {
      ended = true;
      break;
    }
    if (tok[0] == "format") {
      if (tok.size() != 3) throw ParseError("ply: malformed format line", line_no);
      if (tok[1] == "ascii") {
        binary = false;
      } else if (tok[1] == "binary_little_endian") {
        binary = true;
      } else {
        throw ParseError("ply: unsupported format '" + std::string(tok[1]) + "'", line_no);
      }
      have_format = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw ParseError("ply: malformed element line", line_no);
      elements.push_back({std::string(tok[1]),
                          parse_number<std::size_t>(tok[2], line_no, "element count"), {}});
    } else if (tok[0] == "property") {
      if (elements.empty()) throw ParseError("ply: property before element", line_no);
      PlyProperty p;
      if (tok.size() == 5 && tok[1] == "list") {
        p.is_list = true;
        p.count_type = ply_type(tok[2], line_no);
        p.type = ply_type(tok[3], line_no);
        p.name = std::string(tok[4]);
      } else if (tok.size() == 3) {
        p.type = ply_type(tok[1], line_no);
        p.name = std::string(tok[2]);
      } else {
        throw ParseError("ply: malformed property line", line_no);
      }
      elements.back().props.push_back(p);
    } else {
      throw ParseError("ply: unknown header keyword '" + std::string(tok[0]) + "'", line_no);
    }
  }
  if (!ended) throw ParseError("ply: header has no end_header", line_no);
  if (!have_format) throw ParseError("ply: header has no format line", line_no);

  const auto vertex_it = std::find_if(elements.begin(), elements.end(),
                                      [](const PlyElement& e) { return e.name == "vertex"; });
  if (vertex_it == elements.end()) throw ParseError("ply: no vertex element");
  const PlyElement& vertex = *vertex_it;
  int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
  for (std::size_t i = 0; i < vertex.props.size(); ++i) {
    const std::string& n = vertex.props[i].name;
    const int idx = static_cast<int>(i);
    if (n == "x") ix = idx;
    if (n == "y") iy = idx;
    if (n == "z") iz = idx;
    if (n == "red" || n == "r") ir = idx;
    if (n == "green" || n == "g") ig = idx;
    if (n == "blue" || n == "b") ib = idx;
  }
  if (ix < 0 || iy < 0 || iz < 0) throw ParseError("ply: vertex element lacks x, y, z");
  for (int idx : {ix, iy, iz, ir, ig, ib}) {
    if (idx >= 0 && vertex.props[idx].is_list) {
      throw ParseError("ply: list-typed vertex coordinate or color");
    }
  }
  const bool has_color = ir >= 0 && ig >= 0 && ib >= 0;

  auto to_point = [&](const std::vector<double>& values) {
    ColoredPoint p;
    p.position = Vec3(values[ix], values[iy], values[iz]);
    if (has_color) {
      const int idx[3] = {ir, ig, ib};
      for (int c = 0; c < 3; ++c) {
        const PlyType t = vertex.props[idx[c]].type;
        const double v = values[idx[c]];
        p.color[c] = std::clamp(ply_is_float(t) ? v : v / ply_type_max(t), 0.0, 1.0);
      }
    }
    for (int a = 0; a < 3; ++a) {
      if (!std::isfinite(p.position[a])) throw ParseError("ply: non-finite coordinate");
    }
    return p;
  };

  std::vector<ColoredPoint> out;
  if (vertex.count > bytes.size()) throw ParseError("ply: vertex count exceeds payload size");
  out.reserve(vertex.count);
  if (!binary) {
    for (const PlyElement& e : elements) {
      for (std::size_t k = 0; k < e.count; ++k) {
        std::size_t end = bytes.find('\n', pos);
        if (pos >= bytes.size()) throw ParseError("ply: truncated ascii payload", line_no + 1);
        if (end == std::string_view::npos) end = bytes.size();
        const std::string_view line = bytes.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (&e != &vertex) continue;
        const Tokens tok = split_ws(line);
        std::vector<double> values;
        std::size_t t = 0;
        for (const PlyProperty& p : e.props) {
          if (p.is_list) throw ParseError("ply: list property in vertex element", line_no);
          if (t >= tok.size()) throw ParseError("ply: too few values in vertex line", line_no);
          values.push_back(parse_number<double>(tok[t++], line_no, "vertex value"));
        }
        if (t != tok.size()) throw ParseError("ply: too many values in vertex line", line_no);
        out.push_back(to_point(values));
      }
      if (&e == &vertex) break;
    }
    return out;
  }

  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  for (const PlyElement& e : elements) {
    for (std::size_t k = 0; k < e.count; ++k) {
      std::vector<double> values;
      values.reserve(e.props.size());
      for (const PlyProperty& p : e.props) {
        if (p.is_list) {
          if (&e == &vertex) throw ParseError("ply: list property in vertex element");
          const std::size_t cs = ply_size(p.count_type);
          if (pos + cs > bytes.size()) throw ParseError("ply: truncated binary payload");
          const double n = ply_read_binary(p.count_type, data + pos);
          pos += cs;
          if (n < 0) throw ParseError("ply: negative list length");
          const std::size_t skip = static_cast<std::size_t>(n) * ply_size(p.type);
          if (pos + skip > bytes.size()) throw ParseError("ply: truncated binary payload");
          pos += skip;
          continue;
        }
        const std::size_t sz = ply_size(p.type);
        if (pos + sz > bytes.size()) throw ParseError("ply: truncated binary payload");
        values.push_back(ply_read_binary(p.type, data + pos));
        pos += sz;
      }
      if (&e == &vertex) out.push_back(to_point(values));
    }
    if (&e == &vertex) break;
  }
  return out;
}

std::string write_ply_points(const std::vector<ColoredPoint>& points, bool binary) {
  std::ostringstream os;
  os << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n"
     << "element vertex " << points.size() << "\n"
     << "property double x\nproperty double y\nproperty double z\n"
     << "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  std::string out = os.str();
  for (const ColoredPoint& p : points) {
    unsigned char rgb[3];
    for (int c = 0; c < 3; ++c) {
      rgb[c] = static_cast<unsigned char>(std::lround(std::clamp(p.color[c], 0.0, 1.0) * 255.0));
    }
    if (binary) {
      for (int a = 0; a < 3; ++a) {
        const auto u = std::bit_cast<std::uint64_t>(p.position[a]);
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
      }
      for (unsigned char c : rgb) out.push_back(static_cast<char>(c));
    } else {
      out += format_double(p.position.x()) + ' ' + format_double(p.position.y()) + ' ' +
             format_double(p.position.z()) + ' ' + std::to_string(rgb[0]) + ' ' +
             std::to_string(rgb[1]) + ' ' + std::to_string(rgb[2]) + '\n';
    }
  }
  return out;
}

// --- Checkpoints ------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'A', 'S', 'P', 'L'};
constexpr std::uint32_t kMaxDim = 1u << 16;

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  std::vector<std::uint8_t> bytes;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(b_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b_[pos_++]) << (8 * i);
    return v;
  }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw CheckpointError("checkpoint: truncated file");
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

GaussianScene skeleton(const ModelDims& dims, std::size_t count,
                       const std::vector<int>& image_ids, bool enabled) {
  GaussianScene s;
  s.dims = dims;
  s.modulator = AdaptiveModulator::zeros(dims);
  s.modulator.enabled = enabled;
  s.appearance = AppearanceTable::zeros(dims.appearance_dim);
  for (int id : image_ids) s.appearance.register_image(id, VecX::Zero(dims.appearance_dim));
  s.gaussians.resize(count);
  for (auto& g : s.gaussians) {
    g.f_sca = VecX::Zero(dims.feature_dim);
    g.f_opa = VecX::Zero(dims.feature_dim);
  }
  return s;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const GaussianScene& scene) {
  const std::vector<double> params = pack_parameters(scene);
  ByteWriter w;
  for (char c : kMagic) w.bytes.push_back(static_cast<std::uint8_t>(c));
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(scene.dims.feature_dim));
  w.u32(static_cast<std::uint32_t>(scene.dims.hidden_width));
  w.u32(static_cast<std::uint32_t>(scene.dims.appearance_dim));
  w.u32(scene.modulator.enabled ? 1u : 0u);
  w.u64(scene.gaussians.size());
  w.u32(static_cast<std::uint32_t>(scene.appearance.image_ids.size()));
  for (int id : scene.appearance.image_ids) w.u32(static_cast<std::uint32_t>(id));
  for (double v : params) w.f32(v);
  return std::move(w.bytes);
}

GaussianScene deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CheckpointError("checkpoint: bad magic (expected ASPL)");
  }
  ByteReader r(bytes.subspan(4));
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint: unsupported version " + std::to_string(version) +
                          " (this build reads version " + std::to_string(kCheckpointVersion) +
                          ")");
  }
  ModelDims dims;
  const std::uint32_t f = r.u32(), h = r.u32(), a = r.u32();
  if (f > kMaxDim || h > kMaxDim || a > kMaxDim) {
    throw CheckpointError("checkpoint: implausible model dimensions");
  }
  dims.feature_dim = static_cast<int>(f);
  dims.hidden_width = static_cast<int>(h);
  dims.appearance_dim = static_cast<int>(a);
  const std::uint32_t flags = r.u32();
  if (flags > 1) throw CheckpointError("checkpoint: unknown flags");
  const std::uint64_t count = r.u64();
  const std::uint32_t images = r.u32();
  if (static_cast<std::uint64_t>(images) * 4 > r.remaining()) {
    throw CheckpointError("checkpoint: truncated file");
  }
  std::vector<int> ids(images);
  for (auto& id : ids) id = static_cast<int>(r.u32());
  if (std::set<int>(ids.begin(), ids.end()).size() != ids.size()) {
    throw CheckpointError("checkpoint: duplicate appearance image id");
  }
  // Check sizes before allocating the scene.
  const std::uint64_t mlp = static_cast<std::uint64_t>(h) * (f + 1) + 2ull * h + 1;
  const std::uint64_t global = 2 * mlp + 6ull * a + static_cast<std::uint64_t>(images) * a;
  const std::uint64_t per = 14ull + 2ull * f;
  if (count > r.remaining() / (4 * per) + 1) throw CheckpointError("checkpoint: truncated file");
  const std::uint64_t expected = 4 * (global + per * count);
  if (expected != r.remaining()) {
    throw CheckpointError(expected > r.remaining() ? "checkpoint: truncated file"
                                                   : "checkpoint: trailing bytes");
  }
  GaussianScene scene = skeleton(dims, static_cast<std::size_t>(count), ids, flags == 1);
  std::vector<double> params(static_cast<std::size_t>(global + per * count));
  for (double& v : params) {
    v = r.f32();
    if (!std::isfinite(v)) throw CheckpointError("checkpoint: non-finite parameter");
  }
  unpack_parameters(params, scene);
  return scene;
}

void save_checkpoint(const GaussianScene& scene, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(scene);
  write_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

GaussianScene load_checkpoint(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  return deserialize_checkpoint(
      std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

GaussianScene quantize_to_float(const GaussianScene& scene) {
  GaussianScene out = scene;
  std::vector<double> params = pack_parameters(scene);
  for (double& v : params) v = static_cast<double>(static_cast<float>(v));
  unpack_parameters(params, out);
  return out;
}

// --- Files ------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

// --- Datasets ---------------------------------------------------------------

const char* split_name(Split s) {
  return s == Split::kTrainAerial ? "train-aerial" : "eval-ground";
}

Split DatasetBundle::split_of(const std::string& name) const {
  const auto it = splits.find(name);
  return it == splits.end() ? Split::kTrainAerial : it->second;
}

std::filesystem::path DatasetBundle::image_path(const ColmapImage& image) const {
  return root / "images" / image.name;
}

std::map<std::string, Split> parse_split_manifest(std::string_view text) {
  std::map<std::string, Split> out;
  const auto lines = split_lines(text);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    if (is_comment_or_blank(lines[li])) continue;
    const Tokens tok = split_ws(lines[li]);
    if (tok.size() != 2) throw ParseError("splits: expected NAME SPLIT", li + 1);
    Split s;
    if (tok[1] == "train-aerial") {
      s = Split::kTrainAerial;
    } else if (tok[1] == "eval-ground") {
      s = Split::kEvalGround;
    } else {
      throw ParseError("splits: unknown split '" + std::string(tok[1]) + "'", li + 1);
    }
    if (!out.emplace(std::string(tok[0]), s).second) {
      throw ParseError("splits: image '" + std::string(tok[0]) + "' listed twice", li + 1);
    }
  }
  return out;
}

DatasetBundle load_dataset(const std::filesystem::path& dir) {
  DatasetBundle b;
  b.root = dir;
  b.cameras = parse_colmap_cameras(read_file(dir / "cameras.txt"));
  b.images = parse_colmap_images(read_file(dir / "images.txt"), &b.cameras);
  if (std::filesystem::exists(dir / "points3D.txt")) {
    b.points = parse_colmap_points(read_file(dir / "points3D.txt"));
  } else if (std::filesystem::exists(dir / "points.ply")) {
    b.points = parse_ply_points(read_file(dir / "points.ply"));
  } else {
    throw DomainError("dataset: no points3D.txt or points.ply in " + dir.string());
  }
  if (std::filesystem::exists(dir / "splits.txt")) {
    b.splits = parse_split_manifest(read_file(dir / "splits.txt"));
  }
  for (const ColmapImage& img : b.images) {
    img.pose.validate();
  }
  return b;
}

void write_dataset(const std::filesystem::path& dir, const DatasetBundle& bundle,
                   const std::vector<Image>& images) {
  if (images.size() != bundle.images.size()) {
    throw DomainError("write_dataset: one image per entry required");
  }
  std::filesystem::create_directories(dir / "images");
  write_file(dir / "cameras.txt", export_colmap_cameras(bundle.cameras));
  write_file(dir / "images.txt", export_colmap_images(bundle.images));
  write_file(dir / "points3D.txt", export_colmap_points(bundle.points));
  std::ostringstream splits;
  for (const auto& [name, s] : bundle.splits) splits << name << ' ' << split_name(s) << '\n';
  write_file(dir / "splits.txt", splits.str());
  for (std::size_t i = 0; i < images.size(); ++i) {
    write_image(dir / "images" / bundle.images[i].name, images[i]);
  }
}

ProgressiveInput dataset_progressive_input(const DatasetBundle& bundle,
                                           const InitOptions& init) {
  ProgressiveInput in;
  std::vector<int> train_ids;
  for (const ColmapImage& img : bundle.images) {
    if (bundle.split_of(img.name) == Split::kTrainAerial) train_ids.push_back(img.image_id);
  }
  if (train_ids.empty()) throw DomainError("dataset: no train-aerial images");
  in.scene = init_from_points(bundle.points, init, train_ids);
  for (const ColmapImage& img : bundle.images) {
    const Camera cam{bundle.cameras.at(img.camera_id), img.pose};
    Image pixels = read_image(bundle.image_path(img));
    if (pixels.width() != cam.intrinsics.width || pixels.height() != cam.intrinsics.height) {
      throw DomainError("dataset: image '" + img.name + "' does not match its camera size");
    }
    if (pixels.channels() != 3) throw DomainError("dataset: image '" + img.name + "' is not RGB");
    if (bundle.split_of(img.name) == Split::kTrainAerial) {
      TrainingView v;
      v.id = img.image_id;
      v.camera = cam;
      v.image = std::move(pixels);
      v.appearance_id = img.image_id;
      in.views.push_back(std::move(v));
    } else {
      in.eval.push_back({img.image_id, cam, std::move(pixels)});
    }
  }
  std::vector<Vec3> positions;
  for (const ColoredPoint& p : bundle.points) positions.push_back(p.position);
  in.ground_height = ground_height(positions);
  return in;
}

// --- Stage records ----------------------------------------------------------

namespace {

using nlohmann::json;

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double number_from(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

json pose_json(const CameraPose& p) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rot.push_back(p.rotation(r, c));
  }
  return {{"rotation", rot}, {"center", {p.center.x(), p.center.y(), p.center.z()}}};
}

CameraPose pose_from(const json& j) {
  CameraPose p;
  const auto& rot = j.at("rotation");
  if (rot.size() != 9 || j.at("center").size() != 3) {
    throw ParseError("stage record: malformed pose");
  }
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) p.rotation(r, c) = rot.at(3 * r + c).get<double>();
  }
  for (int a = 0; a < 3; ++a) p.center[a] = j.at("center").at(a).get<double>();
  return p;
}

json intrinsics_json(const CameraIntrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy},
          {"width", k.width}, {"height", k.height}};
}

CameraIntrinsics intrinsics_from(const json& j) {
  CameraIntrinsics k;
  k.fx = j.at("fx").get<double>();
  k.fy = j.at("fy").get<double>();
  k.cx = j.at("cx").get<double>();
  k.cy = j.at("cy").get<double>();
  k.width = j.at("width").get<int>();
  k.height = j.at("height").get<int>();
  return k;
}

json metrics_json(const MetricsSnapshot& m) {
  json plugins = json::array();
  for (const auto& [name, v] : m.plugin_means) plugins.push_back({{"name", name}, {"mean", v}});
  json psnr = json::array();
  for (double v : m.psnr) psnr.push_back(number_or_null(v));
  return {{"stage", m.stage}, {"mean_psnr", number_or_null(m.mean_psnr)},
          {"mean_ssim", m.mean_ssim}, {"psnr", psnr}, {"ssim", m.ssim}, {"plugins", plugins}};
}

MetricsSnapshot metrics_from(const json& j) {
  MetricsSnapshot m;
  m.stage = j.at("stage").get<int>();
  m.mean_psnr = number_from(j.at("mean_psnr"));
  m.mean_ssim = j.at("mean_ssim").get<double>();
  for (const auto& v : j.at("psnr")) m.psnr.push_back(number_from(v));
  m.ssim = j.at("ssim").get<std::vector<double>>();
  for (const auto& p : j.at("plugins")) {
    m.plugin_means.emplace_back(p.at("name").get<std::string>(), p.at("mean").get<double>());
  }
  return m;
}

}  // namespace

std::string stage_record_to_json(const RefinementStage& stage) {
  json views = json::array();
  for (const ViewRecord& v : stage.views) {
    views.push_back({{"id", v.id},
                     {"source_id", v.source_id ? json(*v.source_id) : json(nullptr)},
                     {"pose", pose_json(v.pose)},
                     {"intrinsics", intrinsics_json(v.intrinsics)},
                     {"reference_index", v.reference_index},
                     {"reference_view_id", v.reference_view_id},
                     {"dssim", number_or_null(v.dssim)},
                     {"accepted", v.accepted},
                     {"weight", v.weight},
                     {"error", v.error}});
  }
  json skipped = json::array();
  for (const TrajectoryIssue& s : stage.skipped) {
    skipped.push_back({{"source_id", s.source_id}, {"message", s.message}});
  }
  json j = {{"stage", stage.stage},
            {"altitude_factor", stage.altitude_factor},
            {"strategy", strategy_name(stage.strategy)},
            {"views", views},
            {"skipped", skipped},
            {"metrics", stage.metrics ? metrics_json(*stage.metrics) : json(nullptr)}};
  return j.dump(2);
}

RefinementStage stage_record_from_json(std::string_view text) {
  RefinementStage s;
  try {
    const json j = json::parse(text);
    s.stage = j.at("stage").get<int>();
    s.altitude_factor = j.at("altitude_factor").get<double>();
    s.strategy = parse_strategy(j.at("strategy").get<std::string>());
    for (const auto& v : j.at("views")) {
      ViewRecord r;
      r.id = v.at("id").get<int>();
      if (!v.at("source_id").is_null()) r.source_id = v.at("source_id").get<int>();
      r.pose = pose_from(v.at("pose"));
      r.intrinsics = intrinsics_from(v.at("intrinsics"));
      r.reference_index = v.at("reference_index").get<std::size_t>();
      r.reference_view_id = v.at("reference_view_id").get<int>();
      r.dssim = number_from(v.at("dssim"));
      r.accepted = v.at("accepted").get<bool>();
      r.weight = v.at("weight").get<double>();
      r.error = v.at("error").get<std::string>();
      s.views.push_back(std::move(r));
    }
    for (const auto& k : j.at("skipped")) {
      s.skipped.push_back({k.at("source_id").get<int>(), k.at("message").get<std::string>()});
    }
    if (!j.at("metrics").is_null()) s.metrics = metrics_from(j.at("metrics"));
  } catch (const json::exception& e) {
    throw ParseError(std::string("stage record: ") + e.what());
  } catch (const DomainError& e) {
    throw ParseError(std::string("stage record: ") + e.what());
  }
  return s;
}

}  // namespace aerosplat
