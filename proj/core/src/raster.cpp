#include "geolift/raster.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace geolift {

namespace {

void put_f32_le(std::string& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

float get_f32(const unsigned char* p, bool little) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) {
    const int shift = little ? 8 * b : 8 * (3 - b);
    bits |= static_cast<std::uint32_t>(p[b]) << shift;
  }
  return std::bit_cast<float>(bits);
}

// Reads whitespace-separated header tokens; stops after `count` tokens and
// the single whitespace byte that follows the last one.
std::vector<std::string> header_tokens(std::string_view bytes, int count, std::size_t& pos) {
  std::vector<std::string> tokens;
  pos = 0;
  while (static_cast<int>(tokens.size()) < count) {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw ValidationError("raster: truncated header");
    tokens.emplace_back(bytes.substr(start, pos - start));
  }
  if (pos >= bytes.size()) throw ValidationError("raster: missing data");
  ++pos;
  return tokens;
}

int parse_dim(const std::string& s) {
  try {
    const int v = std::stoi(s);
    if (v < 1) throw ValidationError("raster: non-positive dimension");
    return v;
  } catch (const std::logic_error&) {
    throw ValidationError("raster: bad dimension '" + s + "'");
  }
}

}  // namespace

FeatureStack::FeatureStack(int w, int h, std::vector<std::string> channel_names)
    : width(w), height(h), names(std::move(channel_names)),
      data(static_cast<std::size_t>(w) * h * names.size(), 0.0f) {}

FeatureStack FeatureStack::concat(const std::vector<const FeatureStack*>& parts) {
  if (parts.empty()) return {};
  std::vector<std::string> names;
  for (const auto* p : parts) {
    if (p->width != parts[0]->width || p->height != parts[0]->height) {
      throw ValidationError("feature stack: concatenated shapes differ");
    }
    names.insert(names.end(), p->names.begin(), p->names.end());
  }
  FeatureStack out(parts[0]->width, parts[0]->height, std::move(names));
  const std::size_t pixels = static_cast<std::size_t>(out.width) * out.height;
  const std::size_t C = out.names.size();
  for (std::size_t px = 0; px < pixels; ++px) {
    std::size_t c0 = 0;
    for (const auto* p : parts) {
      const std::size_t pc = p->names.size();
      std::memcpy(&out.data[px * C + c0], &p->data[px * pc], pc * sizeof(float));
      c0 += pc;
    }
  }
  return out;
}

std::string encode_pfm(const DepthRaster& r) {
  std::string out = "Pf\n" + std::to_string(r.width) + " " + std::to_string(r.height) + "\n-1.0\n";
  out.reserve(out.size() + 4 * r.data.size());
  for (int y = r.height - 1; y >= 0; --y) {
    for (int x = 0; x < r.width; ++x) put_f32_le(out, static_cast<float>(r(x, y)));
  }
  return out;
}

DepthRaster decode_pfm(std::string_view bytes) {
  std::size_t pos = 0;
  const auto tok = header_tokens(bytes, 4, pos);
  if (tok[0] != "Pf") throw ValidationError("pfm: only grayscale 'Pf' is supported");
  const int w = parse_dim(tok[1]);
  const int h = parse_dim(tok[2]);
  double scale = 0.0;
  try {
    scale = std::stod(tok[3]);
  } catch (const std::logic_error&) {
    throw ValidationError("pfm: bad scale");
  }
  if (scale == 0.0) throw ValidationError("pfm: zero scale");
  const bool little = scale < 0;
  if (bytes.size() - pos < 4ull * w * h) throw ValidationError("pfm: truncated data");
  DepthRaster r(w, h);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  for (int y = h - 1; y >= 0; --y) {
    for (int x = 0; x < w; ++x, p += 4) r(x, y) = get_f32(p, little);
  }
  return r;
}

std::string encode_pgm(const CodeRaster& r) {
  std::string out = "P5\n" + std::to_string(r.width) + " " + std::to_string(r.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(r.data.data()), r.data.size());
  return out;
}

CodeRaster decode_pgm(std::string_view bytes) {
  std::size_t pos = 0;
  const auto tok = header_tokens(bytes, 4, pos);
  if (tok[0] != "P5") throw ValidationError("pgm: only binary 'P5' is supported");
  const int w = parse_dim(tok[1]);
  const int h = parse_dim(tok[2]);
  if (parse_dim(tok[3]) > 255) throw ValidationError("pgm: maxval above 255 is not supported");
  if (bytes.size() - pos < static_cast<std::size_t>(w) * h) throw ValidationError("pgm: truncated data");
  CodeRaster r(w, h);
  std::memcpy(r.data.data(), bytes.data() + pos, r.data.size());
  return r;
}

std::string encode_feature_stack(const FeatureStack& s) {
  nlohmann::ordered_json hdr;
  hdr["width"] = s.width;
  hdr["height"] = s.height;
  hdr["channels"] = s.channels();
  hdr["names"] = s.names;
  std::string out = "GLFEAT1\n" + hdr.dump() + "\n";
  out.reserve(out.size() + 4 * s.data.size());
  for (float v : s.data) put_f32_le(out, v);
  return out;
}

FeatureStack decode_feature_stack(std::string_view bytes) {
  constexpr std::string_view kMagic = "GLFEAT1\n";
  if (bytes.substr(0, kMagic.size()) != kMagic) throw ValidationError("feature stack: bad magic");
  const std::size_t eol = bytes.find('\n', kMagic.size());
  if (eol == std::string_view::npos) throw ValidationError("feature stack: missing header");
  FeatureStack s;
  try {
    const auto hdr = nlohmann::json::parse(bytes.substr(kMagic.size(), eol - kMagic.size()));
    s.width = hdr.at("width").get<int>();
    s.height = hdr.at("height").get<int>();
    s.names = hdr.at("names").get<std::vector<std::string>>();
    if (hdr.at("channels").get<int>() != s.channels()) {
      throw ValidationError("feature stack: channel count does not match names");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("feature stack: ") + e.what());
  }
  if (s.width < 1 || s.height < 1) throw ValidationError("feature stack: bad dimensions");
  const std::size_t n = static_cast<std::size_t>(s.width) * s.height * s.names.size();
  if (bytes.size() - eol - 1 < 4 * n) throw ValidationError("feature stack: truncated data");
  s.data.resize(n);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + eol + 1);
  for (std::size_t i = 0; i < n; ++i, p += 4) s.data[i] = get_f32(p, true);
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ComputationError("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ComputationError("write failed for '" + path + "'");
}

}  // namespace geolift
