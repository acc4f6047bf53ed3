#include "fuzzdepth/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "fuzzdepth/error.hpp"
#include "fuzzdepth/parallel.hpp"
#include "json.hpp"

namespace fuzzdepth::io {

static_assert(std::endian::native == std::endian::little, "volume I/O assumes a little-endian host");

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kNpyMagic[] = "\x93NUMPY";
constexpr std::size_t kNpyMagicLen = 6;
constexpr std::size_t kMaxDims = 4;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path.string());
  return std::move(ss).str();
}

json read_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& ex) {
    throw DataError("malformed JSON in " + path.string() + ": " + ex.what());
  }
}

void write_json(const json& j, const fs::path& path) { write_text(path, j.dump(2) + "\n"); }

std::size_t checked_count(const std::vector<std::size_t>& dims, const fs::path& path) {
  if (dims.empty() || dims.size() > kMaxDims) {
    throw DataError(path.string() + ": volumes must have 1 to 4 dimensions, got " + std::to_string(dims.size()));
  }
  std::size_t n = 1;
  for (std::size_t d : dims) {
    if (d == 0) throw DataError(path.string() + ": zero-length axis");
    if (n > std::numeric_limits<std::size_t>::max() / d) throw DataError(path.string() + ": dims overflow");
    n *= d;
  }
  return n;
}

DType dtype_from_descr(const std::string& descr, const fs::path& path) {
  if (descr == "<f4") return DType::f32;
  if (descr == "<f8") return DType::f64;
  if (descr == "|u1" || descr == "<u1" || descr == "u1") return DType::u8;
  if (descr == "|b1" || descr == "<b1" || descr == "b1") return DType::boolean;
  throw DataError(path.string() + ": unsupported dtype '" + descr + "'");
}

std::string descr_for(DType t) {
  switch (t) {
    case DType::f32: return "<f4";
    case DType::f64: return "<f8";
    case DType::u8: return "|u1";
    case DType::boolean: return "|b1";
  }
  return "";
}

DType dtype_from_name(const std::string& name, const fs::path& path) {
  if (name == "f32" || name == "float32") return DType::f32;
  if (name == "f64" || name == "float64") return DType::f64;
  if (name == "u8" || name == "uint8") return DType::u8;
  if (name == "bool") return DType::boolean;
  throw DataError(path.string() + ": unsupported dtype '" + name + "'");
}

// Minimal reader for the Python-literal dict in an .npy header.
class HeaderParser {
 public:
  HeaderParser(std::string_view text, const fs::path& path) : text_(text), path_(path) {}

  std::string_view value_of(std::string_view key) {
    for (const char q : {'\'', '"'}) {
      const std::string quoted = std::string(1, q) + std::string(key) + q;
      auto pos = text_.find(quoted);
      if (pos == std::string_view::npos) continue;
      pos = text_.find(':', pos + quoted.size());
      if (pos == std::string_view::npos) break;
      return text_.substr(pos + 1);
    }
    corrupt("missing key '" + std::string(key) + "'");
  }

  std::string string_value(std::string_view key) {
    std::string_view v = skip_space(value_of(key));
    if (v.empty() || (v[0] != '\'' && v[0] != '"')) corrupt("bad value for '" + std::string(key) + "'");
    const auto end = v.find(v[0], 1);
    if (end == std::string_view::npos) corrupt("unterminated string");
    return std::string(v.substr(1, end - 1));
  }

  bool bool_value(std::string_view key) {
    std::string_view v = skip_space(value_of(key));
    if (v.starts_with("True")) return true;
    if (v.starts_with("False")) return false;
    corrupt("bad value for '" + std::string(key) + "'");
  }

  std::vector<std::size_t> tuple_value(std::string_view key) {
    std::string_view v = skip_space(value_of(key));
    if (v.empty() || v[0] != '(') corrupt("bad shape");
    const auto end = v.find(')');
    if (end == std::string_view::npos) corrupt("unterminated shape");
    std::vector<std::size_t> dims;
    std::size_t i = 1;
    while (i < end) {
      if (std::isdigit(static_cast<unsigned char>(v[i]))) {
        unsigned long long d = 0;
        while (i < end && std::isdigit(static_cast<unsigned char>(v[i]))) {
          const unsigned digit = static_cast<unsigned>(v[i] - '0');
          if (d > (std::numeric_limits<unsigned long long>::max() - digit) / 10) corrupt("dims overflow");
          d = d * 10 + digit;
          ++i;
        }
        dims.push_back(static_cast<std::size_t>(d));
      } else if (v[i] == ',' || v[i] == ' ' || v[i] == 'L') {
        ++i;
      } else {
        corrupt("bad shape");
      }
    }
    return dims;
  }

 private:
  static std::string_view skip_space(std::string_view v) {
    while (!v.empty() && v[0] == ' ') v.remove_prefix(1);
    return v;
  }
  [[noreturn]] void corrupt(const std::string& what) const {
    throw IoError("corrupt container " + path_.string() + ": " + what);
  }

  std::string_view text_;
  const fs::path& path_;
};

struct NpyLayout {
  VolumeHeader header;
  std::size_t data_offset = 0;
};

NpyLayout parse_npy_header(std::istream& in, const fs::path& path) {
  char pre[kNpyMagicLen + 2];
  in.read(pre, sizeof pre);
  if (in.gcount() != static_cast<std::streamsize>(sizeof pre) ||
      std::memcmp(pre, kNpyMagic, kNpyMagicLen) != 0) {
    throw IoError("corrupt container " + path.string() + ": bad .npy magic");
  }
  const int major = static_cast<unsigned char>(pre[kNpyMagicLen]);
  std::size_t header_len = 0;
  std::size_t len_bytes = 0;
  if (major == 1) {
    len_bytes = 2;
  } else if (major == 2 || major == 3) {
    len_bytes = 4;
  } else {
    throw IoError("corrupt container " + path.string() + ": unsupported .npy version " + std::to_string(major));
  }
  unsigned char len_buf[4] = {0, 0, 0, 0};
  in.read(reinterpret_cast<char*>(len_buf), static_cast<std::streamsize>(len_bytes));
  if (in.gcount() != static_cast<std::streamsize>(len_bytes)) {
    throw IoError("corrupt container " + path.string() + ": truncated header");
  }
  for (std::size_t b = 0; b < len_bytes; ++b) header_len |= static_cast<std::size_t>(len_buf[b]) << (8 * b);
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (in.gcount() != static_cast<std::streamsize>(header_len)) {
    throw IoError("corrupt container " + path.string() + ": truncated header");
  }

  HeaderParser p(text, path);
  NpyLayout layout;
  layout.header.dtype = dtype_from_descr(p.string_value("descr"), path);
  if (p.bool_value("fortran_order")) throw DataError(path.string() + ": Fortran-order arrays are not supported");
  layout.header.dims = p.tuple_value("shape");
  checked_count(layout.header.dims, path);
  layout.data_offset = sizeof pre + len_bytes + header_len;
  return layout;
}

fs::path sidecar_of(const fs::path& path) { return fs::path(path.string() + ".json"); }

VolumeHeader parse_sidecar(const fs::path& path) {
  const fs::path side = sidecar_of(path);
  if (!fs::exists(side)) throw IoError("missing sidecar " + side.string());
  const json j = read_json(side);
  VolumeHeader h;
  try {
    h.dims = j.at("dims").get<std::vector<std::size_t>>();
    h.dtype = dtype_from_name(j.at("dtype").get<std::string>(), side);
    if (j.contains("order") && j.at("order").get<std::string>() != "C") {
      throw DataError(side.string() + ": only C order is supported");
    }
  } catch (const json::exception& ex) {
    throw DataError("bad sidecar " + side.string() + ": " + ex.what());
  }
  checked_count(h.dims, side);
  return h;
}

void read_payload(std::istream& in, RawVolume& v, const fs::path& path) {
  const std::size_t n = v.header.element_count() * dtype_size(v.header.dtype);
  v.bytes.resize(n);
  in.read(reinterpret_cast<char*>(v.bytes.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw IoError("corrupt container " + path.string() + ": payload truncated (expected " +
                  std::to_string(n) + " bytes, got " + std::to_string(in.gcount()) + ")");
  }
}

void write_bytes(const fs::path& path, const std::string& prefix, const std::vector<unsigned char>& payload) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(prefix.data(), static_cast<std::streamsize>(prefix.size()));
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  out.close();
  if (!out) throw IoError("write failed for " + path.string());
}

std::string npy_header(const VolumeHeader& h) {
  std::string dict = "{'descr': '" + descr_for(h.dtype) + "', 'fortran_order': False, 'shape': (";
  for (std::size_t k = 0; k < h.dims.size(); ++k) {
    dict += std::to_string(h.dims[k]);
    if (k + 1 < h.dims.size() || h.dims.size() == 1) dict += ",";
    if (k + 1 < h.dims.size()) dict += " ";
  }
  dict += "), }";
  // Magic, version and length take 10 bytes; pad so the payload is 64-byte aligned.
  const std::size_t unpadded = kNpyMagicLen + 4 + dict.size() + 1;
  dict.append((64 - unpadded % 64) % 64, ' ');
  dict += '\n';
  if (dict.size() > 0xffff) throw DataError("npy header too long");
  std::string out(kNpyMagic, kNpyMagicLen);
  out += '\x01';
  out += '\x00';
  out += static_cast<char>(dict.size() & 0xff);
  out += static_cast<char>(dict.size() >> 8);
  return out + dict;
}

void check_grid_dims(const VolumeHeader& h, const GridSpec& grid, const std::string& what) {
  const auto gd = grid.dims();
  if (!std::equal(h.dims.begin(), h.dims.end(), gd.begin(), gd.end())) {
    auto fmt = [](auto dims) {
      std::string s = "[";
      for (std::size_t k = 0; k < dims.size(); ++k) s += (k ? "," : "") + std::to_string(dims[k]);
      return s + "]";
    };
    throw DataError(what + ": dims " + fmt(h.dims) + " do not match grid dims " + fmt(gd));
  }
}

template <class T>
T load_element(const unsigned char* p) {
  T v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

double element_as_double(const RawVolume& v, std::size_t i) {
  const unsigned char* p = v.bytes.data() + i * dtype_size(v.header.dtype);
  switch (v.header.dtype) {
    case DType::f32: return static_cast<double>(load_element<float>(p));
    case DType::f64: return load_element<double>(p);
    case DType::u8: return static_cast<double>(*p);
    case DType::boolean: return *p ? 1.0 : 0.0;
  }
  return 0.0;
}

std::string_view mode_name(FuzzifyMode m) {
  switch (m) {
    case FuzzifyMode::isovalue: return "isovalue";
    case FuzzifyMode::sublevel: return "sublevel";
    case FuzzifyMode::minmax: return "minmax";
    case FuzzifyMode::scale_by_max: return "scale-by-max";
  }
  return "";
}

FuzzifySpec parse_fuzzify(const json& j, const std::string& id) {
  FuzzifySpec f;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "isovalue") {
    f.mode = FuzzifyMode::isovalue;
    f.q = j.at("q").get<double>();
    if (j.contains("width")) f.width = j.at("width").get<double>();
  } else if (mode == "sublevel") {
    f.mode = FuzzifyMode::sublevel;
    f.q = j.at("q").get<double>();
  } else if (mode == "minmax") {
    f.mode = FuzzifyMode::minmax;
  } else if (mode == "scale-by-max") {
    f.mode = FuzzifyMode::scale_by_max;
  } else {
    throw DataError("member '" + id + "': unknown fuzzify mode '" + mode + "'");
  }
  return f;
}

ProbMask apply_fuzzify(const ScalarField& f, const FuzzifySpec& spec) {
  switch (spec.mode) {
    case FuzzifyMode::isovalue:
      return fuzzy_isocontour(f, spec.q, spec.width ? *spec.width : default_fuzzy_width(f));
    case FuzzifyMode::sublevel: return hard_isocontour(f, spec.q).to_prob();
    case FuzzifyMode::minmax: return normalize_density(f, DensityNormalization::minmax);
    case FuzzifyMode::scale_by_max: return normalize_density(f, DensityNormalization::scale_by_max);
  }
  throw DataError("unknown fuzzify mode");
}

fs::path resolve(const fs::path& base_dir, const fs::path& p) { return p.is_absolute() ? p : base_dir / p; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of("\r\n") != std::string::npos) throw DataError("member ID contains a line break: " + s);
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const fs::path& path) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw DataError(path.string() + ": bad number '" + s + "'");
  return v;
}

bool safe_file_stem(const std::string& id) {
  if (id.empty() || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

std::string percentile_tag(std::size_t index, double p) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "band%02zu_p%g", index, p * 100.0);
  return buf;
}

}  // namespace

std::size_t dtype_size(DType t) {
  switch (t) {
    case DType::f32: return 4;
    case DType::f64: return 8;
    case DType::u8:
    case DType::boolean: return 1;
  }
  return 0;
}

std::string_view to_string(DType t) {
  switch (t) {
    case DType::f32: return "f32";
    case DType::f64: return "f64";
    case DType::u8: return "u8";
    case DType::boolean: return "bool";
  }
  return "";
}

std::size_t VolumeHeader::element_count() const {
  std::size_t n = 1;
  for (std::size_t d : dims) n *= d;
  return n;
}

VolumeFormat format_for(const fs::path& path) {
  return path.extension() == ".npy" ? VolumeFormat::npy : VolumeFormat::raw_json;
}

VolumeHeader read_volume_header(const fs::path& path) {
  if (format_for(path) == VolumeFormat::raw_json) return parse_sidecar(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_npy_header(in, path).header;
}

RawVolume read_volume(const fs::path& path) {
  RawVolume v;
  if (format_for(path) == VolumeFormat::raw_json) {
    v.header = parse_sidecar(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    read_payload(in, v, path);
    return v;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  v.header = parse_npy_header(in, path).header;
  read_payload(in, v, path);
  return v;
}

void write_volume(const RawVolume& v, const fs::path& path) {
  const std::size_t n = checked_count(v.header.dims, path);
  if (v.bytes.size() != n * dtype_size(v.header.dtype)) {
    throw InvalidArgument("volume payload size does not match its header");
  }
  if (format_for(path) == VolumeFormat::npy) {
    write_bytes(path, npy_header(v.header), v.bytes);
    return;
  }
  write_bytes(path, "", v.bytes);
  write_json(json{{"dims", v.header.dims}, {"dtype", std::string(to_string(v.header.dtype))}, {"order", "C"}},
             sidecar_of(path));
}

ScalarField to_field(const RawVolume& v, const GridSpec& grid) {
  check_grid_dims(v.header, grid, "volume");
  std::vector<double> values(v.header.element_count());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = element_as_double(v, i);
  return ScalarField(grid, std::move(values));
}

ProbMask to_mask(const RawVolume& v, const GridSpec& grid) {
  check_grid_dims(v.header, grid, "volume");
  const std::size_t n = v.header.element_count();
  switch (v.header.dtype) {
    case DType::f32: {
      std::vector<float> values(n);
      std::memcpy(values.data(), v.bytes.data(), n * sizeof(float));
      return ProbMask(grid, std::move(values));
    }
    case DType::f64: {
      std::vector<double> values(n);
      std::memcpy(values.data(), v.bytes.data(), n * sizeof(double));
      return ProbMask::from_doubles(grid, values);
    }
    case DType::u8:
    case DType::boolean: {
      std::vector<float> values(n);
      for (std::size_t i = 0; i < n; ++i) values[i] = v.bytes[i] ? 1.0f : 0.0f;
      return ProbMask(grid, std::move(values));
    }
  }
  throw DataError("unsupported dtype");
}

RawVolume to_volume(const ProbMask& u) {
  RawVolume v{{{u.grid().dims().begin(), u.grid().dims().end()}, DType::f32}, {}};
  v.bytes.resize(u.size() * sizeof(float));
  std::memcpy(v.bytes.data(), u.values().data(), v.bytes.size());
  return v;
}

RawVolume to_volume(const BinaryMask& b) {
  RawVolume v{{{b.grid().dims().begin(), b.grid().dims().end()}, DType::u8}, {}};
  v.bytes.assign(b.bits().begin(), b.bits().end());
  return v;
}

RawVolume to_volume(const ScalarField& f) {
  RawVolume v{{{f.grid().dims().begin(), f.grid().dims().end()}, DType::f64}, {}};
  v.bytes.resize(f.size() * sizeof(double));
  std::memcpy(v.bytes.data(), f.values().data(), v.bytes.size());
  return v;
}

ProbMask read_mask(const fs::path& path) {
  const RawVolume v = read_volume(path);
  return to_mask(v, GridSpec(v.header.dims));
}

ScalarField read_field(const fs::path& path) {
  const RawVolume v = read_volume(path);
  return to_field(v, GridSpec(v.header.dims));
}

void write_volume(const ProbMask& u, const fs::path& path) { write_volume(to_volume(u), path); }
void write_volume(const BinaryMask& b, const fs::path& path) { write_volume(to_volume(b), path); }
void write_volume(const ScalarField& f, const fs::path& path) { write_volume(to_volume(f), path); }

Manifest parse_manifest(const fs::path& path) {
  const json j = read_json(path);
  Manifest m;
  try {
    const json& grid = j.at("grid");
    m.dims = grid.at("dims").get<std::vector<std::size_t>>();
    if (grid.contains("weights_path") && !grid.at("weights_path").is_null()) {
      m.weights_path = fs::path(grid.at("weights_path").get<std::string>());
    }
    for (const json& jm : j.at("members")) {
      ManifestMember mm;
      mm.id = jm.at("id").get<std::string>();
      mm.path = fs::path(jm.at("path").get<std::string>());
      const std::string role = jm.value("role", "mask");
      if (role == "field") {
        mm.is_field = true;
      } else if (role != "mask") {
        throw DataError("member '" + mm.id + "': unknown role '" + role + "'");
      }
      if (jm.contains("fuzzify") && !jm.at("fuzzify").is_null()) mm.fuzzify = parse_fuzzify(jm.at("fuzzify"), mm.id);
      if (mm.is_field && !mm.fuzzify) throw DataError("member '" + mm.id + "': role \"field\" needs a fuzzify entry");
      if (!mm.is_field && mm.fuzzify) throw DataError("member '" + mm.id + "': fuzzify applies to role \"field\" only");
      m.members.push_back(std::move(mm));
    }
  } catch (const json::exception& ex) {
    throw DataError("bad manifest " + path.string() + ": " + ex.what());
  }
  if (m.members.empty()) throw DataError("manifest " + path.string() + " lists no members");
  return m;
}

void write_manifest(const Manifest& m, const fs::path& path) {
  json grid{{"dims", m.dims}};
  if (m.weights_path) grid["weights_path"] = m.weights_path->generic_string();
  json members = json::array();
  for (const ManifestMember& mm : m.members) {
    json jm{{"id", mm.id}, {"path", mm.path.generic_string()}, {"role", mm.is_field ? "field" : "mask"}};
    if (mm.fuzzify) {
      json f{{"mode", std::string(mode_name(mm.fuzzify->mode))}};
      if (mm.fuzzify->mode == FuzzifyMode::isovalue || mm.fuzzify->mode == FuzzifyMode::sublevel) {
        f["q"] = mm.fuzzify->q;
      }
      if (mm.fuzzify->width) f["width"] = *mm.fuzzify->width;
      jm["fuzzify"] = f;
    }
    members.push_back(std::move(jm));
  }
  write_json(json{{"grid", grid}, {"members", members}}, path);
}

Ensemble read_manifest(const fs::path& path) {
  const Manifest m = parse_manifest(path);
  const fs::path base = path.parent_path();

  GridSpec grid = [&] {
    if (!m.weights_path) return GridSpec(m.dims);
    const fs::path wp = resolve(base, *m.weights_path);
    const RawVolume w = read_volume(wp);
    if (w.header.dtype != DType::f64) throw DataError(wp.string() + ": weights must be f64");
    std::vector<double> weights(w.header.element_count());
    std::memcpy(weights.data(), w.bytes.data(), w.bytes.size());
    GridSpec uniform(m.dims);
    if (weights.size() != uniform.cell_count()) {
      throw DataError(wp.string() + ": " + std::to_string(weights.size()) + " weights for " +
                      std::to_string(uniform.cell_count()) + " cells");
    }
    return GridSpec(m.dims, std::move(weights));
  }();

  std::vector<std::string> ids;
  std::vector<Ensemble::Loader> loaders;
  for (const ManifestMember& mm : m.members) {
    const fs::path p = resolve(base, mm.path);
    if (!fs::exists(p)) throw IoError("member '" + mm.id + "': missing file " + p.string());
    VolumeHeader h;
    try {
      h = read_volume_header(p);
      check_grid_dims(h, grid, "member '" + mm.id + "'");
    } catch (const IoError& ex) {
      throw IoError("member '" + mm.id + "': " + ex.what());
    }
    ids.push_back(mm.id);
    loaders.push_back([p, grid, mm] {
      try {
        const RawVolume v = read_volume(p);
        if (mm.is_field) return apply_fuzzify(to_field(v, grid), *mm.fuzzify);
        return to_mask(v, grid);
      } catch (const DataError& ex) {
        throw DataError("member '" + mm.id + "': " + ex.what());
      } catch (const IoError& ex) {
        throw IoError("member '" + mm.id + "': " + ex.what());
      } catch (const InvalidArgument& ex) {
        throw DataError("member '" + mm.id + "': " + ex.what());
      }
    });
  }
  return Ensemble::lazy(std::move(grid), std::move(ids), std::move(loaders));
}

fs::path write_ensemble(const Ensemble& e, const fs::path& dir, std::size_t workers) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());

  Manifest m;
  m.dims.assign(e.grid().dims().begin(), e.grid().dims().end());
  if (!e.grid().is_uniform()) {
    m.weights_path = "weights.npy";
    RawVolume w{{{e.grid().cell_count()}, DType::f64}, {}};
    w.bytes.resize(e.grid().cell_count() * sizeof(double));
    std::memcpy(w.bytes.data(), e.grid().weights().data(), w.bytes.size());
    write_volume(w, dir / "weights.npy");
  }
  for (std::size_t i = 0; i < e.size(); ++i) {
    const std::string& id = e.ids()[i];
    char fallback[32];
    std::snprintf(fallback, sizeof fallback, "member_%06zu", i);
    m.members.push_back({id, fs::path((safe_file_stem(id) ? id : std::string(fallback)) + ".npy"), false, {}});
  }
  parallel_for(e.size(), workers, [&](std::size_t i) { write_volume(e.member(i), dir / m.members[i].path); });
  const fs::path manifest = dir / "manifest.json";
  write_manifest(m, manifest);
  return manifest;
}

void write_depth_csv(const DepthResult& d, const fs::path& path, const std::vector<std::size_t>& dims) {
  std::string text = "id,in_in,in_out,depth,rank,method\n";
  const std::string method(to_string(d.method));
  for (std::size_t i = 0; i < d.size(); ++i) {
    text += csv_field(d.ids[i]) + ',' + fmt_double(d.in_in[i]) + ',' + fmt_double(d.in_out[i]) + ',' +
            fmt_double(d.depth[i]) + ',' + std::to_string(d.rank[i]) + ',' + method + '\n';
  }
  write_text(path, text);
  write_json(json{{"method", method},
                  {"cv_mass", d.cv_mass},
                  {"elapsed_seconds", d.elapsed_seconds},
                  {"n", d.size()},
                  {"dims", dims},
                  {"workers", d.workers},
                  {"warnings", d.warnings}},
             sidecar_of(path));
}

DepthResult read_depth_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "id,in_in,in_out,depth,rank,method") {
    throw DataError(path.string() + ": not a depth CSV (unexpected header)");
  }
  DepthResult d;
  bool have_method = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 6) throw DataError(path.string() + ": expected 6 columns in '" + line + "'");
    d.ids.push_back(f[0]);
    d.in_in.push_back(parse_double(f[1], path));
    d.in_out.push_back(parse_double(f[2], path));
    d.depth.push_back(parse_double(f[3], path));
    const double r = parse_double(f[4], path);
    if (r < 0 || r != static_cast<double>(static_cast<std::size_t>(r))) {
      throw DataError(path.string() + ": bad rank '" + f[4] + "'");
    }
    d.rank.push_back(static_cast<std::size_t>(r));
    DepthMethod m;
    try {
      m = parse_depth_method(f[5]);
    } catch (const Error&) {
      throw DataError(path.string() + ": unknown method '" + f[5] + "'");
    }
    if (have_method && m != d.method) throw DataError(path.string() + ": mixed methods");
    d.method = m;
    have_method = true;
  }
  if (d.ids.empty()) throw DataError(path.string() + ": no rows");
  std::vector<char> seen(d.size(), 0);
  for (std::size_t r : d.rank) {
    if (r >= d.size() || seen[r]) throw DataError(path.string() + ": ranks are not a permutation of 0..N-1");
    seen[r] = 1;
  }
  const fs::path side = sidecar_of(path);
  if (fs::exists(side)) {
    const json j = read_json(side);
    d.cv_mass = j.value("cv_mass", 0.0);
    d.elapsed_seconds = j.value("elapsed_seconds", 0.0);
    d.workers = j.value("workers", std::size_t{1});
    d.warnings = j.value("warnings", std::vector<std::string>{});
  }
  return d;
}

void write_rank_scatter_csv(const RankScatter& s, const fs::path& path) {
  std::string text = "# pearson=" + fmt_double(s.pearson) + ",kendall=" + fmt_double(s.kendall) + "\n";
  text += "id,rank1,rank2,abs_delta\n";
  for (const RankScatterRow& r : s.rows) {
    text += csv_field(r.id) + ',' + std::to_string(r.rank1) + ',' + std::to_string(r.rank2) + ',' +
            std::to_string(r.abs_delta) + '\n';
  }
  write_text(path, text);
}

void write_stability_json(const StabilityReport& r, const fs::path& path) {
  json j{{"method", std::string(to_string(r.method))},
         {"n", r.n},
         {"k_remove", r.removed_ids.size()},
         {"removed_ids", r.removed_ids},
         {"degenerate", r.degenerate}};
  // JSON has no NaN; degenerate reports carry null correlations.
  j["pearson"] = r.degenerate ? json(nullptr) : json(r.pearson);
  j["kendall"] = r.degenerate ? json(nullptr) : json(r.kendall);
  if (!r.note.empty()) j["note"] = r.note;
  write_json(j, path);
}

void write_matrix_csv(const std::vector<std::string>& labels, const std::vector<std::vector<double>>& m,
                      const fs::path& path) {
  std::string text = "label";
  for (const auto& l : labels) text += ',' + csv_field(l);
  text += '\n';
  for (std::size_t a = 0; a < m.size(); ++a) {
    text += csv_field(labels.at(a));
    for (double v : m[a]) text += ',' + fmt_double(v);
    text += '\n';
  }
  write_text(path, text);
}

fs::path write_boxplot(const BoxplotArtifact& a, const fs::path& dir, const std::vector<fs::path>& slice_images) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());

  write_volume(a.median, dir / "median.npy");
  json bands = json::array();
  std::vector<double> percentiles;
  for (std::size_t b = 0; b < a.bands.size(); ++b) {
    const BoxplotBand& band = a.bands[b];
    const std::string tag = percentile_tag(b, band.percentile);
    write_volume(band.union_mask, dir / (tag + "_union.npy"));
    write_volume(band.intersection_mask, dir / (tag + "_intersection.npy"));
    percentiles.push_back(band.percentile);
    bands.push_back({{"percentile", band.percentile},
                     {"k", band.member_ids.size()},
                     {"member_ids", band.member_ids},
                     {"union", tag + "_union.npy"},
                     {"intersection", tag + "_intersection.npy"}});
  }
  json slices = json::array();
  for (const fs::path& p : slice_images) slices.push_back(p.filename().generic_string());
  const fs::path out = dir / "boxplot.json";
  write_json(json{{"median_id", a.median_id},
                  {"median", "median.npy"},
                  {"threshold", a.threshold},
                  {"percentiles", percentiles},
                  {"bands", bands},
                  {"outlier_ids", a.outlier_ids},
                  {"slices", slices}},
             out);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace fuzzdepth::io
