#include "vecmap/serial.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace vecmap {

namespace {

using nlohmann::json;

json header_record() {
  return json{{"format", "vecmap.elements"},
              {"version", std::to_string(kElementsFormatMajor) + "." +
                              std::to_string(kElementsFormatMinor)}};
}

void check_header(const json& h, const std::filesystem::path& path) {
  if (!h.contains("format") || h["format"] != "vecmap.elements" ||
      !h.contains("version")) {
    throw std::runtime_error("not an element record file: " + path.string());
  }
  const std::string v = h["version"].get<std::string>();
  const int major = std::stoi(v.substr(0, v.find('.')));
  if (major != kElementsFormatMajor) {
    throw std::runtime_error("unsupported element format version " + v +
                             " in " + path.string());
  }
}

json element_record(const MapElement& e, std::optional<double> score) {
  json pts = json::array();
  for (const Point2& p : e.points) pts.push_back(json::array({p.x, p.y}));
  json rec{{"class_id", static_cast<int>(e.class_id)},
           {"closed", e.closed},
           {"points", pts}};
  if (score) rec["score"] = *score;
  return rec;
}

MapElement element_from_record(const json& rec) {
  MapElement e;
  const int cid = rec.at("class_id").get<int>();
  if (cid < 0 || cid >= kNumClasses) {
    throw std::runtime_error("bad class_id " + std::to_string(cid));
  }
  e.class_id = static_cast<MapClass>(cid);
  e.closed = rec.at("closed").get<bool>();
  for (const auto& p : rec.at("points")) {
    e.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  }
  if (e.points.size() < 2) throw std::runtime_error("element with < 2 points");
  return e;
}

template <typename WriteRec>
void write_jsonl(const std::filesystem::path& path, WriteRec&& write_records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << header_record().dump() << "\n";
  write_records(out);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

template <typename OnRecord>
void read_jsonl(const std::filesystem::path& path, OnRecord&& on_record) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    if (!saw_header) {
      check_header(rec, path);
      saw_header = true;
      continue;
    }
    on_record(rec);
  }
  if (!saw_header) {
    throw std::runtime_error("missing header line in " + path.string());
  }
}

}  // namespace

std::string element_to_json_line(const MapElement& e,
                                 std::optional<double> score) {
  return element_record(e, score).dump();
}

void write_elements(const std::filesystem::path& path,
                    const std::vector<MapElement>& elements) {
  write_jsonl(path, [&](std::ofstream& out) {
    for (const MapElement& e : elements) {
      out << element_record(e, std::nullopt).dump() << "\n";
    }
  });
}

void write_scored_elements(const std::filesystem::path& path,
                           const std::vector<ScoredElement>& elements) {
  write_jsonl(path, [&](std::ofstream& out) {
    for (const ScoredElement& se : elements) {
      out << element_record(se.element, se.score).dump() << "\n";
    }
  });
}

std::vector<MapElement> read_elements(const std::filesystem::path& path) {
  std::vector<MapElement> out;
  read_jsonl(path, [&](const json& rec) {
    out.push_back(element_from_record(rec));
  });
  return out;
}

std::vector<ScoredElement> read_scored_elements(
    const std::filesystem::path& path) {
  std::vector<ScoredElement> out;
  read_jsonl(path, [&](const json& rec) {
    ScoredElement se;
    se.element = element_from_record(rec);
    se.score = rec.value("score", 1.0);
    out.push_back(std::move(se));
  });
  return out;
}

// ---------------------------------------------------------------------------
// NPY
// ---------------------------------------------------------------------------

namespace {

std::size_t dtype_size(const std::string& dtype) {
  if (dtype == "<f4") return 4;
  if (dtype == "<f8") return 8;
  if (dtype == "|u1") return 1;
  throw std::runtime_error("unsupported npy dtype " + dtype);
}

void write_npy(const std::filesystem::path& path, const std::string& dtype,
               const std::vector<std::size_t>& shape, const void* data) {
  std::ostringstream dict;
  dict << "{'descr': '" << dtype << "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    dict << shape[i] << (shape.size() == 1 ? "," : (i + 1 < shape.size() ? ", " : ""));
  }
  dict << "), }";
  std::string header = dict.str();
  // pad so magic(6)+version(2)+len(2)+header is a multiple of 64
  const std::size_t base = 10 + header.size() + 1;
  header.append(64 - (base % 64 == 0 ? 64 : base % 64), ' ');
  header.push_back('\n');

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out.write("\x93NUMPY\x01\x00", 8);
  const std::uint16_t hlen = static_cast<std::uint16_t>(header.size());
  out.write(reinterpret_cast<const char*>(&hlen), 2);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  std::size_t count = 1;
  for (std::size_t s : shape) count *= s;
  out.write(static_cast<const char*>(data),
            static_cast<std::streamsize>(count * dtype_size(dtype)));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

std::size_t NpyArray::element_count() const {
  std::size_t count = 1;
  for (std::size_t s : shape) count *= s;
  return count;
}

const float* NpyArray::as_f32() const {
  if (dtype != "<f4") throw std::runtime_error("npy array is not <f4");
  return reinterpret_cast<const float*>(raw.data());
}

const double* NpyArray::as_f64() const {
  if (dtype != "<f8") throw std::runtime_error("npy array is not <f8");
  return reinterpret_cast<const double*>(raw.data());
}

const std::uint8_t* NpyArray::as_u8() const {
  if (dtype != "|u1") throw std::runtime_error("npy array is not |u1");
  return raw.data();
}

void write_npy_f32(const std::filesystem::path& path,
                   const std::vector<std::size_t>& shape, const float* data) {
  write_npy(path, "<f4", shape, data);
}

void write_npy_u8(const std::filesystem::path& path,
                  const std::vector<std::size_t>& shape,
                  const std::uint8_t* data) {
  write_npy(path, "|u1", shape, data);
}

NpyArray read_npy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (std::string(magic, 6) != "\x93NUMPY") {
    throw std::runtime_error("not an npy file: " + path.string());
  }
  std::uint16_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 2);
  std::string header(hlen, '\0');
  in.read(header.data(), hlen);

  NpyArray arr;
  const auto dpos = header.find("'descr':");
  const auto d0 = header.find('\'', dpos + 8);
  const auto d1 = header.find('\'', d0 + 1);
  arr.dtype = header.substr(d0 + 1, d1 - d0 - 1);
  if (header.find("'fortran_order': False") == std::string::npos) {
    throw std::runtime_error("fortran-order npy not supported");
  }
  const auto s0 = header.find('(');
  const auto s1 = header.find(')', s0);
  std::string dims = header.substr(s0 + 1, s1 - s0 - 1);
  std::istringstream ds(dims);
  std::string tok;
  while (std::getline(ds, tok, ',')) {
    const auto first = tok.find_first_not_of(' ');
    if (first == std::string::npos) continue;
    arr.shape.push_back(std::stoull(tok.substr(first)));
  }
  arr.raw.resize(arr.element_count() * dtype_size(arr.dtype));
  in.read(reinterpret_cast<char*>(arr.raw.data()),
          static_cast<std::streamsize>(arr.raw.size()));
  if (!in) throw std::runtime_error("truncated npy file: " + path.string());
  return arr;
}

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string fnv1a_hex(const std::string& data) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(data)));
  return std::string(buf);
}

}  // namespace vecmap
