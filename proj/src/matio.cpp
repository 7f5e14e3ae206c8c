#include "qmrom/matio.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "qmrom/errors.hpp"

namespace qmrom {

std::string to_string(RefMode mode) {
  return mode == RefMode::initial ? "initial" : "time_mean";
}

RefMode parse_ref_mode(const std::string& text) {
  if (text == "initial") return RefMode::initial;
  if (text == "time_mean") return RefMode::time_mean;
  throw ConfigError("ref_mode must be 'initial' or 'time_mean', got '" + text + "'");
}

bool all_finite(const Matrix& m) {
  for (Index i = 0; i < m.size(); ++i) {
    if (!std::isfinite(m.data()[i])) return false;
  }
  return true;
}

}  // namespace qmrom

namespace qmrom::matio {

namespace {

class Writer {
 public:
  void raw(std::string_view s) { buf_.append(s); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s);
  }
  void matrix(const Matrix& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Index i = 0; i < m.size(); ++i) f64(m.data()[i]);
  }
  std::string take() { return std::move(buf_); }

 private:
  void put(std::uint64_t v, int bytes) {
    for (int b = 0; b < bytes; ++b) buf_.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
  }
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view raw(std::size_t n) {
    need(n);
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string str() {
    auto n = u32();
    return std::string(raw(n));
  }
  Matrix matrix() {
    auto rows = u64();
    auto cols = u64();
    if (rows > 0 && cols > (bytes_.size() - pos_) / 8 / rows) {
      throw ValidationError("declared matrix size " + std::to_string(rows) + "x" +
                            std::to_string(cols) + " exceeds the remaining payload");
    }
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = f64();
    if (!all_finite(m)) throw ValidationError("matrix payload contains non-finite values");
    return m;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ValidationError("unexpected end of data");
  }
  std::uint64_t get(int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int b = 0; b < bytes; ++b) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
    }
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

// Rethrow decode failures with the file they came from.
template <class F>
auto with_path(const std::filesystem::path& path, F&& f) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path.string());
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move result into " + path.string());
  }
}

std::string encode_matrix(const Matrix& m) {
  Writer w;
  w.raw("QMRM");
  w.u32(kMatrixVersion);
  w.matrix(m);
  return w.take();
}

Matrix decode_matrix(std::string_view bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || r.raw(4) != "QMRM") throw ValidationError("missing QMRM magic");
  auto version = r.u32();
  if (version != kMatrixVersion) {
    throw ValidationError("unsupported QMRM version " + std::to_string(version) +
                          " (expected " + std::to_string(kMatrixVersion) + ")");
  }
  Matrix m = r.matrix();
  if (!r.done()) throw ValidationError("trailing bytes after matrix payload");
  return m;
}

void write_matrix_binary(const Matrix& m, const std::filesystem::path& path) {
  write_file_atomic(path, encode_matrix(m));
}

Matrix read_matrix_binary(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  return with_path(path, [&] { return decode_matrix(bytes); });
}

std::string format_double(double v) {
  char buf[32];
  int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

std::string format_matrix_csv(const Matrix& m) {
  std::string out;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out.push_back(',');
      out += format_double(m(i, j));
    }
    out.push_back('\n');
  }
  return out;
}

Matrix parse_matrix_csv(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    ++line_no;
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    std::vector<double> row;
    std::size_t cell_start = 0;
    while (true) {
      auto comma = line.find(',', cell_start);
      auto cell = line.substr(cell_start, comma == std::string_view::npos ? std::string_view::npos
                                                                         : comma - cell_start);
      while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
      if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw ParseError("line " + std::to_string(line_no) + ": non-numeric cell '" +
                         std::string(cell) + "'");
      }
      if (!std::isfinite(v)) {
        throw ParseError("line " + std::to_string(line_no) + ": non-finite value");
      }
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      cell_start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(rows.front().size()) + " cells, found " +
                       std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
    if (end == text.size()) break;
  }
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path) {
  write_file_atomic(path, format_matrix_csv(m));
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  auto text = read_file(path);
  return with_path(path, [&] { return parse_matrix_csv(text); });
}

const Matrix* Container::find(const std::string& name) const {
  for (const auto& s : sections) {
    if (s.name == name) return &s.data;
  }
  return nullptr;
}

const Matrix& Container::require(const std::string& name) const {
  if (const auto* m = find(name)) return *m;
  throw ValidationError("missing section '" + name + "'");
}

void Container::add(std::string name, Matrix data) {
  if (find(name)) throw ValidationError("duplicate section '" + name + "'");
  sections.push_back({std::move(name), std::move(data)});
}

std::string encode_container(const Container& c, std::string_view magic) {
  Writer w;
  w.raw(magic);
  w.u32(kContainerVersion);
  w.u32(static_cast<std::uint32_t>(c.sections.size()));
  for (const auto& s : c.sections) {
    w.str(s.name);
    w.matrix(s.data);
  }
  w.u32(static_cast<std::uint32_t>(c.metadata.size()));
  for (const auto& [k, v] : c.metadata) {
    w.str(k);
    w.str(v);
  }
  return w.take();
}

Container decode_container(std::string_view bytes, std::string_view magic) {
  Reader r(bytes);
  if (bytes.size() < magic.size() || r.raw(magic.size()) != magic) {
    throw ValidationError("missing " + std::string(magic) + " magic");
  }
  auto version = r.u32();
  if (version != kContainerVersion) {
    throw ValidationError("unsupported " + std::string(magic) + " version " +
                          std::to_string(version) + " (this build reads version " +
                          std::to_string(kContainerVersion) + ")");
  }
  Container c;
  auto count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name = r.str();
    c.add(std::move(name), r.matrix());
  }
  auto meta = r.u32();
  for (std::uint32_t i = 0; i < meta; ++i) {
    auto key = r.str();
    auto value = r.str();
    if (!c.metadata.emplace(std::move(key), std::move(value)).second) {
      throw ValidationError("duplicate metadata key");
    }
  }
  if (!r.done()) throw ValidationError("trailing bytes after metadata");
  return c;
}

std::string format_pairs(const std::vector<IndexPair>& pairs) {
  std::string out;
  for (std::size_t m = 0; m < pairs.size(); ++m) {
    if (m) out.push_back(',');
    out += std::to_string(pairs[m].first + 1) + ":" + std::to_string(pairs[m].second + 1);
  }
  return out;
}

std::vector<IndexPair> parse_pairs(std::string_view text) {
  std::vector<IndexPair> pairs;
  if (text.empty()) return pairs;
  std::size_t start = 0;
  while (true) {
    auto comma = text.find(',', start);
    auto item = text.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                   : comma - start);
    auto colon = item.find(':');
    int a = 0, b = 0;
    bool ok = colon != std::string_view::npos;
    if (ok) {
      auto r1 = std::from_chars(item.data(), item.data() + colon, a);
      auto r2 = std::from_chars(item.data() + colon + 1, item.data() + item.size(), b);
      ok = r1.ec == std::errc() && r1.ptr == item.data() + colon && r2.ec == std::errc() &&
           r2.ptr == item.data() + item.size() && a >= 1 && b >= 1;
    }
    if (!ok) throw ValidationError("malformed index pair '" + std::string(item) + "'");
    pairs.emplace_back(a - 1, b - 1);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return pairs;
}

namespace {

std::string meta(const Container& c, const std::string& key) {
  auto it = c.metadata.find(key);
  if (it == c.metadata.end()) throw ValidationError("missing metadata '" + key + "'");
  return it->second;
}

double meta_double(const Container& c, const std::string& key) {
  auto text = meta(c, key);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ValidationError("metadata '" + key + "' is not a finite number: '" + text + "'");
  }
  return v;
}

Index meta_index(const Container& c, const std::string& key) {
  auto text = meta(c, key);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || v < 0) {
    throw ValidationError("metadata '" + key + "' is not a count: '" + text + "'");
  }
  return static_cast<Index>(v);
}

void expect_shape(const Matrix& m, Index rows, Index cols, const std::string& name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ValidationError("section '" + name + "' is " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()) + ", expected " + std::to_string(rows) +
                          "x" + std::to_string(cols));
  }
}

}  // namespace

Container model_to_container(const QuadraticManifold& m, const RomOperators* ops) {
  m.validate();
  Container c;
  c.add("s_ref", m.pod.s_ref);
  c.add("V", m.pod.V);
  c.add("Vbar", m.vbar);
  c.add("singular_values", m.pod.singular_values);
  c.metadata["r"] = std::to_string(m.r());
  c.metadata["q"] = std::to_string(m.q());
  c.metadata["gamma"] = format_double(m.gamma);
  c.metadata["ref_mode"] = to_string(m.pod.ref_mode);
  c.metadata["pairs"] = format_pairs(m.fmap.pairs);
  if (ops) {
    ops->validate();
    if (ops->r() != m.r() || !(ops->fmap == m.fmap)) {
      throw ValidationError("operators do not match the manifold's r or feature map");
    }
    c.add("c_hat", ops->c_hat);
    c.add("A_hat", ops->A_hat);
    c.add("H_hat", ops->H_hat);
    c.metadata["time_order"] = std::to_string(ops->time_order);
  }
  return c;
}

StoredModel model_from_container(const Container& c) {
  Index r = meta_index(c, "r");
  Index q = meta_index(c, "q");
  const Matrix& V = c.require("V");
  Index n = V.rows();
  expect_shape(V, n, r, "V");
  expect_shape(c.require("s_ref"), n, 1, "s_ref");
  expect_shape(c.require("Vbar"), n, q, "Vbar");
  const Matrix& sv = c.require("singular_values");
  if (sv.cols() != 1) throw ValidationError("section 'singular_values' must be a column");

  StoredModel out;
  auto& m = out.manifold;
  m.pod.V = V;
  m.pod.s_ref = c.require("s_ref").col(0);
  m.pod.singular_values = sv.col(0);
  m.pod.ref_mode = parse_ref_mode(meta(c, "ref_mode"));
  m.vbar = c.require("Vbar");
  m.gamma = meta_double(c, "gamma");
  m.fmap = QuadFeatureMap::from_pairs(r, parse_pairs(meta(c, "pairs")));
  if (m.fmap.q() != q) throw ValidationError("metadata 'pairs' does not list q pairs");
  m.validate();

  const Matrix* c_hat = c.find("c_hat");
  const Matrix* A_hat = c.find("A_hat");
  const Matrix* H_hat = c.find("H_hat");
  if (c_hat || A_hat || H_hat) {
    if (!(c_hat && A_hat && H_hat)) throw ValidationError("incomplete operator sections");
    expect_shape(*c_hat, r, 1, "c_hat");
    expect_shape(*A_hat, r, r, "A_hat");
    expect_shape(*H_hat, r, q, "H_hat");
    RomOperators ops;
    ops.c_hat = c_hat->col(0);
    ops.A_hat = *A_hat;
    ops.H_hat = *H_hat;
    ops.fmap = m.fmap;
    auto order = meta_index(c, "time_order");
    if (order != 1 && order != 2) throw ValidationError("time_order must be 1 or 2");
    ops.time_order = static_cast<int>(order);
    ops.validate();
    out.ops = std::move(ops);
  }
  return out;
}

void save_model(const QuadraticManifold& m, const std::optional<RomOperators>& ops,
                const std::filesystem::path& path) {
  write_file_atomic(path, encode_container(model_to_container(m, ops ? &*ops : nullptr)));
}

StoredModel load_model(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  return with_path(path, [&] { return model_from_container(decode_container(bytes)); });
}

void save_snapshots(const SnapshotSet& s, const std::filesystem::path& path) {
  s.validate();
  Container c;
  c.add("S", s.states);
  c.add("times", s.times);
  if (!s.params.empty()) {
    c.add("params", Eigen::Map<const Vector>(s.params.data(), static_cast<Index>(s.params.size())));
  }
  if (s.derivatives) {
    c.add("derivatives", *s.derivatives);
    c.metadata["derivative_order"] = std::to_string(s.derivative_order);
  }
  write_file_atomic(path, encode_container(c, "QMSS"));
}

SnapshotSet load_snapshots(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  return with_path(path, [&] {
    Container c = decode_container(bytes, "QMSS");
    SnapshotSet s;
    s.states = c.require("S");
    const Matrix& t = c.require("times");
    if (t.cols() != 1) throw ValidationError("section 'times' must be a column");
    s.times = t.col(0);
    if (const auto* p = c.find("params")) {
      if (p->cols() != 1) throw ValidationError("section 'params' must be a column");
      s.params.assign(p->data(), p->data() + p->size());
    }
    if (const auto* d = c.find("derivatives")) {
      s.derivatives = *d;
      s.derivative_order = static_cast<int>(meta_index(c, "derivative_order"));
    }
    s.validate();
    return s;
  });
}

}  // namespace qmrom::matio
