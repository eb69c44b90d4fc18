#pragma once

// Binary checkpoint container.
//
//   "HGAN1" | u32 entry count | entries... | u32 CRC32 of everything before it
//   entry:  u32 name length | name | u8 kind | u64 ndims | u64 dims[ndims] | payload
//   kind 0: float32 array (product of dims values), kind 1: UTF-8 text (dims = {bytes})
//
// All integers and floats are little-endian.

#include "surge/bundle.hpp"

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace surge {

inline constexpr char kCheckpointMagic[] = "HGAN1";
inline constexpr std::size_t kMagicLength = 5;

namespace ckpt {

enum class Kind : std::uint8_t { f32 = 0, text = 1 };

struct Entry {
  Kind kind = Kind::f32;
  std::vector<std::uint64_t> dims;
  std::vector<float> values;
  std::string text;
};

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void bytes(const std::string& s) { buf_.append(s); }

  void entry(const std::string& name, const Entry& e) {
    u32(static_cast<std::uint32_t>(name.size()));
    bytes(name);
    u8(static_cast<std::uint8_t>(e.kind));
    u64(e.dims.size());
    for (auto d : e.dims) u64(d);
    if (e.kind == Kind::text) {
      bytes(e.text);
    } else {
      for (float f : e.values) u32(std::bit_cast<std::uint32_t>(f));
    }
  }

  std::string finish() {
    const auto crc = ::crc32(0L, reinterpret_cast<const Bytef*>(buf_.data()), static_cast<uInt>(buf_.size()));
    u32(static_cast<std::uint32_t>(crc));
    return std::move(buf_);
  }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& data, std::size_t end) : data_(data), end_(end) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(data_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(data_[pos_++])) << (8 * i);
    return v;
  }
  std::string bytes(std::uint64_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == end_; }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }

 private:
  void need(std::uint64_t n) const {
    if (n > end_ - pos_) throw FormatError("checkpoint truncated");
  }
  const std::string& data_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

inline Entry text_entry(std::string s) {
  Entry e;
  e.kind = Kind::text;
  e.dims = {s.size()};
  e.text = std::move(s);
  return e;
}

inline Entry matrix_entry(const Matrix& m) {
  Entry e;
  e.dims = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  e.values.resize(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.size(); ++i) e.values[static_cast<std::size_t>(i)] = static_cast<float>(m.data()[i]);
  return e;
}

inline std::map<std::string, Entry> parse(const std::string& data) {
  if (data.size() < kMagicLength + 8) throw FormatError("checkpoint truncated");
  if (data.compare(0, kMagicLength, kCheckpointMagic) != 0) throw FormatError("checkpoint: bad magic header");
  const std::size_t body_end = data.size() - 4;
  Reader tail(data, data.size());
  tail.skip(body_end);
  const std::uint32_t stored = tail.u32();
  const auto actual = static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(body_end)));
  if (stored != actual) throw FormatError("checkpoint: checksum mismatch");

  Reader r(data, body_end);
  r.skip(kMagicLength);
  const std::uint32_t count = r.u32();
  std::map<std::string, Entry> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.bytes(r.u32());
    Entry e;
    const auto kind = r.u8();
    if (kind > 1) throw FormatError("checkpoint: unknown entry kind in " + name);
    e.kind = static_cast<Kind>(kind);
    const std::uint64_t nd = r.u64();
    if (nd > 8) throw FormatError("checkpoint: implausible rank in " + name);
    std::uint64_t total = 1;
    for (std::uint64_t d = 0; d < nd; ++d) {
      e.dims.push_back(r.u64());
      if (e.dims.back() > (std::uint64_t{1} << 32)) throw FormatError("checkpoint: implausible dimension in " + name);
      total *= e.dims.back();
    }
    if (e.kind == Kind::text) {
      if (nd != 1) throw FormatError("checkpoint: text entry " + name + " must be rank 1");
      e.text = r.bytes(total);
    } else {
      e.values.resize(total);
      for (auto& v : e.values) v = std::bit_cast<float>(r.u32());
    }
    if (!out.emplace(name, std::move(e)).second) throw FormatError("checkpoint: duplicate entry " + name);
  }
  if (!r.done()) throw FormatError("checkpoint: trailing bytes before checksum");
  return out;
}

inline std::string scaler_text(const MinMaxScaler& s) {
  std::ostringstream o;
  for (std::size_t f = 0; f < s.features(); ++f) o << csv::fmt(s.min[f]) << ',' << csv::fmt(s.max[f]) << '\n';
  return o.str();
}

inline MinMaxScaler parse_scaler(const std::string& text, const std::string& name) {
  MinMaxScaler s;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto f = csv::split(line);
    if (f.size() != 2) throw FormatError("checkpoint: malformed scaler " + name);
    s.min.push_back(detail::parse_f64(name, f[0]));
    s.max.push_back(detail::parse_f64(name, f[1]));
  }
  return s;
}

inline std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("checkpoint: malformed key=value line");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

inline LossTrace parse_history(const std::string& text) {
  std::istringstream in(text);
  const auto table = csv::Table::read(in, {"phase", "epoch", "loss_name", "value"}, "<checkpoint history>");
  LossTrace t;
  for (const auto& row : table.rows()) {
    t.push_back({row.fields[0], static_cast<std::size_t>(table.integer(row, 1)), row.fields[2], table.required_number(row, 3)});
  }
  return t;
}

inline const Entry& find(const std::map<std::string, Entry>& m, const std::string& name, Kind kind) {
  const auto it = m.find(name);
  if (it == m.end()) throw FormatError("checkpoint: missing entry " + name);
  if (it->second.kind != kind) throw FormatError("checkpoint: entry " + name + " has the wrong kind");
  return it->second;
}

}  // namespace ckpt

/// Serializes a bundle. Weights must already be float32-representable (see
/// snap_to_float32) so the round trip is exact.
inline std::string serialize_bundle(const TrainedBundle& b) {
  b.check_consistent();
  if (!is_float32_snapped(b.model)) throw StateError("checkpoint: weights are not float32-snapped; call snap_to_float32");

  std::vector<std::pair<std::string, ckpt::Entry>> entries;
  entries.emplace_back("version", ckpt::text_entry(b.version));
  std::ostringstream shape;
  shape << "rows=" << b.rows << "\ncols=" << b.cols << "\nseries_length=" << b.series_length
        << "\nhidden=" << b.model.shape.hidden << "\nn_layers=" << b.model.shape.n_layers
        << "\nsupervisor_space=" << to_string(b.model.shape.supervisor_space) << '\n';
  entries.emplace_back("shape", ckpt::text_entry(shape.str()));
  entries.emplace_back("config", ckpt::text_entry(serialize_config(b.config)));
  entries.emplace_back("scaler.train", ckpt::text_entry(ckpt::scaler_text(b.train_scaler)));
  if (b.test_scaler) entries.emplace_back("scaler.test", ckpt::text_entry(ckpt::scaler_text(*b.test_scaler)));
  entries.emplace_back("bounds", ckpt::text_entry(ckpt::scaler_text(b.bounds.scaler)));
  std::ostringstream hist;
  write_loss_csv(hist, b.history);
  entries.emplace_back("history", ckpt::text_entry(hist.str()));
  for (const Component* c : b.model.components()) {
    const auto names = c->param_names();
    const auto params = c->params();
    for (std::size_t i = 0; i < params.size(); ++i) entries.emplace_back(names[i], ckpt::matrix_entry(*params[i]));
  }

  ckpt::Writer w;
  w.bytes(std::string(kCheckpointMagic, kMagicLength));
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, e] : entries) w.entry(name, e);
  return w.finish();
}

inline TrainedBundle deserialize_bundle(const std::string& data) {
  const auto m = ckpt::parse(data);
  TrainedBundle b;
  b.version = ckpt::find(m, "version", ckpt::Kind::text).text;
  if (b.version != kBundleVersion) {
    throw FormatError("checkpoint version mismatch: file has '" + b.version + "', expected '" + kBundleVersion + "'");
  }
  const auto kv = ckpt::parse_kv(ckpt::find(m, "shape", ckpt::Kind::text).text);
  auto get = [&](const char* key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw FormatError(std::string("checkpoint: shape is missing ") + key);
    return it->second;
  };
  b.rows = detail::parse_u64("rows", get("rows"));
  b.cols = detail::parse_u64("cols", get("cols"));
  b.series_length = detail::parse_u64("series_length", get("series_length"));
  ModelShape shape{b.rows, b.cols, detail::parse_u64("hidden", get("hidden")), detail::parse_u64("n_layers", get("n_layers")),
                   parse_supervisor_space(get("supervisor_space"))};
  b.config = parse_config(ckpt::find(m, "config", ckpt::Kind::text).text);
  b.train_scaler = ckpt::parse_scaler(ckpt::find(m, "scaler.train", ckpt::Kind::text).text, "scaler.train");
  if (m.count("scaler.test")) b.test_scaler = ckpt::parse_scaler(ckpt::find(m, "scaler.test", ckpt::Kind::text).text, "scaler.test");
  b.bounds.scaler = ckpt::parse_scaler(ckpt::find(m, "bounds", ckpt::Kind::text).text, "bounds");
  b.history = ckpt::parse_history(ckpt::find(m, "history", ckpt::Kind::text).text);

  b.model.shape = shape;
  b.model.embedder = Component::build(make_spec(ComponentKind::Embedder, shape), nullptr);
  b.model.recovery = Component::build(make_spec(ComponentKind::Recovery, shape), nullptr);
  b.model.generator = Component::build(make_spec(ComponentKind::Generator, shape), nullptr);
  b.model.supervisor = Component::build(make_spec(ComponentKind::Supervisor, shape), nullptr);
  b.model.discriminator = Component::build(make_spec(ComponentKind::Discriminator, shape), nullptr);
  std::size_t weight_entries = 0;
  for (Component* c : b.model.components()) {
    const auto names = c->param_names();
    auto params = c->params();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& e = ckpt::find(m, names[i], ckpt::Kind::f32);
      Matrix& p = *params[i];
      if (e.dims.size() != 2 || e.dims[0] != static_cast<std::uint64_t>(p.rows()) ||
          e.dims[1] != static_cast<std::uint64_t>(p.cols())) {
        throw FormatError("checkpoint: entry " + names[i] + " has dims incompatible with " + shape_str(p));
      }
      for (Index k = 0; k < p.size(); ++k) p.data()[k] = static_cast<double>(e.values[static_cast<std::size_t>(k)]);
      ++weight_entries;
    }
  }
  const std::size_t text_entries = 6 + (b.test_scaler ? 1 : 0);
  if (m.size() != weight_entries + text_entries) throw FormatError("checkpoint: unexpected extra entries");
  b.check_consistent();
  return b;
}

inline void save_bundle(const TrainedBundle& b, const std::string& path) {
  const std::string bytes = serialize_bundle(b);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path);
}

inline TrainedBundle load_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_bundle(ss.str());
}

/// Weights, scalers, bounds, shapes and config all bitwise equal.
inline bool bitwise_equal(const TrainedBundle& a, const TrainedBundle& b) {
  const auto ac = a.model.components();
  const auto bc = b.model.components();
  for (std::size_t i = 0; i < ac.size(); ++i) {
    if (!bitwise_equal(*ac[i], *bc[i])) return false;
  }
  auto same = [](const MinMaxScaler& x, const MinMaxScaler& y) {
    if (x.features() != y.features()) return false;
    for (std::size_t f = 0; f < x.features(); ++f) {
      if (std::bit_cast<std::uint64_t>(x.min[f]) != std::bit_cast<std::uint64_t>(y.min[f]) ||
          std::bit_cast<std::uint64_t>(x.max[f]) != std::bit_cast<std::uint64_t>(y.max[f])) {
        return false;
      }
    }
    return true;
  };
  if (a.test_scaler.has_value() != b.test_scaler.has_value()) return false;
  if (a.test_scaler && !same(*a.test_scaler, *b.test_scaler)) return false;
  return a.version == b.version && a.model.shape == b.model.shape && a.rows == b.rows && a.cols == b.cols &&
         a.series_length == b.series_length && a.config == b.config && same(a.train_scaler, b.train_scaler) &&
         same(a.bounds.scaler, b.bounds.scaler) && a.history == b.history;
}

}  // namespace surge
