#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "adc/error.hpp"
#include "adc/nn/param_store.hpp"

// Binary layout (all integers little-endian):
//   "ADC1"  u32 version
//   u32 record_count
//   record_count x { u32 name_len, name, u32 rows, u32 cols, rows*cols f64 (row-major) }
//   u8 has_moments
//   if has_moments: record_count x { rows*cols f64 m, rows*cols f64 v }
//   u32 metadata_len, metadata (UTF-8 JSON; may be empty)

namespace adc {

inline constexpr char kCheckpointMagic[4] = {'A', 'D', 'C', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointRecord {
  std::string name;
  Matrix value;
  Matrix adam_m;  // empty unless moments were stored
  Matrix adam_v;
};

struct Checkpoint {
  std::vector<CheckpointRecord> records;
  bool has_moments = false;
  std::string metadata;

  const CheckpointRecord* find(const std::string& name) const {
    for (const auto& r : records)
      if (r.name == name) return &r;
    return nullptr;
  }

  /// Appends every parameter of `store` under "prefix/name".
  void add_store(const std::string& prefix, const ParamStore& store, bool with_moments) {
    for (std::size_t i = 0; i < store.size(); ++i) {
      const ParamMatrix& p = store.at(i);
      CheckpointRecord r{prefix + "/" + p.name, p.value, {}, {}};
      if (with_moments) {
        r.adam_m = store.adam_m(i);
        r.adam_v = store.adam_v(i);
      }
      records.push_back(std::move(r));
    }
    has_moments = with_moments;
  }

  /// Copies values (and moments when present) into `store`; every parameter
  /// of the store must be present with a matching shape.
  void restore_store(const std::string& prefix, ParamStore& store) const {
    for (std::size_t i = 0; i < store.size(); ++i) {
      ParamMatrix& p = store.at(i);
      const CheckpointRecord* r = find(prefix + "/" + p.name);
      if (!r) throw ValidationError("checkpoint is missing parameter '" + prefix + "/" + p.name + "'");
      if (r->value.rows() != p.rows() || r->value.cols() != p.cols())
        throw ShapeError("checkpoint parameter '" + r->name + "' has shape " +
                         shape_string(r->value.rows(), r->value.cols()) + ", model expects " +
                         shape_string(p.rows(), p.cols()));
      p.value = r->value;
      p.grad.setZero();
      if (has_moments) {
        store.adam_m(i) = r->adam_m;
        store.adam_v(i) = r->adam_v;
      } else {
        store.adam_m(i).setZero();
        store.adam_v(i).setZero();
      }
    }
  }
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xffu));
}

inline void put_f64(std::string& out, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((bits >> (8 * k)) & 0xffu));
}

inline void put_matrix(std::string& out, const Matrix& m) {
  for (long i = 0; i < m.size(); ++i) put_f64(out, m.data()[i]);
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw ParseError("checkpoint truncated at byte " + std::to_string(pos_));
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t(static_cast<std::uint8_t>(bytes_[pos_++])) << (8 * k);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= std::uint64_t(static_cast<std::uint8_t>(bytes_[pos_++])) << (8 * k);
    return std::bit_cast<double>(v);
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void matrix(Matrix& m) {
    need(static_cast<std::size_t>(m.size()) * 8);
    for (long i = 0; i < m.size(); ++i) m.data()[i] = f64();
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string out(kCheckpointMagic, 4);
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(ckpt.records.size()));
  for (const auto& r : ckpt.records) {
    detail::put_u32(out, static_cast<std::uint32_t>(r.name.size()));
    out += r.name;
    detail::put_u32(out, static_cast<std::uint32_t>(r.value.rows()));
    detail::put_u32(out, static_cast<std::uint32_t>(r.value.cols()));
    detail::put_matrix(out, r.value);
  }
  out.push_back(static_cast<char>(ckpt.has_moments ? 1 : 0));
  if (ckpt.has_moments) {
    for (const auto& r : ckpt.records) {
      if (r.adam_m.rows() != r.value.rows() || r.adam_m.cols() != r.value.cols() ||
          r.adam_v.rows() != r.value.rows() || r.adam_v.cols() != r.value.cols())
        throw ShapeError("checkpoint record '" + r.name + "' has moments of the wrong shape");
      detail::put_matrix(out, r.adam_m);
      detail::put_matrix(out, r.adam_v);
    }
  }
  detail::put_u32(out, static_cast<std::uint32_t>(ckpt.metadata.size()));
  out += ckpt.metadata;
  return out;
}

inline Checkpoint decode_checkpoint(const std::string& bytes) {
  detail::Reader in(bytes);
  if (in.str(4) != std::string(kCheckpointMagic, 4)) throw ParseError("not an ADC1 checkpoint (bad magic)");
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion)
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  const std::uint32_t count = in.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointRecord r;
    r.name = in.str(in.u32());
    const std::uint32_t rows = in.u32();
    const std::uint32_t cols = in.u32();
    r.value.resize(rows, cols);
    in.matrix(r.value);
    ckpt.records.push_back(std::move(r));
  }
  const std::uint8_t flag = in.u8();
  if (flag > 1) throw ParseError("invalid moments flag in checkpoint");
  ckpt.has_moments = flag == 1;
  if (ckpt.has_moments) {
    for (auto& r : ckpt.records) {
      r.adam_m.resize(r.value.rows(), r.value.cols());
      r.adam_v.resize(r.value.rows(), r.value.cols());
      in.matrix(r.adam_m);
      in.matrix(r.adam_v);
    }
  }
  ckpt.metadata = in.str(in.u32());
  if (!in.done()) throw ParseError("trailing bytes after checkpoint metadata");
  return ckpt;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const std::string bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_checkpoint(buf.str());
}

}  // namespace adc
