#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "dpcombine/errors.hpp"
#include "dpcombine/lstm.hpp"

namespace dpcombine {

/// A frozen base model: the parameter snapshot taken at the end of one
/// learning-rate segment, plus where in the schedule it came from.
struct Checkpoint {
  LstmParams params;
  std::size_t segment_index = 0;  // 1-based position in the schedule
  std::size_t iteration = 0;      // global iteration count at save time
  double learning_rate_at_save = 0.0;
  std::uint64_t train_seed = 0;   // stream that initialized and trained this model
};

namespace detail {

// On-disk layout (all integers and doubles little-endian):
//   magic "DPCMCKPT" | u32 version | u32 lag | u32 hidden1 | u32 hidden2
//   | u8 act1 | u8 act2 | u16 zero | f64 dropout | u32 segment | u64 iteration
//   | f64 learning_rate | u64 train_seed | u64 param_count
//   | f64 params[param_count] (layer1 w_input, w_recur, bias; layer2 likewise;
//     dense weights; dense bias) | u64 fnv1a64 checksum of all bytes above
inline constexpr char kCheckpointMagic[8] = {'D', 'P', 'C', 'M', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& buf, double v) { put_u64(buf, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& path) : bytes_(bytes), path_(path) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
  std::uint64_t u64() { return take(8); }
  double f64() { return std::bit_cast<double>(take(8)); }
  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)); }

  std::size_t offset() const { return offset_; }

 private:
  std::uint64_t take(std::size_t n) {
    if (offset_ + n > bytes_.size()) {
      throw CorruptFile("checkpoint '" + path_ + "' is truncated");
    }
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[offset_ + i])) << (8 * i);
    }
    offset_ += n;
    return v;
  }

  const std::string& bytes_;
  const std::string& path_;
  std::size_t offset_ = 0;
};

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& c) {
  std::string buf;
  buf.reserve(64 + 8 * c.params.parameter_count());
  buf.append(detail::kCheckpointMagic, sizeof(detail::kCheckpointMagic));
  detail::put_u32(buf, detail::kCheckpointVersion);
  detail::put_u32(buf, static_cast<std::uint32_t>(c.params.lag));
  detail::put_u32(buf, static_cast<std::uint32_t>(c.params.layer1.hidden_size));
  detail::put_u32(buf, static_cast<std::uint32_t>(c.params.layer2.hidden_size));
  buf.push_back(static_cast<char>(c.params.head_act1));
  buf.push_back(static_cast<char>(c.params.head_act2));
  buf.push_back(0);
  buf.push_back(0);
  detail::put_f64(buf, c.params.dropout_rate);
  detail::put_u32(buf, static_cast<std::uint32_t>(c.segment_index));
  detail::put_u64(buf, c.iteration);
  detail::put_f64(buf, c.learning_rate_at_save);
  detail::put_u64(buf, c.train_seed);
  auto ptrs = parameter_pointers(c.params);
  detail::put_u64(buf, ptrs.size());
  for (const double* p : ptrs) detail::put_f64(buf, *p);
  detail::put_u64(buf, detail::fnv1a64(buf));
  return buf;
}

inline Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& path) {
  if (bytes.size() < sizeof(detail::kCheckpointMagic) + 4) {
    throw CorruptFile("checkpoint '" + path + "' is truncated");
  }
  if (std::memcmp(bytes.data(), detail::kCheckpointMagic, sizeof(detail::kCheckpointMagic)) != 0) {
    throw CorruptFile("checkpoint '" + path + "' has wrong magic bytes");
  }
  if (bytes.size() < 8 + 12 + 8) throw CorruptFile("checkpoint '" + path + "' is truncated");
  detail::Reader reader(bytes, path);
  reader.u64();  // magic, already checked
  const std::uint32_t version = reader.u32();
  if (version != detail::kCheckpointVersion) {
    throw VersionMismatch("checkpoint '" + path + "' has version " + std::to_string(version) +
                          "; this build reads version " +
                          std::to_string(detail::kCheckpointVersion));
  }
  {
    std::uint64_t stored = 0;
    for (std::size_t i = 0; i < 8; ++i) {
      stored |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[bytes.size() - 8 + i]))
                << (8 * i);
    }
    if (detail::fnv1a64(std::string_view(bytes).substr(0, bytes.size() - 8)) != stored) {
      throw CorruptFile("checkpoint '" + path + "' failed its checksum");
    }
  }
  Checkpoint c;
  const std::size_t lag = reader.u32();
  const std::size_t hidden1 = reader.u32();
  const std::size_t hidden2 = reader.u32();
  const auto act1 = static_cast<Activation>(reader.u8());
  const auto act2 = static_cast<Activation>(reader.u8());
  reader.u8();
  reader.u8();
  c.params.resize(lag, hidden1, hidden2);
  c.params.head_act1 = act1;
  c.params.head_act2 = act2;
  c.params.dropout_rate = reader.f64();
  c.segment_index = reader.u32();
  c.iteration = reader.u64();
  c.learning_rate_at_save = reader.f64();
  c.train_seed = reader.u64();
  const std::uint64_t count = reader.u64();
  auto ptrs = parameter_pointers(c.params);
  if (count != ptrs.size()) {
    throw CorruptFile("checkpoint '" + path + "' parameter count " + std::to_string(count) +
                      " does not match header shapes (" + std::to_string(ptrs.size()) + ")");
  }
  for (double* p : ptrs) *p = reader.f64();
  return c;
}

inline void save_checkpoint(const Checkpoint& c, const std::string& path) {
  const std::string bytes = serialize_checkpoint(c);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open checkpoint '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoFailure("short write to checkpoint '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open checkpoint '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes, path);
}

}  // namespace dpcombine
