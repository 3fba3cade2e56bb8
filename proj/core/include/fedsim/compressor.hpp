#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fedsim/model.hpp"
#include "fedsim/param_space.hpp"

namespace fedsim {

enum class SchemeKind : std::uint8_t {
  identity = 0,
  low_rank = 1,
  random_mask = 2,
  subsample = 3,
  quantize = 4,
  rotate_quantize = 5,
};

const char* to_string(SchemeKind kind);
SchemeKind parse_scheme_kind(const std::string& name);

struct CompressionScheme {
  SchemeKind kind = SchemeKind::identity;
  std::size_t rank = 1;         // low_rank
  double keep_fraction = 1.0;   // random_mask, subsample
  unsigned bits = 8;            // quantize, rotate_quantize

  static CompressionScheme identity() { return {}; }
  static CompressionScheme low_rank(std::size_t r) { return {SchemeKind::low_rank, r, 1.0, 8}; }
  static CompressionScheme random_mask(double s) { return {SchemeKind::random_mask, 1, s, 8}; }
  static CompressionScheme subsample(double s) { return {SchemeKind::subsample, 1, s, 8}; }
  static CompressionScheme quantize(unsigned b) { return {SchemeKind::quantize, 1, 1.0, b}; }
  static CompressionScheme rotate_quantize(unsigned b) {
    return {SchemeKind::rotate_quantize, 1, 1.0, b};
  }

  // Throws ConfigError unless 0 < s <= 1, r >= 1 and 1 <= b <= 8.
  void validate() const;
  std::string describe() const;
};

// Payloads. Seeds never travel: masks, bases and rotations are re-derived by
// the receiver from (session seed, round, client id).
struct RawPayload {
  std::vector<double> values;
};

struct LowRankPayload {
  std::uint32_t round = 0;
  std::uint32_t client_id = 0;
  std::uint32_t requested_rank = 0;
  // Effective rank per matrix slot of the layout, in layout order.
  std::vector<std::uint32_t> ranks;
  // Per slot in layout order: the solved factor for matrices, raw values
  // for vectors.
  std::vector<double> values;
};

struct MaskPayload {
  std::uint32_t round = 0;
  std::uint32_t client_id = 0;
  std::vector<double> values;  // kept coordinates, ascending index order
};

struct QuantPayload {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::uint8_t> codes;  // b-bit codes, MSB-first bitstream
};

struct RotQuantPayload {
  std::uint32_t round = 0;
  std::uint32_t client_id = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::uint8_t> codes;  // over the power-of-two padded vector
};

using Payload = std::variant<RawPayload, LowRankPayload, MaskPayload, QuantPayload, RotQuantPayload>;

struct EncodedUpdate {
  SchemeKind kind = SchemeKind::identity;
  unsigned bits = 0;  // quantizing schemes only
  std::uint32_t dim = 0;
  std::uint32_t n_examples = 0;
  Payload payload;
  std::size_t wire_bytes = 0;
};

// Canonical little-endian wire format.
//
//   header (16 bytes): tag u32 (kind | bits << 8), dim u32, n_examples u32,
//                      reserved u32 (zero)
//   identity:          dim x f64
//   low_rank:          round u32, client u32, requested rank u32, matrix
//                      count u32, one effective rank u32 per matrix, then
//                      per layout slot the factor (matrix) or raw (vector) f64s
//   random_mask,
//   subsample:         round u32, client u32, kept count u32, kept f64s
//   quantize:          lo f64, hi f64, ceil(dim*b/8) code bytes
//   rotate_quantize:   round u32, client u32, lo f64, hi f64,
//                      ceil(pow2(dim)*b/8) code bytes
inline constexpr std::size_t kHeaderBytes = 16;

// Exact serialized size, computed from the payload shape without serializing.
std::size_t measure_bytes(const EncodedUpdate& enc);
std::vector<std::uint8_t> serialize(const EncodedUpdate& enc);
// Throws CodecError on truncated, oversized or inconsistent input.
EncodedUpdate deserialize(std::span<const std::uint8_t> bytes);

// Smallest power of two >= n.
std::size_t next_pow2(std::size_t n);

// In-place unnormalized fast Walsh-Hadamard transform; size must be a power of two.
void fwht(std::span<double> data);

// R = H*D: random +/-1 diagonal followed by the orthonormal Walsh-Hadamard
// transform, on the input zero-padded to a power of two.
class RandomRotation {
 public:
  RandomRotation(std::size_t dim, std::uint64_t seed);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t padded_dim() const noexcept { return signs_.size(); }

  // Returns padded_dim() values.
  std::vector<double> apply(std::span<const double> x) const;
  // Inverse rotation of a padded vector, truncated back to dim().
  std::vector<double> invert(std::span<const double> y) const;

 private:
  std::size_t dim_;
  std::vector<double> signs_;
};

// Solves min ||M X - rhs||_F by Householder QR. M is rows x cols (rows >=
// cols, full column rank), rhs is rows x k, both row-major; returns X (cols x k).
std::vector<double> least_squares(std::span<const double> m, std::size_t rows, std::size_t cols,
                                  std::span<const double> rhs, std::size_t k);

// Packs/unpacks b-bit codes as an MSB-first bitstream padded to a byte.
std::vector<std::uint8_t> pack_codes(std::span<const std::uint32_t> codes, unsigned bits);
std::vector<std::uint32_t> unpack_codes(std::span<const std::uint8_t> packed, std::size_t count,
                                        unsigned bits);

class Codec {
 public:
  Codec(CompressionScheme scheme, std::uint64_t session_seed);

  const CompressionScheme& scheme() const noexcept { return scheme_; }

  EncodedUpdate encode(const ParamVector& delta, const ParamLayout& layout, std::uint32_t round,
                       std::uint32_t client_id, std::uint32_t n_examples) const;
  // Decodes any scheme's encoding produced under the same session seed.
  ParamVector decode(const EncodedUpdate& enc, const ParamLayout& layout) const;

  // Ascending coordinate indices kept by random_mask/subsample for this round
  // and client.
  std::vector<std::size_t> mask_indices(std::size_t dim, std::size_t kept, std::uint32_t round,
                                        std::uint32_t client_id) const;
  std::uint64_t stream_seed(const char* label, std::uint32_t round,
                            std::uint32_t client_id) const noexcept;

 private:
  CompressionScheme scheme_;
  std::uint64_t seed_;
};

}  // namespace fedsim
