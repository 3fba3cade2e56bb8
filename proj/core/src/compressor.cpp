#include "fedsim/compressor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <type_traits>
#include <numeric>
#include <random>

#include "fedsim/error.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {
namespace {

std::size_t kept_count(double s, std::size_t dim) {
  const auto k = static_cast<std::size_t>(std::ceil(s * static_cast<double>(dim)));
  return std::clamp<std::size_t>(k, 1, dim);
}

std::size_t code_bytes(std::size_t count, unsigned bits) { return (count * bits + 7) / 8; }

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bitsv = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(bitsv >> (8 * i)));
  }
  void f64s(const std::vector<double>& vs) {
    for (double v : vs) f64(v);
  }
  void raw(const std::vector<std::uint8_t>& b) { out_.insert(out_.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  std::vector<double> f64s(std::size_t n) {
    need(n * 8);
    std::vector<double> out(n);
    for (auto& v : out) v = f64();
    return out;
  }
  std::vector<std::uint8_t> bytes(std::size_t n) {
    need(n);
    std::vector<std::uint8_t> out(in_.begin() + pos_, in_.begin() + pos_ + n);
    pos_ += n;
    return out;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw CodecError("encoded update truncated at byte " + std::to_string(pos_));
    }
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::size_t layout_dim(const ParamLayout& layout) {
  std::size_t d = 0;
  for (const auto& s : layout) d += s.size();
  return d;
}

// Two-point stochastic rounding onto 2^bits evenly spaced levels in [lo, hi].
std::vector<std::uint32_t> stochastic_codes(std::span<const double> x, double lo, double hi,
                                            unsigned bits, Rng& rng) {
  std::vector<std::uint32_t> codes(x.size(), 0);
  if (!(hi > lo)) return codes;
  const std::uint32_t levels = (1u << bits) - 1;
  const double span = hi - lo;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double p = (x[i] - lo) / span * levels;
    const double fl = std::floor(p);
    auto code = static_cast<std::uint32_t>(fl);
    if (uniform01(rng) < p - fl) ++code;
    codes[i] = std::min(code, levels);
  }
  return codes;
}

std::vector<double> dequantize(std::span<const std::uint32_t> codes, double lo, double hi,
                               unsigned bits) {
  std::vector<double> out(codes.size(), lo);
  if (!(hi > lo)) return out;
  const double levels = static_cast<double>((1u << bits) - 1);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    // Interpolating form maps code 0 to lo and the top code to hi exactly.
    const double t = codes[i] / levels;
    out[i] = lo * (1.0 - t) + hi * t;
  }
  return out;
}

void check_codes(std::span<const std::uint32_t> codes, unsigned bits) {
  const std::uint32_t levels = (1u << bits) - 1;
  for (auto c : codes) {
    if (c > levels) throw CodecError("quantization code out of range");
  }
}

std::vector<double> gaussian_matrix(std::size_t rows, std::size_t cols, std::size_t r, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double s = 1.0 / std::sqrt(static_cast<double>(r));
  std::vector<double> out(rows * cols);
  for (auto& v : out) v = normal(rng) * s;
  return out;
}

}  // namespace

const char* to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::identity: return "identity";
    case SchemeKind::low_rank: return "low_rank";
    case SchemeKind::random_mask: return "random_mask";
    case SchemeKind::subsample: return "subsample";
    case SchemeKind::quantize: return "quantize";
    case SchemeKind::rotate_quantize: return "rotate_quantize";
  }
  return "?";
}

SchemeKind parse_scheme_kind(const std::string& name) {
  for (auto k : {SchemeKind::identity, SchemeKind::low_rank, SchemeKind::random_mask,
                 SchemeKind::subsample, SchemeKind::quantize, SchemeKind::rotate_quantize}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown compression scheme '" + name + "'");
}

void CompressionScheme::validate() const {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw ConfigError("compress.keep_fraction must be in (0, 1]");
  }
  if (rank < 1) throw ConfigError("compress.rank must be >= 1");
  if (bits < 1 || bits > 8) throw ConfigError("compress.bits must be in [1, 8]");
}

std::string CompressionScheme::describe() const {
  switch (kind) {
    case SchemeKind::identity: return "identity";
    case SchemeKind::low_rank: return "low_rank(r=" + std::to_string(rank) + ")";
    case SchemeKind::random_mask:
    case SchemeKind::subsample: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%s(s=%g)", to_string(kind), keep_fraction);
      return buf;
    }
    case SchemeKind::quantize:
    case SchemeKind::rotate_quantize:
      return std::string(to_string(kind)) + "(b=" + std::to_string(bits) + ")";
  }
  return "?";
}

std::size_t next_pow2(std::size_t n) { return n <= 1 ? 1 : std::bit_ceil(n); }

std::vector<std::uint8_t> pack_codes(std::span<const std::uint32_t> codes, unsigned bits) {
  std::vector<std::uint8_t> out(code_bytes(codes.size(), bits), 0);
  std::size_t bitpos = 0;
  for (auto code : codes) {
    for (int b = static_cast<int>(bits) - 1; b >= 0; --b, ++bitpos) {
      if ((code >> b) & 1u) out[bitpos / 8] |= static_cast<std::uint8_t>(0x80u >> (bitpos % 8));
    }
  }
  return out;
}

std::vector<std::uint32_t> unpack_codes(std::span<const std::uint8_t> packed, std::size_t count,
                                        unsigned bits) {
  if (packed.size() != code_bytes(count, bits)) throw CodecError("packed code length mismatch");
  std::vector<std::uint32_t> codes(count, 0);
  std::size_t bitpos = 0;
  for (auto& code : codes) {
    for (unsigned b = 0; b < bits; ++b, ++bitpos) {
      code = (code << 1) | ((packed[bitpos / 8] >> (7 - bitpos % 8)) & 1u);
    }
  }
  return codes;
}

void fwht(std::span<double> data) {
  const std::size_t n = data.size();
  if (!std::has_single_bit(n)) throw DomainError("fwht: size must be a power of two");
  for (std::size_t len = 1; len < n; len <<= 1) {
    for (std::size_t i = 0; i < n; i += len << 1) {
      for (std::size_t j = i; j < i + len; ++j) {
        const double a = data[j];
        const double b = data[j + len];
        data[j] = a + b;
        data[j + len] = a - b;
      }
    }
  }
}

RandomRotation::RandomRotation(std::size_t dim, std::uint64_t seed)
    : dim_(dim), signs_(next_pow2(dim)) {
  if (dim == 0) throw DomainError("RandomRotation: dim must be >= 1");
  Rng rng(seed);
  for (auto& s : signs_) s = (rng() >> 63) ? -1.0 : 1.0;
}

std::vector<double> RandomRotation::apply(std::span<const double> x) const {
  require_same_dim(x.size(), dim_, "RandomRotation::apply");
  std::vector<double> y(signs_.size(), 0.0);
  for (std::size_t i = 0; i < dim_; ++i) y[i] = signs_[i] * x[i];
  fwht(y);
  const double norm = 1.0 / std::sqrt(static_cast<double>(y.size()));
  for (auto& v : y) v *= norm;
  return y;
}

std::vector<double> RandomRotation::invert(std::span<const double> y) const {
  require_same_dim(y.size(), signs_.size(), "RandomRotation::invert");
  std::vector<double> z(y.begin(), y.end());
  fwht(z);
  const double norm = 1.0 / std::sqrt(static_cast<double>(z.size()));
  std::vector<double> x(dim_);
  for (std::size_t i = 0; i < dim_; ++i) x[i] = signs_[i] * z[i] * norm;
  return x;
}

std::vector<double> least_squares(std::span<const double> m, std::size_t rows, std::size_t cols,
                                  std::span<const double> rhs, std::size_t k) {
  if (rows < cols) throw DomainError("least_squares: need rows >= cols");
  require_same_dim(m.size(), rows * cols, "least_squares matrix");
  require_same_dim(rhs.size(), rows * k, "least_squares rhs");
  std::vector<double> a(m.begin(), m.end());
  std::vector<double> b(rhs.begin(), rhs.end());
  std::vector<double> v(rows);

  // Householder QR, applying each reflector to the right-hand side as we go.
  for (std::size_t j = 0; j < cols; ++j) {
    double norm = 0.0;
    for (std::size_t i = j; i < rows; ++i) norm += a[i * cols + j] * a[i * cols + j];
    norm = std::sqrt(norm);
    if (norm == 0.0) throw DomainError("least_squares: matrix is rank deficient");
    const double alpha = a[j * cols + j] > 0.0 ? -norm : norm;
    double vnorm2 = 0.0;
    for (std::size_t i = j; i < rows; ++i) {
      v[i] = a[i * cols + j] - (i == j ? alpha : 0.0);
      vnorm2 += v[i] * v[i];
    }
    if (vnorm2 == 0.0) continue;
    auto reflect = [&](std::vector<double>& target, std::size_t width, std::size_t col) {
      double s = 0.0;
      for (std::size_t i = j; i < rows; ++i) s += v[i] * target[i * width + col];
      s = 2.0 * s / vnorm2;
      for (std::size_t i = j; i < rows; ++i) target[i * width + col] -= s * v[i];
    };
    for (std::size_t c = j; c < cols; ++c) reflect(a, cols, c);
    for (std::size_t c = 0; c < k; ++c) reflect(b, k, c);
  }

  std::vector<double> x(cols * k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t jj = cols; jj-- > 0;) {
      double s = b[jj * k + c];
      for (std::size_t t = jj + 1; t < cols; ++t) s -= a[jj * cols + t] * x[t * k + c];
      const double diag = a[jj * cols + jj];
      if (diag == 0.0) throw DomainError("least_squares: matrix is rank deficient");
      x[jj * k + c] = s / diag;
    }
  }
  return x;
}

std::size_t measure_bytes(const EncodedUpdate& enc) {
  struct Visitor {
    const EncodedUpdate& e;
    std::size_t operator()(const RawPayload& p) const { return 8 * p.values.size(); }
    std::size_t operator()(const LowRankPayload& p) const {
      return 16 + 4 * p.ranks.size() + 8 * p.values.size();
    }
    std::size_t operator()(const MaskPayload& p) const { return 12 + 8 * p.values.size(); }
    std::size_t operator()(const QuantPayload&) const { return 16 + code_bytes(e.dim, e.bits); }
    std::size_t operator()(const RotQuantPayload&) const {
      return 8 + 16 + code_bytes(next_pow2(e.dim), e.bits);
    }
  };
  return kHeaderBytes + std::visit(Visitor{enc}, enc.payload);
}

std::vector<std::uint8_t> serialize(const EncodedUpdate& enc) {
  Writer w;
  w.u32(static_cast<std::uint32_t>(enc.kind) | (enc.bits << 8));
  w.u32(enc.dim);
  w.u32(enc.n_examples);
  w.u32(0);
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, RawPayload>) {
          w.f64s(p.values);
        } else if constexpr (std::is_same_v<P, LowRankPayload>) {
          w.u32(p.round);
          w.u32(p.client_id);
          w.u32(p.requested_rank);
          w.u32(static_cast<std::uint32_t>(p.ranks.size()));
          for (auto r : p.ranks) w.u32(r);
          w.f64s(p.values);
        } else if constexpr (std::is_same_v<P, MaskPayload>) {
          w.u32(p.round);
          w.u32(p.client_id);
          w.u32(static_cast<std::uint32_t>(p.values.size()));
          w.f64s(p.values);
        } else if constexpr (std::is_same_v<P, QuantPayload>) {
          w.f64(p.lo);
          w.f64(p.hi);
          w.raw(p.codes);
        } else {
          w.u32(p.round);
          w.u32(p.client_id);
          w.f64(p.lo);
          w.f64(p.hi);
          w.raw(p.codes);
        }
      },
      enc.payload);
  return w.take();
}

EncodedUpdate deserialize(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  EncodedUpdate enc;
  const std::uint32_t tag = r.u32();
  const std::uint32_t kind = tag & 0xffu;
  enc.bits = (tag >> 8) & 0xffu;
  if (kind > static_cast<std::uint32_t>(SchemeKind::rotate_quantize) || (tag >> 16) != 0) {
    throw CodecError("unknown scheme tag " + std::to_string(tag));
  }
  enc.kind = static_cast<SchemeKind>(kind);
  enc.dim = r.u32();
  enc.n_examples = r.u32();
  if (r.u32() != 0) throw CodecError("reserved header field is not zero");
  if (enc.dim == 0) throw CodecError("encoded dim is zero");
  const bool quantizing = enc.kind == SchemeKind::quantize || enc.kind == SchemeKind::rotate_quantize;
  if (quantizing ? (enc.bits < 1 || enc.bits > 8) : enc.bits != 0) {
    throw CodecError("invalid bit width " + std::to_string(enc.bits));
  }

  switch (enc.kind) {
    case SchemeKind::identity:
      enc.payload = RawPayload{r.f64s(enc.dim)};
      break;
    case SchemeKind::low_rank: {
      LowRankPayload p;
      p.round = r.u32();
      p.client_id = r.u32();
      p.requested_rank = r.u32();
      const std::uint32_t nranks = r.u32();
      if (nranks > enc.dim) throw CodecError("low_rank matrix count out of range");
      for (std::uint32_t i = 0; i < nranks; ++i) p.ranks.push_back(r.u32());
      if (r.remaining() % 8 != 0) throw CodecError("low_rank payload is not a whole number of reals");
      p.values = r.f64s(r.remaining() / 8);
      enc.payload = std::move(p);
      break;
    }
    case SchemeKind::random_mask:
    case SchemeKind::subsample: {
      MaskPayload p;
      p.round = r.u32();
      p.client_id = r.u32();
      const std::uint32_t kept = r.u32();
      if (kept == 0 || kept > enc.dim) throw CodecError("mask kept count out of range");
      p.values = r.f64s(kept);
      enc.payload = std::move(p);
      break;
    }
    case SchemeKind::quantize: {
      QuantPayload p;
      p.lo = r.f64();
      p.hi = r.f64();
      p.codes = r.bytes(code_bytes(enc.dim, enc.bits));
      enc.payload = std::move(p);
      break;
    }
    case SchemeKind::rotate_quantize: {
      RotQuantPayload p;
      p.round = r.u32();
      p.client_id = r.u32();
      p.lo = r.f64();
      p.hi = r.f64();
      p.codes = r.bytes(code_bytes(next_pow2(enc.dim), enc.bits));
      enc.payload = std::move(p);
      break;
    }
  }
  if (r.remaining() != 0) throw CodecError("trailing bytes after encoded update");
  enc.wire_bytes = bytes.size();
  return enc;
}

Codec::Codec(CompressionScheme scheme, std::uint64_t session_seed)
    : scheme_(scheme), seed_(session_seed) {
  scheme_.validate();
}

std::uint64_t Codec::stream_seed(const char* label, std::uint32_t round,
                                 std::uint32_t client_id) const noexcept {
  return derive_seed(seed_, label, round, client_id);
}

std::vector<std::size_t> Codec::mask_indices(std::size_t dim, std::size_t kept,
                                             std::uint32_t round, std::uint32_t client_id) const {
  std::vector<std::size_t> idx(dim);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(stream_seed("mask", round, client_id));
  // Partial Fisher-Yates: the first `kept` slots are a uniform sample.
  for (std::size_t i = 0; i < kept; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (dim - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(kept);
  std::sort(idx.begin(), idx.end());
  return idx;
}

EncodedUpdate Codec::encode(const ParamVector& delta, const ParamLayout& layout,
                            std::uint32_t round, std::uint32_t client_id,
                            std::uint32_t n_examples) const {
  const std::size_t dim = delta.dim();
  require_same_dim(dim, layout_dim(layout), "encode layout");
  EncodedUpdate enc;
  enc.kind = scheme_.kind;
  enc.dim = static_cast<std::uint32_t>(dim);
  enc.n_examples = n_examples;
  const auto x = delta.values();

  switch (scheme_.kind) {
    case SchemeKind::identity:
      enc.payload = RawPayload{delta.to_vector()};
      break;

    case SchemeKind::low_rank: {
      LowRankPayload p;
      p.round = round;
      p.client_id = client_id;
      p.requested_rank = static_cast<std::uint32_t>(scheme_.rank);
      Rng rng(stream_seed("low_rank", round, client_id));
      for (const auto& slot : layout) {
        const auto w = x.subspan(slot.offset, slot.size());
        if (!slot.is_matrix()) {
          p.values.insert(p.values.end(), w.begin(), w.end());
          continue;
        }
        const std::size_t rows = slot.rows;
        const std::size_t cols = slot.cols;
        const std::size_t r = std::min({scheme_.rank, rows, cols});
        p.ranks.push_back(static_cast<std::uint32_t>(r));
        std::vector<double> factor;
        if (cols <= rows) {
          // Fixed B (r x cols); solve B^T A^T = W^T for A^T (r x rows).
          const auto basis = gaussian_matrix(r, cols, r, rng);
          std::vector<double> bt(cols * r), wt(cols * rows);
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < cols; ++j) bt[j * r + i] = basis[i * cols + j];
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) wt[j * rows + i] = w[i * cols + j];
          factor = least_squares(bt, cols, r, wt, rows);
        } else {
          // Fixed A (rows x r); solve A B = W for B (r x cols).
          const auto basis = gaussian_matrix(rows, r, r, rng);
          factor = least_squares(basis, rows, r, std::vector<double>(w.begin(), w.end()), cols);
        }
        p.values.insert(p.values.end(), factor.begin(), factor.end());
      }
      enc.payload = std::move(p);
      break;
    }

    case SchemeKind::random_mask:
    case SchemeKind::subsample: {
      MaskPayload p;
      p.round = round;
      p.client_id = client_id;
      for (auto i : mask_indices(dim, kept_count(scheme_.keep_fraction, dim), round, client_id)) {
        p.values.push_back(x[i]);
      }
      enc.payload = std::move(p);
      break;
    }

    case SchemeKind::quantize: {
      enc.bits = scheme_.bits;
      QuantPayload p;
      const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
      p.lo = *lo;
      p.hi = *hi;
      Rng rng(stream_seed("quantize", round, client_id));
      p.codes = pack_codes(stochastic_codes(x, p.lo, p.hi, enc.bits, rng), enc.bits);
      enc.payload = std::move(p);
      break;
    }

    case SchemeKind::rotate_quantize: {
      enc.bits = scheme_.bits;
      RotQuantPayload p;
      p.round = round;
      p.client_id = client_id;
      const RandomRotation rot(dim, stream_seed("rotation", round, client_id));
      const auto y = rot.apply(x);
      const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
      p.lo = *lo;
      p.hi = *hi;
      Rng rng(stream_seed("quantize", round, client_id));
      p.codes = pack_codes(stochastic_codes(y, p.lo, p.hi, enc.bits, rng), enc.bits);
      enc.payload = std::move(p);
      break;
    }
  }
  enc.wire_bytes = measure_bytes(enc);
  return enc;
}

ParamVector Codec::decode(const EncodedUpdate& enc, const ParamLayout& layout) const {
  const std::size_t dim = enc.dim;
  if (dim != layout_dim(layout)) {
    throw CodecError("encoded dim " + std::to_string(dim) + " does not match layout dim " +
                     std::to_string(layout_dim(layout)));
  }
  auto wrong_payload = [&] {
    return CodecError(std::string("payload does not match scheme tag ") + to_string(enc.kind));
  };
  std::vector<double> out(dim, 0.0);

  switch (enc.kind) {
    case SchemeKind::identity: {
      const auto* p = std::get_if<RawPayload>(&enc.payload);
      if (p == nullptr) throw wrong_payload();
      if (p->values.size() != dim) throw CodecError("identity payload size mismatch");
      out = p->values;
      break;
    }

    case SchemeKind::low_rank: {
      const auto* p = std::get_if<LowRankPayload>(&enc.payload);
      if (p == nullptr) throw wrong_payload();
      Rng rng(stream_seed("low_rank", p->round, p->client_id));
      std::size_t pos = 0;
      std::size_t mat = 0;
      auto take = [&](std::size_t n) {
        if (pos + n > p->values.size()) throw CodecError("low_rank payload truncated");
        const double* start = p->values.data() + pos;
        pos += n;
        return start;
      };
      for (const auto& slot : layout) {
        double* w = out.data() + slot.offset;
        if (!slot.is_matrix()) {
          const double* src = take(slot.size());
          std::copy(src, src + slot.size(), w);
          continue;
        }
        const std::size_t rows = slot.rows;
        const std::size_t cols = slot.cols;
        if (mat >= p->ranks.size()) throw CodecError("low_rank payload missing a rank entry");
        const std::size_t r = p->ranks[mat++];
        if (r < 1 || r > std::min({static_cast<std::size_t>(p->requested_rank), rows, cols})) {
          throw CodecError("low_rank payload has an invalid rank");
        }
        if (cols <= rows) {
          const auto basis = gaussian_matrix(r, cols, r, rng);
          const double* at = take(r * rows);  // A^T, r x rows
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) {
              double s = 0.0;
              for (std::size_t t = 0; t < r; ++t) s += at[t * rows + i] * basis[t * cols + j];
              w[i * cols + j] = s;
            }
        } else {
          const auto basis = gaussian_matrix(rows, r, r, rng);
          const double* b = take(r * cols);
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) {
              double s = 0.0;
              for (std::size_t t = 0; t < r; ++t) s += basis[i * r + t] * b[t * cols + j];
              w[i * cols + j] = s;
            }
        }
      }
      if (pos != p->values.size() || mat != p->ranks.size()) {
        throw CodecError("low_rank payload has trailing data");
      }
      break;
    }

    case SchemeKind::random_mask:
    case SchemeKind::subsample: {
      const auto* p = std::get_if<MaskPayload>(&enc.payload);
      if (p == nullptr) throw wrong_payload();
      const std::size_t kept = p->values.size();
      if (kept == 0 || kept > dim) throw CodecError("mask payload size out of range");
      // Each coordinate survives with probability kept/dim, so dim/kept
      // rescaling is what makes subsample unbiased.
      const double scale = enc.kind == SchemeKind::subsample
                               ? static_cast<double>(dim) / static_cast<double>(kept)
                               : 1.0;
      const auto idx = mask_indices(dim, kept, p->round, p->client_id);
      for (std::size_t k = 0; k < kept; ++k) out[idx[k]] = p->values[k] * scale;
      break;
    }

    case SchemeKind::quantize: {
      const auto* p = std::get_if<QuantPayload>(&enc.payload);
      if (p == nullptr) throw wrong_payload();
      if (enc.bits < 1 || enc.bits > 8) throw CodecError("invalid bit width");
      const auto codes = unpack_codes(p->codes, dim, enc.bits);
      check_codes(codes, enc.bits);
      out = dequantize(codes, p->lo, p->hi, enc.bits);
      break;
    }

    case SchemeKind::rotate_quantize: {
      const auto* p = std::get_if<RotQuantPayload>(&enc.payload);
      if (p == nullptr) throw wrong_payload();
      if (enc.bits < 1 || enc.bits > 8) throw CodecError("invalid bit width");
      const RandomRotation rot(dim, stream_seed("rotation", p->round, p->client_id));
      const auto codes = unpack_codes(p->codes, rot.padded_dim(), enc.bits);
      check_codes(codes, enc.bits);
      out = rot.invert(dequantize(codes, p->lo, p->hi, enc.bits));
      break;
    }
  }
  for (double v : out) {
    if (!std::isfinite(v)) throw CodecError("decoded update contains a non-finite value");
  }
  return ParamVector(std::move(out));
}

}  // namespace fedsim
