#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mumhors/bytes.hpp"

namespace mumhors {

using Digest256 = std::array<std::uint8_t, 32>;
/// 128-bit secret: the master key and each pad seed.
using Secret128 = std::array<std::uint8_t, 16>;
using IndexVector = std::vector<std::uint32_t>;

/// Prefix bytes that separate the roles instantiated from the one hash function.
enum class HashDomain : std::uint8_t {
  message = 0x00,
  one_way = 0x01,
  prf = 0x02,
  pad_mask = 0x03,
  seed_expand = 0x04,
};

/// Plain Blake2b with a 32-byte output, no domain tag.
Digest256 blake2b_256(ByteView data);

Digest256 hash_message(ByteView m);
Digest256 one_way(ByteView x);
/// PRF(msk || row || col): row as 4-byte BE, col as 2-byte BE.
Digest256 prf(const Secret128& msk, std::uint32_t row, std::uint32_t col);

/// Domain-tagged Blake2b with a caller-chosen output length in [16, 64] bytes.
Bytes hash_expand(HashDomain tag, ByteView data, std::size_t out_len);

/// Number of Blake2b invocations made by this thread (for benchmarks).
std::uint64_t hash_call_count();

/// A bit string of at most 256 bits stored MSB-first; bits past `size()` are always zero.
class TruncatedHash {
 public:
  TruncatedHash() = default;
  TruncatedHash(const Digest256& bytes, unsigned nbits);

  unsigned size() const { return nbits_; }
  bool bit(unsigned i) const { return (bytes_[i / 8] >> (7 - i % 8)) & 1u; }
  /// The ceil(size/8) meaningful bytes; the trailing bits of the last byte are zero.
  ByteView bytes() const { return ByteView(bytes_.data(), (nbits_ + 7) / 8); }
  const Digest256& raw() const { return bytes_; }

  TruncatedHash& operator^=(const TruncatedHash& other);
  friend bool operator==(const TruncatedHash&, const TruncatedHash&) = default;

 private:
  Digest256 bytes_{};
  unsigned nbits_ = 0;
};

/// First `nbits` bits of `d`. Throws InvalidParameter when nbits > 256.
TruncatedHash trunc(const Digest256& d, unsigned nbits);

/// Splits `h` into k chunks of log2(t) bits, each read as a big-endian integer.
IndexVector split_indices(const TruncatedHash& h, std::uint32_t t, std::uint32_t k);

bool has_collision(const IndexVector& v);

unsigned log2_exact(std::uint64_t power_of_two);
constexpr bool is_power_of_two(std::uint64_t x) { return x != 0 && (x & (x - 1)) == 0; }

}  // namespace mumhors
