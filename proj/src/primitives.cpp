#include "mumhors/primitives.hpp"

#include <sodium.h>

#include <algorithm>
#include <bit>
#include <mutex>

namespace mumhors {
namespace {

thread_local std::uint64_t g_hash_calls = 0;

void ensure_sodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw Error("libsodium initialisation failed");
  });
}

Digest256 tagged_hash(HashDomain tag, ByteView first, ByteView second = {}) {
  ensure_sodium();
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, 32);
  const auto tag_byte = static_cast<std::uint8_t>(tag);
  crypto_generichash_update(&st, &tag_byte, 1);
  crypto_generichash_update(&st, first.data(), first.size());
  if (!second.empty()) crypto_generichash_update(&st, second.data(), second.size());
  Digest256 out;
  crypto_generichash_final(&st, out.data(), out.size());
  ++g_hash_calls;
  return out;
}

}  // namespace

Digest256 blake2b_256(ByteView data) {
  ensure_sodium();
  Digest256 out;
  crypto_generichash(out.data(), out.size(), data.data(), data.size(), nullptr, 0);
  ++g_hash_calls;
  return out;
}

Digest256 hash_message(ByteView m) { return tagged_hash(HashDomain::message, m); }

Digest256 one_way(ByteView x) { return tagged_hash(HashDomain::one_way, x); }

Digest256 prf(const Secret128& msk, std::uint32_t row, std::uint32_t col) {
  if (col > 0xFFFF) throw InvalidParameter("prf column exceeds 16-bit encoding");
  Bytes coords;
  coords.reserve(6);
  put_u32(coords, row);
  put_u16(coords, static_cast<std::uint16_t>(col));
  return tagged_hash(HashDomain::prf, msk, coords);
}

Bytes hash_expand(HashDomain tag, ByteView data, std::size_t out_len) {
  if (out_len < crypto_generichash_BYTES_MIN || out_len > crypto_generichash_BYTES_MAX)
    throw InvalidParameter("hash_expand output length out of range");
  ensure_sodium();
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, out_len);
  const auto tag_byte = static_cast<std::uint8_t>(tag);
  crypto_generichash_update(&st, &tag_byte, 1);
  crypto_generichash_update(&st, data.data(), data.size());
  Bytes out(out_len);
  crypto_generichash_final(&st, out.data(), out.size());
  ++g_hash_calls;
  return out;
}

std::uint64_t hash_call_count() { return g_hash_calls; }

TruncatedHash::TruncatedHash(const Digest256& bytes, unsigned nbits) : bytes_(bytes), nbits_(nbits) {
  if (nbits > 256) throw InvalidParameter("truncation length exceeds 256 bits");
  for (unsigned i = (nbits + 7) / 8; i < bytes_.size(); ++i) bytes_[i] = 0;
  if (nbits % 8 != 0) bytes_[nbits / 8] &= static_cast<std::uint8_t>(0xFF00u >> (nbits % 8));
}

TruncatedHash& TruncatedHash::operator^=(const TruncatedHash& other) {
  if (other.nbits_ != nbits_) throw InvalidParameter("xor of truncated hashes with different lengths");
  for (std::size_t i = 0; i < bytes_.size(); ++i) bytes_[i] ^= other.bytes_[i];
  return *this;
}

TruncatedHash trunc(const Digest256& d, unsigned nbits) { return TruncatedHash(d, nbits); }

unsigned log2_exact(std::uint64_t power_of_two) {
  if (!is_power_of_two(power_of_two)) throw InvalidParameter("value is not a power of two");
  return static_cast<unsigned>(std::countr_zero(power_of_two));
}

IndexVector split_indices(const TruncatedHash& h, std::uint32_t t, std::uint32_t k) {
  const unsigned width = log2_exact(t);
  if (h.size() != width * k)
    throw InvalidParameter("truncated hash has " + std::to_string(h.size()) + " bits, expected " +
                           std::to_string(width * k));
  IndexVector out(k);
  unsigned pos = 0;
  for (auto& idx : out) {
    std::uint32_t v = 0;
    for (unsigned b = 0; b < width; ++b) v = (v << 1) | (h.bit(pos++) ? 1u : 0u);
    idx = v;
  }
  return out;
}

bool has_collision(const IndexVector& v) {
  IndexVector sorted(v);
  std::sort(sorted.begin(), sorted.end());
  return std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
}

std::string to_hex(ByteView data) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xF]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2 != 0) throw ParseError("hex string has odd length");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = nibble(hex[2 * i]), lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw ParseError("invalid hex digit");
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

}  // namespace mumhors
