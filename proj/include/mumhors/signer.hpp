#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "mumhors/bitmap.hpp"
#include "mumhors/params.hpp"
#include "mumhors/primitives.hpp"

namespace mumhors {

using Pads = std::array<Secret128, 3>;

/// Secret material produced at key generation: the master key and the three pads.
struct KeyMaterial {
  Secret128 msk{};
  Pads pads{};
};

/// Deterministic expansion of an arbitrary seed into key material.
KeyMaterial expand_seed(ByteView seed);
KeyMaterial random_key_material();

/// Each 128-bit pad stretched to k*log2(t) bits: Trunc(H_pad(pad_i), k log t).
std::array<TruncatedHash, 3> pad_masks(const Pads& pads, const SchemeParams& params);

enum class DerivationPath : std::uint8_t { direct, pad1, pad2, pad3, counter };
std::string_view to_string(DerivationPath p);

/// Collision-free indices for a message plus how they were obtained.
struct IndexDerivation {
  IndexVector indices;
  DerivationPath path = DerivationPath::direct;
  std::uint32_t ctr = 1;
  friend bool operator==(const IndexDerivation&, const IndexDerivation&) = default;
};

/// Weak-message mitigation pipeline: the plain truncated hash, then the hash XORed
/// cumulatively with each pad mask, then Trunc(H(h3 || ctr)) for ctr = 1, 2, ...
IndexDerivation derive_indices(ByteView m, const Pads& pads, const SchemeParams& params);

/// Same pipeline starting from an explicit truncated hash. `max_ctr` bounds the counter
/// stage; exceeding it throws DerivationFailure.
IndexDerivation derive_indices_from_hash(const TruncatedHash& h0, const Pads& pads, const SchemeParams& params,
                                         std::uint32_t max_ctr = std::numeric_limits<std::uint32_t>::max());

struct Signature {
  std::vector<Digest256> elems;
  std::uint32_t ctr = 1;
  friend bool operator==(const Signature&, const Signature&) = default;
};

/// Everything mum_sig produced; `derivation` feeds post_sign.
struct SignResult {
  Signature sig;
  IndexDerivation derivation;
  std::vector<RowColumn> coords;  ///< revealed (row, col) per element, in signature order
};

/// The complete private signing state. Move-only; use clone() for an explicit deep copy.
class SignerState {
 public:
  SignerState(const SchemeParams& params, const KeyMaterial& keys, BitmapBackend backend = BitmapBackend::queue);
  SignerState(const SchemeParams& params, const KeyMaterial& keys, std::unique_ptr<Bitmap> bm);

  SignerState(SignerState&&) noexcept = default;
  SignerState& operator=(SignerState&&) noexcept = default;
  SignerState clone() const;

  const SchemeParams& params() const { return params_; }
  const KeyMaterial& keys() const { return keys_; }
  const Bitmap& bitmap() const { return *bm_; }
  Bitmap& bitmap() { return *bm_; }
  bool awaiting_update() const { return pending_.has_value(); }

 private:
  friend SignResult mum_sig(SignerState& st, ByteView m);
  friend bool post_sign(SignerState& st, const IndexDerivation& d);

  SchemeParams params_;
  KeyMaterial keys_;
  std::unique_ptr<Bitmap> bm_;
  std::optional<IndexDerivation> pending_;
};

/// Signs against the current bitmap without modifying it. Throws CapacityExhausted when
/// fewer than `window` keys remain and StateError if the previous signature was never
/// followed by post_sign.
SignResult mum_sig(SignerState& st, ByteView m);

/// Idle-time update: unsets the indices and extends the bitmap. Returns false once no
/// further signature is possible. `d` must be the derivation of the last mum_sig.
bool post_sign(SignerState& st, const IndexDerivation& d);

}  // namespace mumhors
