#include "mumhors/signer.hpp"

#include <sodium.h>

#include <algorithm>
#include <string>

namespace mumhors {

KeyMaterial expand_seed(ByteView seed) {
  const Bytes material = hash_expand(HashDomain::seed_expand, seed, 64);
  KeyMaterial km;
  std::copy_n(material.begin(), 16, km.msk.begin());
  for (std::size_t i = 0; i < 3; ++i) std::copy_n(material.begin() + 16 + 16 * i, 16, km.pads[i].begin());
  if (km.pads[0] == km.pads[1] || km.pads[1] == km.pads[2] || km.pads[0] == km.pads[2])
    throw Error("seed expansion produced repeated pads");
  return km;
}

KeyMaterial random_key_material() {
  if (sodium_init() < 0) throw Error("libsodium initialisation failed");
  std::array<std::uint8_t, 32> seed;
  randombytes_buf(seed.data(), seed.size());
  KeyMaterial km = expand_seed(seed);
  sodium_memzero(seed.data(), seed.size());
  return km;
}

std::array<TruncatedHash, 3> pad_masks(const Pads& pads, const SchemeParams& params) {
  const unsigned bits = params.hash_bits();
  std::array<TruncatedHash, 3> masks;
  for (std::size_t i = 0; i < 3; ++i) {
    const Bytes stretched = hash_expand(HashDomain::pad_mask, pads[i], 32);
    Digest256 d;
    std::copy_n(stretched.begin(), 32, d.begin());
    masks[i] = trunc(d, bits);
  }
  return masks;
}

std::string_view to_string(DerivationPath p) {
  switch (p) {
    case DerivationPath::direct: return "direct";
    case DerivationPath::pad1: return "pad1";
    case DerivationPath::pad2: return "pad2";
    case DerivationPath::pad3: return "pad3";
    case DerivationPath::counter: return "counter";
  }
  return "?";
}

IndexDerivation derive_indices_from_hash(const TruncatedHash& h0, const Pads& pads, const SchemeParams& params,
                                         std::uint32_t max_ctr) {
  const unsigned bits = params.hash_bits();
  if (h0.size() != bits) throw InvalidParameter("initial hash length does not match k*log2(t)");

  TruncatedHash hash = h0;
  IndexDerivation d;
  d.indices = split_indices(hash, params.t, params.k);
  if (!has_collision(d.indices)) return d;

  const auto masks = pad_masks(pads, params);
  static constexpr DerivationPath pad_paths[] = {DerivationPath::pad1, DerivationPath::pad2, DerivationPath::pad3};
  for (std::size_t i = 0; i < 3; ++i) {
    hash ^= masks[i];
    d.indices = split_indices(hash, params.t, params.k);
    if (!has_collision(d.indices)) {
      d.path = pad_paths[i];
      return d;
    }
  }

  d.path = DerivationPath::counter;
  Bytes input(hash.bytes().begin(), hash.bytes().end());
  const std::size_t ctr_at = input.size();
  input.resize(ctr_at + 4);
  for (std::uint32_t ctr = 1;; ++ctr) {
    for (int b = 0; b < 4; ++b) input[ctr_at + b] = static_cast<std::uint8_t>(ctr >> (24 - 8 * b));
    d.indices = split_indices(trunc(hash_message(input), bits), params.t, params.k);
    if (!has_collision(d.indices)) {
      d.ctr = ctr;
      return d;
    }
    if (ctr >= max_ctr) throw DerivationFailure("counter stage exhausted after " + std::to_string(ctr) + " tries");
  }
}

IndexDerivation derive_indices(ByteView m, const Pads& pads, const SchemeParams& params) {
  return derive_indices_from_hash(trunc(hash_message(m), params.hash_bits()), pads, params);
}

SignerState::SignerState(const SchemeParams& params, const KeyMaterial& keys, BitmapBackend backend)
    : params_(params), keys_(keys), bm_(make_bitmap(params, backend)) {}

SignerState::SignerState(const SchemeParams& params, const KeyMaterial& keys, std::unique_ptr<Bitmap> bm)
    : params_(params), keys_(keys), bm_(std::move(bm)) {
  params_.validate();
  if (!bm_) throw InvalidArgument("signer state requires a bitmap");
  if (bm_->t() != params_.t || bm_->rt() != params_.rt)
    throw InvalidParameter("bitmap geometry does not match the scheme parameters");
  if (bm_->nextrow() > params_.r + 1) throw InvalidParameter("bitmap has issued more than r rows");
}

SignerState SignerState::clone() const {
  SignerState copy(params_, keys_, bm_->clone());
  copy.pending_ = pending_;
  return copy;
}

SignResult mum_sig(SignerState& st, ByteView m) {
  if (st.pending_) throw StateError("previous signature has not been followed by post_sign");
  const Bitmap& bm = *st.bm_;
  if (bm.activebits() < bm.window()) throw CapacityExhausted();

  SignResult out;
  out.derivation = derive_indices(m, st.keys_.pads, st.params_);
  out.sig.ctr = out.derivation.ctr;
  out.sig.elems.reserve(st.params_.k);
  out.coords.reserve(st.params_.k);
  for (auto idx : out.derivation.indices) {
    const RowColumn rc = bm.get_row_column(idx);
    out.coords.push_back(rc);
    out.sig.elems.push_back(prf(st.keys_.msk, rc.row, rc.col));
  }
  st.pending_ = out.derivation;
  return out;
}

bool post_sign(SignerState& st, const IndexDerivation& d) {
  if (!st.pending_) throw StateError("post_sign without a preceding signature");
  if (!(*st.pending_ == d)) throw StateError("post_sign derivation does not match the last signature");
  st.bm_->unset_indices(d.indices);
  st.pending_.reset();
  return st.bm_->extend_matrix(st.params_.r);
}

}  // namespace mumhors
