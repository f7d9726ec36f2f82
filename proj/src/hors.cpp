#include "mumhors/hors.hpp"

namespace mumhors {

HorsKeyPair hors_kg(const SchemeParams& params, const Secret128& seed) {
  params.validate();
  HorsKeyPair kp{params, {}, {}};
  kp.sk.reserve(params.t);
  kp.pk.reserve(params.t);
  for (std::uint32_t i = 1; i <= params.t; ++i) {
    kp.sk.push_back(prf(seed, 1, i));
    kp.pk.push_back(one_way(kp.sk.back()));
  }
  return kp;
}

IndexVector hors_indices(const SchemeParams& params, ByteView m) {
  return split_indices(trunc(hash_message(m), params.hash_bits()), params.t, params.k);
}

std::vector<Digest256> hors_sig(const HorsKeyPair& kp, ByteView m) {
  std::vector<Digest256> sig;
  for (auto idx : hors_indices(kp.params, m)) sig.push_back(kp.sk[idx]);
  return sig;
}

bool hors_ver(const SchemeParams& params, const std::vector<Digest256>& pk, ByteView m,
              const std::vector<Digest256>& sig) {
  if (sig.size() != params.k || pk.size() != params.t) return false;
  const auto indices = hors_indices(params, m);
  for (std::size_t j = 0; j < indices.size(); ++j)
    if (pk[indices[j]] != one_way(sig[j])) return false;
  return true;
}

}  // namespace mumhors
