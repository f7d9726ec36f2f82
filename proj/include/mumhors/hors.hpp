#pragma once

#include <vector>

#include "mumhors/params.hpp"
#include "mumhors/primitives.hpp"

namespace mumhors {

/// Baseline HORS few-time key pair: sk[i] = PRF(seed, 1, i+1), pk[i] = f(sk[i]).
struct HorsKeyPair {
  SchemeParams params;
  std::vector<Digest256> sk;
  std::vector<Digest256> pk;
};

HorsKeyPair hors_kg(const SchemeParams& params, const Secret128& seed);

/// Message indices without any collision handling.
IndexVector hors_indices(const SchemeParams& params, ByteView m);

std::vector<Digest256> hors_sig(const HorsKeyPair& kp, ByteView m);

/// False for a signature of the wrong length.
bool hors_ver(const SchemeParams& params, const std::vector<Digest256>& pk, ByteView m,
              const std::vector<Digest256>& sig);

}  // namespace mumhors
