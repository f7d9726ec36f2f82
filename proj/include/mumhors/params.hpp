#pragma once

#include <cstdint>
#include <string>

namespace mumhors {

/// Public scheme constants. Construct directly or via the named presets, then call validate().
struct SchemeParams {
  std::uint32_t t = 1024;  ///< key slots per bitmap row (power of two)
  std::uint32_t k = 25;    ///< keys revealed per signature
  std::uint32_t l = 256;   ///< private-key element length in bits
  std::uint32_t r = 25601; ///< total rows ever issued
  std::uint32_t rt = 11;   ///< rows held at once
  std::uint32_t kappa = 128;

  static SchemeParams standard() { return {}; }
  static SchemeParams desk() { return {16, 4, 256, 64, 4, 128}; }

  /// Throws InvalidParameter naming the first violated constraint.
  void validate() const;

  unsigned log_t() const;
  /// k * log2(t): length of the truncated message hash.
  unsigned hash_bits() const { return k * log_t(); }
  std::uint32_t window() const { return t; }
  std::uint32_t element_bytes() const { return l / 8; }

  friend bool operator==(const SchemeParams&, const SchemeParams&) = default;
};

std::string to_string(const SchemeParams& p);

// ---------------------------------------------------------------------------
// Capacity and storage formulas

struct MessageCapacity {
  std::uint64_t messages = 0;
  bool exact = true;  ///< false when k does not divide (r-1)*t and the quotient was floored
};

/// M = (r-1)*t/k + 1.
MessageCapacity message_capacity(std::uint64_t t, std::uint64_t k, std::uint64_t r);

/// rt * (t + log2 t + ceil(log2 r)).
std::uint64_t bitmap_size_bits(std::uint64_t t, std::uint64_t r, std::uint64_t rt);

// ---------------------------------------------------------------------------
// Row-threshold solver (balls-in-bins maximum load)

struct RowThresholdQuery {
  std::uint32_t t = 1024;
  std::uint32_t k = 25;
  double alpha = 0.999;
  double load_max = 999;

  static RowThresholdQuery minimal(std::uint32_t t, std::uint32_t k, double alpha) {
    return {t, k, alpha, double(t) - double(k)};
  }
  static RowThresholdQuery full_depletion(std::uint32_t t, std::uint32_t k, double alpha) {
    return {t, k, alpha, double(t)};
  }
};

struct RowThresholdResult {
  double rt = 0;
  double residual = 0;      ///< load_estimate(rt) - load_max at the returned root
  double regime_ratio = 0;  ///< (rt*t - t) / (rt * log2(rt)^3); the estimate assumes this is >> 1
  bool regime_ok = false;   ///< regime_ratio >= 10
};

/// Expected maximum load when rt*t - t balls are thrown into rt bins (log base 2 throughout).
double max_load_estimate(double rt, double t, double alpha);

/// Root of max_load_estimate(rt) == load_max over (1, 1e6). Throws InvalidParameter on a bad
/// query and Error ("no solution") when the bracket holds no sign change.
RowThresholdResult solve_row_threshold(const RowThresholdQuery& q);

// ---------------------------------------------------------------------------
// EU-CMA bound, all values are log2

struct SecurityBound {
  double preimage_term = 0;   ///< log2 max(2^-L/2, 2^-(k log t)/2)
  double inversion_term = 0;  ///< log2 2^-(k L / 2)
  double subset_term = 0;     ///< log2 (k/t)^k
  double total = 0;
};

SecurityBound eucma_bound(std::uint32_t t, std::uint32_t k, std::uint32_t L);

// ---------------------------------------------------------------------------
// Energy model of the MICAz sensor node

struct EnergyModel {
  double joules_per_cycle = 4.07e-9;
  double joules_per_bit = 0.168e-6;
};

struct EnergyEstimate {
  double sign_mj = 0;
  double tx_mj = 0;
  double total_mj = 0;
};

EnergyEstimate energy_estimate(double cycles, double tx_bits, const EnergyModel& model = {});

/// 1 KB = 1024 bytes.
constexpr double kilobytes_to_bits(double kb) { return kb * 1024.0 * 8.0; }

}  // namespace mumhors
