#include "mumhors/params.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "mumhors/errors.hpp"
#include "mumhors/primitives.hpp"

namespace mumhors {

void SchemeParams::validate() const {
  if (!is_power_of_two(t) || t < 2) throw InvalidParameter("t must be a power of two >= 2");
  if (t > 32768) throw InvalidParameter("t must not exceed 32768 (16-bit column encoding)");
  if (k == 0 || k > t) throw InvalidParameter("k must lie in [1, t]");
  if (hash_bits() > 256) throw InvalidParameter("k*log2(t) must not exceed 256");
  if (l != 256) throw InvalidParameter("l must be 256");
  if (kappa != 128) throw InvalidParameter("kappa must be 128");
  if (rt == 0) throw InvalidParameter("rt must be at least 1");
  if (rt > 0xFFFF) throw InvalidParameter("rt must fit in 16 bits");
  if (rt > r) throw InvalidParameter("rt must not exceed r");
}

unsigned SchemeParams::log_t() const { return log2_exact(t); }

std::string to_string(const SchemeParams& p) {
  return "t=" + std::to_string(p.t) + " k=" + std::to_string(p.k) + " l=" + std::to_string(p.l) +
         " r=" + std::to_string(p.r) + " rt=" + std::to_string(p.rt);
}

MessageCapacity message_capacity(std::uint64_t t, std::uint64_t k, std::uint64_t r) {
  if (k == 0 || r == 0) throw InvalidParameter("k and r must be positive");
  const std::uint64_t keys = (r - 1) * t;
  return {keys / k + 1, keys % k == 0};
}

std::uint64_t bitmap_size_bits(std::uint64_t t, std::uint64_t r, std::uint64_t rt) {
  if (rt == 0) return 0;
  const std::uint64_t log_r = r <= 1 ? 0 : std::bit_width(r - 1);
  return rt * (t + log2_exact(t) + log_r);
}

double max_load_estimate(double rt, double t, double alpha) {
  const double balls_per_bin = (rt * t - t) / rt;
  const double lg = std::log2(rt);
  const double correction = 1.0 - (1.0 / alpha) * std::log2(lg) / (2.0 * lg);
  return balls_per_bin + std::sqrt(2.0 * balls_per_bin * lg * correction);
}

RowThresholdResult solve_row_threshold(const RowThresholdQuery& q) {
  if (!(q.alpha > 0.0 && q.alpha < 1.0)) throw InvalidParameter("alpha must lie in (0, 1)");
  if (q.t < 2 || q.k == 0 || q.k > q.t) throw InvalidParameter("invalid (t, k) for row threshold");
  if (!(q.load_max > 0)) throw InvalidParameter("load_max must be positive");

  const double t = q.t;
  auto f = [&](double rt) { return max_load_estimate(rt, t, q.alpha) - q.load_max; };

  // Geometric scan for the first sign change, then bisection inside it.
  double lo = 1.0 + 1e-6;
  double flo = f(lo);
  double hi = lo;
  bool bracketed = false;
  while (hi < 1e6) {
    const double next = std::min(hi * 1.01 + 1e-3, 1e6);
    const double fnext = f(next);
    if (std::isfinite(flo) && std::isfinite(fnext) && (flo < 0) != (fnext < 0)) {
      lo = hi;
      hi = next;
      bracketed = true;
      break;
    }
    hi = next;
    flo = fnext;
  }
  if (!bracketed) throw Error("no row threshold solves the load equation in (1, 1e6)");

  flo = f(lo);
  double mid = 0.5 * (lo + hi);
  double fmid = f(mid);
  for (int iter = 0; iter < 200 && std::abs(fmid) >= 1e-9; ++iter) {
    if ((fmid < 0) == (flo < 0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
    mid = 0.5 * (lo + hi);
    fmid = f(mid);
  }

  RowThresholdResult res;
  res.rt = mid;
  res.residual = fmid;
  const double lg = std::log2(mid);
  res.regime_ratio = (mid * t - t) / (mid * lg * lg * lg);
  res.regime_ok = res.regime_ratio >= 10.0;
  return res;
}

SecurityBound eucma_bound(std::uint32_t t, std::uint32_t k, std::uint32_t L) {
  if (L > 256) throw InvalidParameter("L must not exceed 256");
  const double log_t = log2_exact(t);
  SecurityBound b;
  b.preimage_term = std::max(-double(L) / 2.0, -double(k) * log_t / 2.0);
  b.inversion_term = -double(k) * double(L) / 2.0;
  b.subset_term = double(k) * (std::log2(double(k)) - log_t);
  const double top = std::max({b.preimage_term, b.inversion_term, b.subset_term});
  b.total = top + std::log2(std::exp2(b.preimage_term - top) + std::exp2(b.inversion_term - top) +
                            std::exp2(b.subset_term - top));
  return b;
}

EnergyEstimate energy_estimate(double cycles, double tx_bits, const EnergyModel& model) {
  if (cycles < 0 || tx_bits < 0) throw InvalidParameter("energy inputs must be nonnegative");
  EnergyEstimate e;
  e.sign_mj = cycles * model.joules_per_cycle * 1e3;
  e.tx_mj = tx_bits * model.joules_per_bit * 1e3;
  e.total_mj = e.sign_mj + e.tx_mj;
  return e;
}

}  // namespace mumhors
