// One PASS/FAIL line per acceptance criterion; exits non-zero if any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "mumhors/errors.hpp"
#include "mumhors/formats.hpp"
#include "mumhors/harness.hpp"
#include "mumhors/params.hpp"
#include "mumhors/verifier.hpp"

using namespace mumhors;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool within(double got, double want, double rel) { return std::abs(got - want) <= rel * std::abs(want); }

Bytes numbered(const std::string& tag, std::uint64_t i) {
  const auto d = blake2b_256(as_bytes(tag + std::to_string(i)));
  return Bytes(d.begin(), d.end());
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void solver() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto a = solve_row_threshold(RowThresholdQuery::minimal(1024, 25, 0.999));
  const auto b = solve_row_threshold(RowThresholdQuery::full_depletion(1024, 25, 0.999));
  const double s = seconds_since(t0);
  report(1, std::abs(a.rt - 10.903) <= 0.01 && std::abs(b.rt - 13.94) <= 0.05 && s < 1.0,
         fmt("rt(t-k)=%.6f rt(t)=%.6f in %.3fs", a.rt, b.rt, s));
}

void capacity() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cap = message_capacity(1024, 25, 25601);
  const auto rep = simulate_utilization(SchemeParams::standard(), 11, 1, BitmapBackend::queue, false);
  const double s = seconds_since(t0);
  report(2, cap.messages == 1048577 && rep.messages_signed == cap.messages && rep.bits_lost == 0 && s < 600,
         fmt("formula=%llu simulated=%llu bits_lost=%llu residual=%llu in %.1fs",
             (unsigned long long)cap.messages, (unsigned long long)rep.messages_signed,
             (unsigned long long)rep.bits_lost, (unsigned long long)rep.residual, s));
}

void sensitivity() {
  const auto rep = simulate_utilization(SchemeParams::standard(), 8, 1, BitmapBackend::queue, false);
  const auto cap = message_capacity(1024, 25, 25601).messages;
  const auto shortfall = static_cast<double>(cap - rep.messages_signed);
  report(3, rep.bits_lost > 0 && within(double(rep.bits_lost), 10536, 0.2) && within(shortfall, 463, 0.2),
         fmt("bits_lost=%llu (target 10536) shortfall=%.0f (target 463)", (unsigned long long)rep.bits_lost,
             shortfall));
}

void bitmap_size() {
  const auto bits = bitmap_size_bits(1024, 25601, 11);
  const double kb = bits / 8.0 / 1024.0;
  report(4, bits == 11539 && std::abs(kb - 1.4) < 0.05, fmt("%llu bits = %.3f KB", (unsigned long long)bits, kb));
}

void energy() {
  const auto e = energy_estimate(342976, kilobytes_to_bits(0.78));
  report(5, within(e.sign_mj, 1.396, 0.01) && within(e.tx_mj, 1.075, 0.01),
         fmt("sign=%.4f mJ (1.396) tx=%.4f mJ (1.075)", e.sign_mj, e.tx_mj));
}

// Criteria 6 and 7 share the full desk-scale run.
void desk_lifetime() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = SchemeParams::desk();
  const auto cap = message_capacity(p.t, p.k, p.r).messages;
  auto pair = mum_kg(p, expand_seed(as_bytes("acceptance desk")));
  std::uint64_t ok = 0, failed_verify = 0;
  std::set<std::pair<std::uint32_t, std::uint32_t>> coords;
  std::uint64_t revealed = 0;
  bool exhausted_at_next = false;
  std::uint64_t attempted = 0;
  for (;;) {
    const auto m = numbered("desk ", attempted++);
    SignResult res;
    try {
      res = mum_sig(pair.signer, m);
    } catch (const CapacityExhausted&) {
      exhausted_at_next = true;
      break;
    }
    for (const auto& c : res.coords) {
      coords.insert({c.row, c.col});
      ++revealed;
    }
    const auto out = mum_ver(pair.store, m, res.sig);
    post_sign(pair.signer, res.derivation);
    if (!out.accepted) {
      ++failed_verify;
      continue;
    }
    post_verify(pair.store, out.derivation->indices);
    ++ok;
  }
  const double s = seconds_since(t0);
  const bool count_ok = ok == cap && failed_verify == 0 && exhausted_at_next && attempted == cap + 1;
  report(6, count_ok && s < 5.0,
         fmt("signed+verified=%llu of capacity %llu, verify failures=%llu, exhausted at message %llu, %.2fs",
             (unsigned long long)ok, (unsigned long long)cap, (unsigned long long)failed_verify,
             (unsigned long long)attempted, s));
  report(7, coords.size() == revealed && revealed == ok * p.k,
         fmt("%llu revealed coordinates, %zu distinct", (unsigned long long)revealed, coords.size()));
}

void weak_messages() {
  const auto p = SchemeParams::standard();
  auto pair = mum_kg(p, expand_seed(as_bytes("acceptance weak")));
  std::mt19937_64 rng(8);
  std::uint64_t bad = 0, fallback = 0;
  const std::uint64_t n = 100000;
  for (std::uint64_t i = 0; i < n; ++i) {
    Bytes m(1 + rng() % 64);
    for (auto& b : m) b = static_cast<std::uint8_t>(rng());
    const auto res = mum_sig(pair.signer, m);
    const auto out = mum_ver(pair.store, m, res.sig);
    std::set<std::uint32_t> distinct(res.derivation.indices.begin(), res.derivation.indices.end());
    if (distinct.size() != p.k || !out.accepted || !out.derivation || !(*out.derivation == res.derivation)) ++bad;
    if (res.derivation.path != DerivationPath::direct) ++fallback;
    post_sign(pair.signer, res.derivation);
    if (out.accepted) post_verify(pair.store, out.derivation->indices);
  }
  report(8, bad == 0,
         fmt("%llu messages, %llu mismatches, %llu needed a pad or counter", (unsigned long long)n,
             (unsigned long long)bad, (unsigned long long)fallback));
}

void backends() {
  const SchemeParams small{8, 2, 256, 12, 3, 128};
  std::uint64_t diverged = 0, ops = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto v = fuzz_bitmap(seed, 10000, small);
    ops += v.ops_run;
    if (!v.agree) ++diverged;
  }
  report(9, diverged == 0 && ops == 1000000,
         fmt("100 seeds, %llu ops, %llu divergent seeds", (unsigned long long)ops, (unsigned long long)diverged));
}

void tampering() {
  const auto p = SchemeParams::standard();
  auto pair = mum_kg(p, expand_seed(as_bytes("acceptance tamper")));
  std::mt19937_64 rng(10);
  std::uint64_t accepted_tampered = 0, accepted_random = 0;
  for (int i = 0; i < 1000; ++i) {
    Bytes m = numbered("tamper ", i);
    const auto res = mum_sig(pair.signer, m);
    Bytes wire = encode_signature(res.sig);
    // Flip one bit of m || signature body (magic excluded; it would be a parse error).
    const std::size_t span = m.size() + wire.size() - 4;
    const std::size_t bit = rng() % (span * 8);
    Bytes tm = m;
    if (bit / 8 < m.size()) {
      tm[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    } else {
      wire[4 + bit / 8 - m.size()] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    }
    if (mum_ver(pair.store, tm, decode_signature(wire)).accepted) ++accepted_tampered;

    Signature forged;
    forged.elems.resize(p.k);
    for (auto& e : forged.elems)
      for (auto& b : e) b = static_cast<std::uint8_t>(rng());
    forged.ctr = res.sig.ctr;
    if (mum_ver(pair.store, m, forged).accepted) ++accepted_random;

    post_sign(pair.signer, res.derivation);
    const auto honest = mum_ver(pair.store, m, res.sig);
    if (!honest.accepted) throw Error("honest signature rejected during tamper run");
    post_verify(pair.store, honest.derivation->indices);
  }
  report(10, accepted_tampered == 0 && accepted_random == 0,
         fmt("1000 single-bit tamperings accepted=%llu, 1000 random signatures accepted=%llu",
             (unsigned long long)accepted_tampered, (unsigned long long)accepted_random));
}

bool single_fault_ok(const SchemeParams& p, CorruptionKind kind, std::uint64_t seed) {
  auto pair = mum_kg(p, expand_seed(as_bytes("acceptance sca")));
  const ChannelModel ch{{{5, kind}}};
  const auto tr = simulate_channel(pair, VerifierMode::sca, ch, 60, seed);
  bool ok = tr.final_sync && tr.doubt_remaining == 0 && !tr.exhausted && tr.events.size() == 60;
  for (const auto& e : tr.events) ok = ok && (e.accepted == (e.ordinal != 5));
  return ok;
}

void sca() {
  const auto desk = SchemeParams::desk();
  const auto standard = SchemeParams::standard();
  const bool fixed = single_fault_ok(desk, CorruptionKind::flip_sig, 1) && single_fault_ok(desk, CorruptionKind::flip_msg, 1) &&
                     single_fault_ok(standard, CorruptionKind::flip_sig, 1) &&
                     single_fault_ok(standard, CorruptionKind::flip_msg, 1);

  // Beyond recovery: three consecutive signatures lost.
  auto pair = mum_kg(desk, expand_seed(as_bytes("acceptance burst")));
  const ChannelModel burst{{{5, CorruptionKind::drop}, {6, CorruptionKind::drop}, {7, CorruptionKind::drop}}};
  const auto tr = simulate_channel(pair, VerifierMode::sca, burst, 30, 1);
  const auto fresh = std::max(pair.store.nextrow(), pair.signer.bitmap().nextrow()) + 1;
  hard_reset(pair.store, pair.signer, fresh);
  const bool reset_synced = pair.store.mirrors(pair.signer.bitmap());
  const auto after = simulate_channel(pair, VerifierMode::sca, {}, 10, 2);
  const bool reset_ok = reset_synced && after.recovered && after.events.size() == 10;

  // Informational spread over channel seeds for the desk flip-sig case.
  int recovered = 0;
  for (std::uint64_t s = 1; s <= 100; ++s) recovered += single_fault_ok(desk, CorruptionKind::flip_sig, s);

  report(11, fixed && !tr.recovered && reset_ok,
         fmt("single flip (sig/msg, desk/standard) recovered=%d; burst recovered=%d, hard_reset roundtrip=%d; "
             "desk flip-sig recovered in %d/100 channel seeds",
             fixed, tr.recovered, reset_ok, recovered));
}

void bound() {
  const auto b = eucma_bound(1024, 25, 256);
  const bool dominated = b.preimage_term >= b.inversion_term && b.preimage_term >= b.subset_term &&
                         std::abs(b.preimage_term - (-125.0)) < 1e-9;
  report(12, std::abs(b.total + 125.0) <= 0.5 && dominated,
         fmt("total=%.3f preimage=%.3f subset=%.3f inversion=%.1f", b.total, b.preimage_term, b.subset_term,
             b.inversion_term));
}

}  // namespace

int main() {
  try {
    solver();
    capacity();
    sensitivity();
    bitmap_size();
    energy();
    desk_lifetime();
    weak_messages();
    backends();
    tampering();
    sca();
    bound();
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
