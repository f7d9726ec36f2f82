#include "mumhors/harness.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "mumhors/errors.hpp"
#include "mumhors/signer.hpp"

namespace mumhors {
namespace {

void put_u64(Bytes& out, std::uint64_t v) {
  for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

Bytes seed_bytes(std::uint64_t seed) {
  Bytes b;
  put_u64(b, seed);
  return b;
}

Digest256 workload_message(std::uint64_t seed, std::uint64_t i) {
  Bytes b;
  put_u64(b, seed);
  put_u64(b, i);
  return blake2b_256(b);
}

}  // namespace

bool UtilizationReport::conserved() const {
  return std::uint64_t{params.k} * messages_signed + bits_lost + residual ==
         std::uint64_t{params.r} * params.t;
}

UtilizationReport simulate_utilization(const SchemeParams& params, std::optional<std::uint32_t> rt_override,
                                       std::uint64_t workload_seed, BitmapBackend backend, bool keep_events) {
  UtilizationReport rep;
  rep.params = params;
  if (rt_override) rep.params.rt = *rt_override;
  rep.params.validate();
  const SchemeParams& p = rep.params;

  const KeyMaterial keys = expand_seed(seed_bytes(workload_seed));
  auto bm = make_bitmap(p, backend);
  std::uint64_t i = 0;
  while (bm->activebits() >= bm->window()) {
    const Digest256 m = workload_message(workload_seed, ++i);
    const IndexDerivation d = derive_indices(m, keys.pads, p);
    bm->unset_indices(d.indices);
    ++rep.messages_signed;
    const ExtendOutcome out = bm->extend_matrix_detailed(p.r);
    if (keep_events && out.extended)
      rep.events.push_back({i, out.cleaned, out.evicted_row, out.bits_lost, out.rows_added});
    if (!out.ok) break;
  }
  rep.bits_lost = bm->bits_lost();
  rep.residual = bm->activebits();
  const auto cap = message_capacity(p.t, p.k, p.r).messages;
  rep.utilization_pct = 100.0 * static_cast<double>(rep.messages_signed) / static_cast<double>(cap);
  return rep;
}

std::string to_text(const UtilizationReport& rep) {
  std::ostringstream os;
  os << "t=" << rep.params.t << " k=" << rep.params.k << " r=" << rep.params.r << " rt=" << rep.params.rt
     << " messages_signed=" << rep.messages_signed << " bits_lost=" << rep.bits_lost
     << " residual=" << rep.residual << " utilization_pct=" << rep.utilization_pct
     << " extensions=" << rep.events.size();
  return os.str();
}

std::string utilization_csv(const std::vector<UtilizationReport>& reports) {
  std::ostringstream os;
  os << "rt,messages_signed,bits_lost,utilization_pct\n";
  os.setf(std::ios::fixed);
  os.precision(4);
  for (const auto& r : reports)
    os << r.params.rt << ',' << r.messages_signed << ',' << r.bits_lost << ',' << r.utilization_pct << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------

std::string_view to_string(CorruptionKind k) {
  switch (k) {
    case CorruptionKind::flip_sig: return "flip-sig";
    case CorruptionKind::flip_msg: return "flip-msg";
    case CorruptionKind::drop: return "drop";
  }
  return "?";
}

CorruptionKind parse_corruption(std::string_view name) {
  if (name == "flip-sig") return CorruptionKind::flip_sig;
  if (name == "flip-msg") return CorruptionKind::flip_msg;
  if (name == "drop") return CorruptionKind::drop;
  throw InvalidArgument("unknown corruption kind '" + std::string(name) + "'");
}

void ChannelModel::validate() const {
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i].ordinal == 0) throw InvalidArgument("corruption ordinals are 1-based");
    if (i > 0 && schedule[i].ordinal <= schedule[i - 1].ordinal)
      throw InvalidArgument("corruption ordinals must be strictly increasing");
  }
}

const Corruption* ChannelModel::at(std::uint64_t ordinal) const {
  auto it = std::lower_bound(schedule.begin(), schedule.end(), ordinal,
                             [](const Corruption& c, std::uint64_t o) { return c.ordinal < o; });
  return it != schedule.end() && it->ordinal == ordinal ? &*it : nullptr;
}

std::string_view to_string(VerifierMode m) { return m == VerifierMode::plain ? "plain" : "sca"; }

VerifierMode parse_verifier_mode(std::string_view name) {
  if (name == "plain") return VerifierMode::plain;
  if (name == "sca") return VerifierMode::sca;
  throw InvalidArgument("unknown verifier mode '" + std::string(name) + "'");
}

ChannelTranscript simulate_channel(KeyPair& pair, VerifierMode mode, const ChannelModel& channel,
                                   std::uint64_t n_messages, std::uint64_t seed) {
  channel.validate();
  std::mt19937_64 rng(seed ^ 0x6368616e6e656cULL);
  ChannelTranscript tr;
  for (std::uint64_t i = 1; i <= n_messages; ++i) {
    const Digest256 m = workload_message(seed, i);
    SignResult res;
    try {
      res = mum_sig(pair.signer, m);
    } catch (const CapacityExhausted&) {
      tr.exhausted = true;
      break;
    }
    post_sign(pair.signer, res.derivation);

    ChannelEvent ev;
    ev.ordinal = i;
    Bytes msg(m.begin(), m.end());
    Signature sig = res.sig;
    if (const Corruption* c = channel.at(i)) {
      ev.corruption = c->kind;
      switch (c->kind) {
        case CorruptionKind::drop:
          ev.delivered = false;
          break;
        case CorruptionKind::flip_sig: {
          auto& e = sig.elems[rng() % sig.elems.size()];
          e[rng() % e.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
          break;
        }
        case CorruptionKind::flip_msg:
          msg[rng() % msg.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
          break;
      }
    }
    if (ev.delivered) {
      if (mode == VerifierMode::plain) {
        const VerifyOutcome out = mum_ver(pair.store, msg, sig);
        ev.accepted = out.accepted;
        if (out.accepted) post_verify(pair.store, out.derivation->indices);
      } else {
        const VerifyOutcome out = sca_verify(pair.store, msg, sig);
        ev.accepted = out.accepted;
        ev.second_chance = out.second_chance;
        pair.store.extend_view();
      }
    }
    tr.events.push_back(ev);
  }
  tr.final_sync = pair.store.mirrors(pair.signer.bitmap());
  tr.doubt_remaining = pair.store.doubt_count();
  const std::uint64_t last = channel.schedule.empty() ? 0 : channel.schedule.back().ordinal;
  tr.recovered = tr.final_sync && std::all_of(tr.events.begin(), tr.events.end(), [&](const ChannelEvent& e) {
                   return e.ordinal <= last || e.accepted;
                 });
  return tr;
}

std::string to_text(const ChannelTranscript& tr) {
  std::ostringstream os;
  for (const auto& e : tr.events) {
    os << "ordinal=" << e.ordinal << " corruption=" << (e.corruption ? to_string(*e.corruption) : "none")
       << " delivered=" << e.delivered << " accepted=" << e.accepted << " second_chance=" << e.second_chance
       << '\n';
  }
  os << "summary messages=" << tr.events.size() << " exhausted=" << tr.exhausted << " final_sync=" << tr.final_sync
     << " doubt_remaining=" << tr.doubt_remaining << " recovered=" << tr.recovered << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------

std::string FuzzOp::describe() const {
  std::ostringstream os;
  switch (kind) {
    case FuzzOpKind::unset: os << "unset"; break;
    case FuzzOpKind::get: os << "get"; break;
    case FuzzOpKind::cleanup: os << "cleanup"; break;
    case FuzzOpKind::extend: os << "extend"; break;
  }
  for (auto i : indices) os << ' ' << i;
  return os.str();
}

namespace {

struct Triple {
  explicit Triple(const SchemeParams& p)
      : queue(make_bitmap(p, BitmapBackend::queue)), list(make_bitmap(p, BitmapBackend::list)), oracle(p) {}
  std::unique_ptr<Bitmap> queue;
  std::unique_ptr<Bitmap> list;
  FlatOracle oracle;
};

std::string compare_state(const Triple& s) {
  for (const Bitmap* bm : {s.queue.get(), s.list.get()}) {
    const std::string name(to_string(bm->backend()));
    try {
      bm->check_invariants();
    } catch (const StateError& e) {
      return name + " invariant: " + e.what();
    }
    if (bm->enumerate() != s.oracle.live()) return name + " live coordinates";
    if (bm->row_numbers() != s.oracle.rows()) return name + " held rows";
    if (bm->nextrow() != s.oracle.nextrow()) return name + " nextrow";
    if (bm->activerows() != s.oracle.activerows()) return name + " activerows";
    if (bm->activebits() != s.oracle.activebits()) return name + " activebits";
  }
  return {};
}

IndexVector mutate(const IndexVector& idx, std::uint64_t activebits, FuzzMutant mutant) {
  IndexVector out(idx);
  if (mutant == FuzzMutant::unset_off_by_one && !out.empty()) {
    auto it = std::max_element(out.begin(), out.end());
    if (*it + 1 < activebits) *it += 1;
  }
  return out;
}

bool op_valid(const FuzzOp& op, std::uint64_t activebits) {
  switch (op.kind) {
    case FuzzOpKind::unset:
      return std::all_of(op.indices.begin(), op.indices.end(), [&](auto i) { return i < activebits; });
    case FuzzOpKind::get:
      return op.indices.size() == 1 && op.indices[0] < activebits;
    default:
      return true;
  }
}

/// Applies one op; returns a divergence description or empty.
std::string apply(Triple& s, const FuzzOp& op, std::uint32_t r, FuzzMutant mutant) {
  switch (op.kind) {
    case FuzzOpKind::unset:
      s.queue->unset_indices(mutate(op.indices, s.queue->activebits(), mutant));
      s.list->unset_indices(op.indices);
      s.oracle.unset_indices(op.indices);
      break;
    case FuzzOpKind::get: {
      const auto want = s.oracle.get_row_column(op.indices[0]);
      if (s.queue->get_row_column(op.indices[0]) != want) return "queue get_row_column";
      if (s.list->get_row_column(op.indices[0]) != want) return "list get_row_column";
      break;
    }
    case FuzzOpKind::cleanup: {
      const auto want = s.oracle.cleanup();
      if (s.queue->cleanup() != want) return "queue cleanup count";
      if (s.list->cleanup() != want) return "list cleanup count";
      break;
    }
    case FuzzOpKind::extend: {
      const bool want = s.oracle.extend_matrix(r);
      if (s.queue->extend_matrix(r) != want) return "queue extend result";
      if (s.list->extend_matrix(r) != want) return "list extend result";
      break;
    }
  }
  return compare_state(s);
}

/// Replays `trace` from fresh state, skipping ops that are invalid at that point and
/// restarting an epoch once extension fails. Returns the op number of the first divergence.
std::optional<std::size_t> replay(const std::vector<FuzzOp>& trace, const SchemeParams& p, FuzzMutant mutant,
                                  std::string* what) {
  Triple s(p);
  for (std::size_t n = 0; n < trace.size(); ++n) {
    const auto& op = trace[n];
    if (!op_valid(op, s.oracle.activebits())) continue;
    std::string d;
    try {
      d = apply(s, op, p.r, mutant);
    } catch (const Error& e) {
      d = std::string("exception: ") + e.what();
    }
    if (!d.empty()) {
      if (what) *what = d;
      return n;
    }
    if (op.kind == FuzzOpKind::extend && s.oracle.activebits() < p.t && s.oracle.nextrow() > p.r) s = Triple(p);
  }
  return std::nullopt;
}

std::vector<FuzzOp> minimize(std::vector<FuzzOp> trace, const SchemeParams& p, FuzzMutant mutant) {
  constexpr std::size_t kMaxMinimize = 4000;
  if (trace.size() > kMaxMinimize) return trace;
  for (std::size_t i = 0; i < trace.size();) {
    std::vector<FuzzOp> candidate(trace);
    candidate.erase(candidate.begin() + static_cast<std::ptrdiff_t>(i));
    if (auto at = replay(candidate, p, mutant, nullptr)) {
      candidate.resize(*at + 1);
      trace = std::move(candidate);
    } else {
      ++i;
    }
  }
  return trace;
}

}  // namespace

FuzzVerdict fuzz_bitmap(std::uint64_t seed, std::uint64_t n_ops, const SchemeParams& p, FuzzMutant mutant) {
  p.validate();
  std::mt19937_64 rng(seed);
  FuzzVerdict v;
  std::vector<FuzzOp> trace;
  Triple s(p);
  for (std::uint64_t n = 0; n < n_ops; ++n) {
    const std::uint64_t live = s.oracle.activebits();
    FuzzOp op;
    const auto roll = rng() % 100;
    if (roll < 40 && live > 0) {
      op.kind = FuzzOpKind::unset;
      const auto count = 1 + rng() % std::min<std::uint64_t>(live, p.t);
      IndexVector all(live);
      std::iota(all.begin(), all.end(), 0u);
      for (std::uint64_t i = 0; i < count; ++i) std::swap(all[i], all[i + rng() % (live - i)]);
      op.indices.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(count));
    } else if (roll < 65 && live > 0) {
      op.kind = FuzzOpKind::get;
      op.indices = {static_cast<std::uint32_t>(rng() % live)};
    } else if (roll < 75) {
      op.kind = FuzzOpKind::cleanup;
    } else {
      op.kind = FuzzOpKind::extend;
    }
    trace.push_back(op);
    std::string d;
    try {
      d = apply(s, op, p.r, mutant);
    } catch (const Error& e) {
      d = std::string("exception: ") + e.what();
    }
    ++v.ops_run;
    if (!d.empty()) {
      v.agree = false;
      v.divergence_step = n;
      v.divergence = d;
      v.minimized_trace = minimize(trace, p, mutant);
      return v;
    }
    if (op.kind == FuzzOpKind::extend && s.oracle.activebits() < p.t && s.oracle.nextrow() > p.r) s = Triple(p);
  }
  return v;
}

}  // namespace mumhors
