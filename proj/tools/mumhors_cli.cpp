#include <sys/file.h>
#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string_view>

#include "CLI11.hpp"
#include "mumhors/errors.hpp"
#include "mumhors/formats.hpp"
#include "mumhors/harness.hpp"
#include "mumhors/hors.hpp"
#include "mumhors/params.hpp"
#include "mumhors/signer.hpp"
#include "mumhors/verifier.hpp"

namespace fs = std::filesystem;
using namespace mumhors;

namespace {

enum Exit : int { kOk = 0, kReject = 1, kUsage = 2, kCapacity = 3, kInternal = 4 };

constexpr std::uint64_t kFullKeyFileLimit = 64ull << 20;

struct ParamFlags {
  std::string preset = "standard";
  std::optional<std::uint32_t> t, k, l, r, rt;

  void add(CLI::App* app) {
    app->add_option("--preset", preset, "Base parameter set")->check(CLI::IsMember({"standard", "desk"}));
    app->add_option("--t", t, "Key slots per row (power of two)");
    app->add_option("--k", k, "Keys revealed per signature");
    app->add_option("--l", l, "Private key element length in bits");
    app->add_option("--r", r, "Total rows");
    app->add_option("--rt", rt, "Rows held at once");
  }

  SchemeParams resolve() const {
    SchemeParams p = preset == "desk" ? SchemeParams::desk() : SchemeParams::standard();
    if (t) p.t = *t;
    if (k) p.k = *k;
    if (l) p.l = *l;
    if (r) p.r = *r;
    if (rt) p.rt = *rt;
    p.validate();
    return p;
  }
};

/// --seed wins over MUMHORS_SEED; with neither, keys are random.
KeyMaterial key_material(const std::string& seed_hex) {
  std::string hex = seed_hex;
  if (hex.empty())
    if (const char* env = std::getenv("MUMHORS_SEED")) hex = env;
  if (hex.empty()) return random_key_material();
  Bytes seed;
  try {
    seed = from_hex(hex);
  } catch (const Error& e) {
    throw InvalidArgument(std::string("seed: ") + e.what());
  }
  if (seed.empty()) throw InvalidArgument("seed must not be empty");
  return expand_seed(seed);
}

/// Exclusive advisory lock on "<path>.lock" for the lifetime of the object.
class StateLock {
 public:
  explicit StateLock(const fs::path& state) : path_(state.string() + ".lock") {
    fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT, 0600);
    if (fd_ < 0) throw Error("cannot open lock file '" + path_ + "'");
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw Error("state file '" + state.string() + "' is locked by another signer");
    }
  }
  ~StateLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  StateLock(const StateLock&) = delete;
  StateLock& operator=(const StateLock&) = delete;

 private:
  std::string path_;
  int fd_ = -1;
};

std::vector<std::uint32_t> parse_list(const std::string& s) {
  std::vector<std::uint32_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dash = item.find('-');
    try {
      if (dash == std::string::npos) {
        out.push_back(static_cast<std::uint32_t>(std::stoul(item)));
      } else {
        const auto lo = std::stoul(item.substr(0, dash)), hi = std::stoul(item.substr(dash + 1));
        for (auto v = lo; v <= hi; ++v) out.push_back(static_cast<std::uint32_t>(v));
      }
    } catch (const std::logic_error&) {
      throw InvalidArgument("bad list element '" + item + "'");
    }
  }
  return out;
}

ChannelModel parse_schedule(const std::string& s) {
  ChannelModel ch;
  if (s.empty()) return ch;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw InvalidArgument("schedule entries look like ORDINAL:KIND");
    Corruption c;
    try {
      c.ordinal = std::stoull(item.substr(0, colon));
    } catch (const std::logic_error&) {
      throw InvalidArgument("bad schedule ordinal '" + item + "'");
    }
    c.kind = parse_corruption(item.substr(colon + 1));
    ch.schedule.push_back(c);
  }
  ch.validate();
  return ch;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  write_file_atomic(path, as_bytes(text));
}

// ---------------------------------------------------------------------------

struct KeygenCmd {
  ParamFlags params;
  std::string seed, state, pk;
  bool full_pk = false, lazy_pk = false;
  std::string backend = "queue";

  int run() const {
    const SchemeParams p = params.resolve();
    const KeyMaterial keys = key_material(seed);
    const SignerState st(p, keys, parse_backend(backend));
    const std::uint64_t full_size = KeyFileHeader::encoded_size + std::uint64_t{p.r} * (4 + 32ull * p.t);
    KeyFileMode mode = KeyFileMode::full;
    if (lazy_pk) {
      mode = KeyFileMode::lazy;
    } else if (full_size > kFullKeyFileLimit && !full_pk) {
      std::cerr << "warning: a full key file would be " << full_size
                << " bytes; writing a lazy key file instead (pass --full-pk to force)\n";
      mode = KeyFileMode::lazy;
    }
    write_key_file(pk, p, keys, mode);
    write_file_atomic(state, encode_signer_state(st));
    std::cout << "keygen " << to_string(p) << " pk_mode=" << (mode == KeyFileMode::full ? "full" : "lazy")
              << " state=" << state << " pk=" << pk << '\n';
    return kOk;
  }
};

struct SignCmd {
  ParamFlags params;
  std::string state, message, out;
  std::string backend = "queue";

  int run() const {
    const SchemeParams p = params.resolve();
    StateLock lock(state);
    SignerState st = decode_signer_state(read_file(state), p, parse_backend(backend));
    const Bytes m = read_file(message);
    const SignResult res = mum_sig(st, m);
    const bool more = post_sign(st, res.derivation);
    // The state is durable before the signature exists, so a crash can only waste keys.
    write_file_atomic(state, encode_signer_state(st));
    // Fault injection for the crash-consistency test.
    if (const char* crash = std::getenv("MUMHORS_TEST_CRASH"); crash && std::string_view(crash) == "after-state")
      std::_Exit(kInternal);
    write_file_atomic(out, encode_signature(res.sig));
    std::cout << "signed path=" << to_string(res.derivation.path) << " ctr=" << res.sig.ctr
              << " remaining_bits=" << st.bitmap().activebits() << '\n';
    if (!more) std::cerr << "note: this was the last signature this state can produce\n";
    return kOk;
  }
};

struct VerifyCmd {
  std::string pk, message, sig, vstate;
  std::string mode = "plain";

  int run() const {
    KeyFileHeader header;
    auto source = open_key_source(pk, &header);
    PublicKeyStore store(header.params, header.pads, source);
    if (!vstate.empty() && fs::exists(vstate)) decode_verifier_state(read_file(vstate), store);
    const Bytes m = read_file(message);
    const Signature s = decode_signature(read_file(sig));
    VerifyOutcome res;
    if (parse_verifier_mode(mode) == VerifierMode::plain) {
      res = mum_ver(store, m, s);
      if (res.accepted) post_verify(store, res.derivation->indices);
    } else {
      res = sca_verify(store, m, s);
      store.extend_view();
    }
    if (!vstate.empty()) write_file_atomic(vstate, encode_verifier_state(store));
    if (res.accepted) {
      std::cout << "accept path=" << to_string(res.derivation->path) << " ctr=" << res.derivation->ctr
                << (res.second_chance ? " second_chance=1" : "") << '\n';
      return kOk;
    }
    std::cout << "reject " << res.diagnostic << '\n';
    return kReject;
  }
};

struct SolveCmd {
  std::uint32_t t = 1024, k = 25;
  double alpha = 0.999;
  std::optional<double> load_max;

  int run() const {
    auto show = [](const char* label, const RowThresholdQuery& q) {
      const auto r = solve_row_threshold(q);
      std::cout << label << " load_max=" << std::setprecision(10) << q.load_max << " rt=" << std::fixed << std::setprecision(6) << r.rt
                << " regime_ratio=" << std::setprecision(2) << r.regime_ratio << (r.regime_ok ? "" : " (outside regime)")
                << std::defaultfloat << '\n';
    };
    if (load_max) {
      show("custom", {t, k, alpha, *load_max});
    } else {
      show("minimal", RowThresholdQuery::minimal(t, k, alpha));
      show("full-depletion", RowThresholdQuery::full_depletion(t, k, alpha));
    }
    return kOk;
  }
};

struct BoundCmd {
  std::uint32_t t = 1024, k = 25, L = 256;

  int run() const {
    const auto b = eucma_bound(t, k, L);
    std::cout << std::fixed << std::setprecision(3) << "preimage_log2=" << b.preimage_term
              << " inversion_log2=" << b.inversion_term << " subset_log2=" << b.subset_term
              << " total_log2=" << b.total << '\n';
    return kOk;
  }
};

struct EnergyCmd {
  double cycles = 0;
  std::optional<double> kb, bits;

  int run() const {
    if (kb && bits) throw InvalidArgument("give either --kb or --bits");
    const double tx = bits ? *bits : kilobytes_to_bits(kb.value_or(0));
    const auto e = energy_estimate(cycles, tx);
    std::cout << std::fixed << std::setprecision(4) << "sign_mJ=" << e.sign_mj << " tx_mJ=" << e.tx_mj
              << " total_mJ=" << e.total_mj << '\n';
    return kOk;
  }
};

struct SimulateCmd {
  ParamFlags params;
  std::string rts;
  std::uint64_t workload = 1;
  std::string csv;
  bool events = false;
  std::string backend = "queue";

  int run() const {
    const SchemeParams p = params.resolve();
    std::vector<std::uint32_t> list = rts.empty() ? std::vector<std::uint32_t>{p.rt} : parse_list(rts);
    std::vector<UtilizationReport> reports;
    for (auto rt : list) {
      auto rep = simulate_utilization(p, rt, workload, parse_backend(backend), events);
      std::cout << to_text(rep) << '\n';
      for (const auto& e : rep.events)
        std::cout << "  event message=" << e.message << " cleaned=" << e.cleaned
                  << " evicted=" << (e.evicted_row ? std::to_string(*e.evicted_row) : "none")
                  << " bits_lost=" << e.bits_lost << " rows_added=" << e.rows_added << '\n';
      reports.push_back(std::move(rep));
    }
    write_text(csv, utilization_csv(reports));
    return kOk;
  }
};

struct DesyncCmd {
  ParamFlags params;
  std::string seed = "00";
  std::string mode = "sca";
  std::string schedule;
  std::uint64_t n = 40, channel_seed = 1;
  bool reset = false;

  int run() const {
    const SchemeParams p = params.resolve();
    auto pair = mum_kg(p, expand_seed(from_hex(seed)));
    const auto tr = simulate_channel(pair, parse_verifier_mode(mode), parse_schedule(schedule), n, channel_seed);
    std::cout << to_text(tr);
    if (!tr.recovered && reset) {
      const auto fresh = std::max(pair.store.nextrow(), pair.signer.bitmap().nextrow()) + 1;
      hard_reset(pair.store, pair.signer, fresh);
      const auto again = simulate_channel(pair, parse_verifier_mode(mode), {}, 1, channel_seed + 1);
      std::cout << "hard_reset row=" << fresh << " roundtrip_accepted=" << (!again.events.empty() && again.events[0].accepted)
                << " final_sync=" << again.final_sync << '\n';
      return again.recovered ? kOk : kReject;
    }
    return tr.recovered ? kOk : kReject;
  }
};

struct FuzzCmd {
  std::uint64_t seed = 1, seeds = 1, ops = 10000;
  std::uint32_t t = 8, k = 2, r = 12, rt = 3;
  bool mutant = false;

  int run() const {
    const SchemeParams p{t, k, 256, r, rt, 128};
    for (std::uint64_t s = seed; s < seed + seeds; ++s) {
      const auto v = fuzz_bitmap(s, ops, p, mutant ? FuzzMutant::unset_off_by_one : FuzzMutant::none);
      if (!v.agree) {
        std::cout << "seed=" << s << " divergence at op " << *v.divergence_step << ": " << v.divergence << '\n';
        for (const auto& op : v.minimized_trace) std::cout << "  " << op.describe() << '\n';
        return kReject;
      }
    }
    std::cout << "agree seeds=" << seeds << " ops_per_seed=" << ops << '\n';
    return kOk;
  }
};

struct BenchCmd {
  ParamFlags params;
  std::uint64_t n = 1000;

  int run() const {
    const SchemeParams p = params.resolve();
    using clock = std::chrono::steady_clock;
    auto pair = mum_kg(p, expand_seed(as_bytes("bench")));
    std::vector<Bytes> msgs(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto d = blake2b_256(as_bytes("bench message " + std::to_string(i)));
      msgs[i].assign(d.begin(), d.end());
    }
    std::vector<Signature> sigs;
    double sign_s = 0, verify_s = 0, update_s = 0;
    std::uint64_t sign_h = 0, verify_h = 0, done = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      auto h0 = hash_call_count();
      auto t0 = clock::now();
      SignResult res;
      try {
        res = mum_sig(pair.signer, msgs[i]);
      } catch (const CapacityExhausted&) {
        break;
      }
      auto t1 = clock::now();
      sign_h += hash_call_count() - h0;
      sign_s += std::chrono::duration<double>(t1 - t0).count();
      post_sign(pair.signer, res.derivation);
      auto t2 = clock::now();
      h0 = hash_call_count();
      const auto out = mum_ver(pair.store, msgs[i], res.sig);
      auto t3 = clock::now();
      verify_h += hash_call_count() - h0;
      verify_s += std::chrono::duration<double>(t3 - t2).count();
      if (!out.accepted) throw Error("benchmark signature failed to verify");
      post_verify(pair.store, out.derivation->indices);
      update_s += std::chrono::duration<double>(clock::now() - t3).count() + std::chrono::duration<double>(t2 - t1).count();
      ++done;
    }
    if (done == 0) throw CapacityExhausted();
    const double dn = static_cast<double>(done);
    std::cout << "bench " << to_string(p) << " messages=" << done << std::fixed << std::setprecision(3)
              << " sign_us=" << 1e6 * sign_s / dn << " verify_us=" << 1e6 * verify_s / dn
              << " idle_update_us=" << 1e6 * update_s / dn << std::setprecision(2)
              << " sign_hash_calls=" << static_cast<double>(sign_h) / dn
              << " verify_hash_calls=" << static_cast<double>(verify_h) / dn << '\n';
    return kOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiple-time hash-based signatures with a bitmap key window"};
  app.footer(
      "Exit codes: 0 success/accept, 1 verification reject (or simulation not recovered / fuzz divergence),\n"
      "2 usage or parse error, 3 signing capacity exhausted, 4 internal error.\n"
      "MUMHORS_SEED supplies the key seed (hex) when --seed is not given.");
  app.require_subcommand(1);

  KeygenCmd keygen;
  auto* kg = app.add_subcommand("keygen", "Generate a signer state file and a public key file");
  keygen.params.add(kg);
  kg->add_option("--seed", keygen.seed, "Hex seed for deterministic keys");
  kg->add_option("--state", keygen.state, "Signer state output (MSK1)")->required();
  kg->add_option("--pk", keygen.pk, "Public key output (MPK1)")->required();
  kg->add_flag("--full-pk", keygen.full_pk, "Write every public key even when the file is large");
  kg->add_flag("--lazy-pk", keygen.lazy_pk, "Write a lazy key file from which keys are re-derived");
  kg->add_option("--backend", keygen.backend)->check(CLI::IsMember({"queue", "list"}));

  SignCmd sign;
  auto* sg = app.add_subcommand("sign", "Sign a message file and advance the state file");
  sign.params.add(sg);
  sg->add_option("--state", sign.state, "Signer state (MSK1), updated in place")->required();
  sg->add_option("--message,-m", sign.message, "Message file")->required();
  sg->add_option("--out,-o", sign.out, "Signature output (MSG1)")->required();
  sg->add_option("--backend", sign.backend)->check(CLI::IsMember({"queue", "list"}));

  VerifyCmd verify;
  auto* vf = app.add_subcommand("verify", "Verify a signature against a public key file");
  vf->add_option("--pk", verify.pk, "Public key file (MPK1)")->required();
  vf->add_option("--message,-m", verify.message, "Message file")->required();
  vf->add_option("--sig,-s", verify.sig, "Signature file (MSG1)")->required();
  vf->add_option("--vstate", verify.vstate, "Verifier state (MVS1), created or updated");
  vf->add_option("--mode", verify.mode)->check(CLI::IsMember({"plain", "sca"}));

  SolveCmd solve;
  auto* sv = app.add_subcommand("solve-rt", "Solve the balls-in-bins row threshold");
  sv->add_option("--t", solve.t);
  sv->add_option("--k", solve.k);
  sv->add_option("--alpha", solve.alpha);
  sv->add_option("--load-max", solve.load_max, "Solve a single custom maximum load");

  BoundCmd bound;
  auto* bd = app.add_subcommand("bound", "Evaluate the EU-CMA bound in log2");
  bd->add_option("--t", bound.t);
  bd->add_option("--k", bound.k);
  bd->add_option("--L", bound.L);

  EnergyCmd energy;
  auto* en = app.add_subcommand("energy", "Sensor-node energy estimate");
  en->add_option("--cycles", energy.cycles, "Signing cycles")->required();
  en->add_option("--kb", energy.kb, "Transmitted kilobytes (1 KB = 1024 bytes)");
  en->add_option("--bits", energy.bits, "Transmitted bits");

  SimulateCmd sim;
  auto* sm = app.add_subcommand("simulate", "Keyless utilization simulation to exhaustion");
  sim.params.add(sm);
  sm->add_option("--rt-list", sim.rts, "Comma list or ranges of rt values, e.g. 1-14");
  sm->add_option("--workload-seed", sim.workload);
  sm->add_option("--csv", sim.csv, "CSV output path (default stdout)");
  sm->add_flag("--events", sim.events, "Print every extension event");
  sm->add_option("--backend", sim.backend)->check(CLI::IsMember({"queue", "list"}));

  DesyncCmd desync;
  auto* ds = app.add_subcommand("desync-sim", "Lossy channel simulation between a signer and a verifier");
  desync.params.add(ds);
  ds->add_option("--seed", desync.seed, "Hex key seed");
  ds->add_option("--mode", desync.mode)->check(CLI::IsMember({"plain", "sca"}));
  ds->add_option("--schedule", desync.schedule, "Corruptions, e.g. 5:flip-sig,9:drop");
  ds->add_option("--n", desync.n, "Messages to send");
  ds->add_option("--channel-seed", desync.channel_seed);
  ds->add_flag("--reset", desync.reset, "Hard-reset both sides when not recovered, then re-check");

  FuzzCmd fuzz;
  auto* fz = app.add_subcommand("fuzz-bitmap", "Cross-check both bitmap backends against a flat oracle");
  fz->add_option("--seed", fuzz.seed);
  fz->add_option("--seeds", fuzz.seeds, "Number of consecutive seeds");
  fz->add_option("--ops", fuzz.ops);
  fz->add_option("--t", fuzz.t);
  fz->add_option("--rt", fuzz.rt);
  fz->add_option("--r", fuzz.r);
  fz->add_flag("--mutant", fuzz.mutant, "Inject an off-by-one defect into the queue backend");

  BenchCmd bench;
  auto* bn = app.add_subcommand("bench", "Informational sign/verify timing and hash-call counts");
  bench.params.add(bn);
  bn->add_option("--n", bench.n, "Messages to sign and verify");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*kg) return keygen.run();
    if (*sg) return sign.run();
    if (*vf) return verify.run();
    if (*sv) return solve.run();
    if (*bd) return bound.run();
    if (*en) return energy.run();
    if (*sm) return sim.run();
    if (*ds) return desync.run();
    if (*fz) return fuzz.run();
    if (*bn) return bench.run();
  } catch (const CapacityExhausted& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCapacity;
  } catch (const InvalidParameter& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInternal;
  }
  return kInternal;
}
