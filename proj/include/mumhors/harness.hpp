#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mumhors/bitmap.hpp"
#include "mumhors/params.hpp"
#include "mumhors/verifier.hpp"

namespace mumhors {

// ---- utilization ----

struct ExtensionEvent {
  std::uint64_t message = 0;  ///< 1-based ordinal of the signature that preceded the extension
  std::uint32_t cleaned = 0;
  std::optional<std::uint32_t> evicted_row;
  std::uint32_t bits_lost = 0;
  std::uint32_t rows_added = 0;
};

struct UtilizationReport {
  SchemeParams params;  ///< with the rt actually simulated
  std::uint64_t messages_signed = 0;
  std::uint64_t bits_lost = 0;
  std::uint64_t residual = 0;  ///< live bits left at exhaustion
  double utilization_pct = 0;  ///< messages_signed relative to message_capacity
  std::vector<ExtensionEvent> events;

  /// k*messages + lost + residual == r*t
  bool conserved() const;
};

/// Runs the real bitmap and index derivation to exhaustion without any keys. Message i is
/// H(seed || i) as 32 bytes; the pads are expanded from the same seed.
UtilizationReport simulate_utilization(const SchemeParams& params, std::optional<std::uint32_t> rt_override,
                                       std::uint64_t workload_seed, BitmapBackend backend = BitmapBackend::queue,
                                       bool keep_events = true);

/// One "key=value ..." line per report.
std::string to_text(const UtilizationReport& rep);
std::string utilization_csv(const std::vector<UtilizationReport>& reports);

// ---- lossy channel ----

enum class CorruptionKind : std::uint8_t { flip_sig, flip_msg, drop };
std::string_view to_string(CorruptionKind k);
CorruptionKind parse_corruption(std::string_view name);

struct Corruption {
  std::uint64_t ordinal = 0;  ///< 1-based
  CorruptionKind kind = CorruptionKind::flip_sig;
};

struct ChannelModel {
  std::vector<Corruption> schedule;  ///< ordinals strictly increasing
  void validate() const;
  const Corruption* at(std::uint64_t ordinal) const;
};

enum class VerifierMode : std::uint8_t { plain, sca };
std::string_view to_string(VerifierMode m);
VerifierMode parse_verifier_mode(std::string_view name);

struct ChannelEvent {
  std::uint64_t ordinal = 0;
  std::optional<CorruptionKind> corruption;
  bool delivered = true;
  bool accepted = false;
  bool second_chance = false;
  friend bool operator==(const ChannelEvent&, const ChannelEvent&) = default;
};

struct ChannelTranscript {
  std::vector<ChannelEvent> events;
  bool exhausted = false;    ///< the signer ran out of keys before n messages
  bool final_sync = false;   ///< store pattern equals bitmap pattern with no DOUBT slots
  std::uint64_t doubt_remaining = 0;
  /// All honest messages after the last corruption were accepted and the pair ended in sync.
  bool recovered = false;
  friend bool operator==(const ChannelTranscript&, const ChannelTranscript&) = default;
};

/// Pumps n messages from `pair.signer` to `pair.store` through the channel. Plain mode runs
/// mum_ver and post_verify on acceptance only; sca mode runs sca_verify then extend_view.
ChannelTranscript simulate_channel(KeyPair& pair, VerifierMode mode, const ChannelModel& channel,
                                   std::uint64_t n_messages, std::uint64_t seed);

std::string to_text(const ChannelTranscript& tr);

// ---- backend fuzzing ----

/// Deliberate defects for checking that the fuzzer notices divergence.
enum class FuzzMutant : std::uint8_t {
  none,
  unset_off_by_one,  ///< the queue backend receives the highest unset index plus one
};

enum class FuzzOpKind : std::uint8_t { unset, get, cleanup, extend };

struct FuzzOp {
  FuzzOpKind kind = FuzzOpKind::get;
  IndexVector indices;  ///< unset: the indices; get: a single index
  std::string describe() const;
};

struct FuzzVerdict {
  bool agree = true;
  std::uint64_t ops_run = 0;
  std::optional<std::uint64_t> divergence_step;  ///< 0-based op number
  std::string divergence;                        ///< which observable differed
  std::vector<FuzzOp> minimized_trace;           ///< shortest failing replay found
};

/// Applies n_ops random operations to the queue backend, the list backend and FlatOracle,
/// comparing every observable after each op. An exhausted epoch restarts all three fresh.
FuzzVerdict fuzz_bitmap(std::uint64_t seed, std::uint64_t n_ops, const SchemeParams& small_params,
                        FuzzMutant mutant = FuzzMutant::none);

}  // namespace mumhors
