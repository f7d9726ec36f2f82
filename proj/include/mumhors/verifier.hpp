#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mumhors/bitmap.hpp"
#include "mumhors/signer.hpp"

namespace mumhors {

/// Supplies the t public keys of a row on demand.
class KeySource {
 public:
  virtual ~KeySource() = default;
  /// Keys for columns 1..t of row `num` (1-based, at most total_rows()).
  virtual std::vector<Digest256> row(std::uint32_t num) const = 0;
  virtual std::uint32_t total_rows() const = 0;
  virtual std::uint32_t t() const = 0;
};

/// Regenerates public keys from the master key: pk[i][j] = f(PRF(msk, i, j)).
class DerivedKeySource final : public KeySource {
 public:
  DerivedKeySource(const Secret128& msk, std::uint32_t t, std::uint32_t r) : msk_(msk), t_(t), r_(r) {}
  std::vector<Digest256> row(std::uint32_t num) const override;
  std::uint32_t total_rows() const override { return r_; }
  std::uint32_t t() const override { return t_; }

 private:
  Secret128 msk_;
  std::uint32_t t_;
  std::uint32_t r_;
};

enum class SlotState : std::uint8_t { deleted = 0, live = 1, doubt = 2 };

struct KeySlot {
  Digest256 key{};
  SlotState state = SlotState::live;
};

struct KeyRow {
  std::uint32_t num = 0;
  std::uint32_t activepks = 0;  ///< slots not DELETED (LIVE and DOUBT both count)
  std::vector<KeySlot> slots;
};

/// Position of a slot inside the held rows.
struct SlotLocation {
  std::size_t row = 0;     ///< offset from the head row
  std::uint32_t col = 0;   ///< 1-based column
};

/// Verifier-side mirror of the signer bitmap holding the actual public keys. Window
/// positions count every non-DELETED slot, so DOUBT slots keep their place.
class PublicKeyStore {
 public:
  PublicKeyStore(const SchemeParams& params, const Pads& pads, std::shared_ptr<const KeySource> source);

  const SchemeParams& params() const { return params_; }
  const Pads& pads() const { return pads_; }
  const std::deque<KeyRow>& rows() const { return rows_; }
  std::uint32_t window() const { return params_.t; }
  std::uint32_t nextrow() const { return nextrow_; }
  std::uint32_t activerows() const { return static_cast<std::uint32_t>(rows_.size()); }
  std::uint64_t activepks() const { return activepks_; }
  std::uint64_t doubt_count() const;

  /// The (index+1)-th non-DELETED slot, head to tail.
  SlotLocation resolve(std::uint64_t index) const;
  const KeySlot& slot(const SlotLocation& at) const { return rows_.at(at.row).slots.at(at.col - 1); }
  void set_state(const SlotLocation& at, SlotState state);

  /// All non-DELETED slots in window order.
  std::vector<SlotLocation> positions() const;

  /// Marks the slots behind `indices` DELETED, highest index first.
  void invalidate(const IndexVector& indices);
  /// Mirror of the signer's extend_matrix over DELETED/non-DELETED slots.
  ExtendOutcome extend_view();
  /// Drops all rows and reloads from `fresh_rownum`.
  void reset(std::uint32_t fresh_rownum);

  /// True iff rows and slot liveness equal the bitmap's rows and bits with no DOUBT slots.
  bool mirrors(const Bitmap& bm) const;

  /// Replaces the slot states and rows (serialised verifier state); keys are re-read from the source.
  struct RowState {
    std::uint32_t num;
    std::vector<SlotState> states;
  };
  void restore(const std::vector<RowState>& rows, std::uint32_t nextrow);

 private:
  KeyRow load_row(std::uint32_t num) const;
  void fill_fresh();

  SchemeParams params_;
  Pads pads_;
  std::shared_ptr<const KeySource> source_;
  std::deque<KeyRow> rows_;
  std::uint32_t nextrow_ = 1;
  std::uint64_t activepks_ = 0;
};

struct VerifyOutcome {
  bool accepted = false;
  std::optional<IndexDerivation> derivation;
  std::vector<bool> matches;  ///< per signature element
  bool second_chance = false; ///< acceptance needed a shifted (SCA) match
  std::string diagnostic;
};

/// Read-only verification against the current window.
VerifyOutcome mum_ver(const PublicKeyStore& store, ByteView m, const Signature& sig);

/// Idle-time update after an accepted signature. Returns the extend result.
bool post_verify(PublicKeyStore& store, const IndexVector& indices);

/// Verification with second-chance recovery. Performs its own slot bookkeeping (deleting
/// revealed keys, marking and resolving DOUBT slots); follow with store.extend_view().
VerifyOutcome sca_verify(PublicKeyStore& store, ByteView m, const Signature& sig);

/// Flushes both sides and restarts them at `fresh_rownum`, which must exceed both nextrows.
void hard_reset(PublicKeyStore& store, SignerState& signer, std::uint32_t fresh_rownum);

/// Key generation: signer state plus a verifier store backed by keys derived from the msk.
struct KeyPair {
  SignerState signer;
  PublicKeyStore store;
};
KeyPair mum_kg(const SchemeParams& params, const KeyMaterial& keys, BitmapBackend backend = BitmapBackend::queue);

}  // namespace mumhors
