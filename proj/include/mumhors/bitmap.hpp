#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "mumhors/bytes.hpp"
#include "mumhors/params.hpp"
#include "mumhors/primitives.hpp"

namespace mumhors {

enum class BitmapBackend { queue, list };

std::string_view to_string(BitmapBackend b);
BitmapBackend parse_backend(std::string_view name);

/// One t-bit row. Columns are 1-based; column c lives at bit (c-1), MSB-first within each word.
struct BitmapRow {
  std::uint32_t num = 0;
  std::uint32_t activebits = 0;
  std::vector<std::uint64_t> words;

  static BitmapRow full(std::uint32_t num, std::uint32_t t);

  bool test(std::uint32_t col) const;
  void clear(std::uint32_t col);
  /// Column of the (n+1)-th set bit. Precondition: n < activebits.
  std::uint32_t select(std::uint32_t n) const;
  std::uint32_t popcount() const;
};

struct RowColumn {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  friend auto operator<=>(const RowColumn&, const RowColumn&) = default;
};

/// What one call to extend_matrix did.
struct ExtendOutcome {
  bool ok = true;         ///< false: fewer than `window` bits remain and no rows are left to issue
  bool extended = false;  ///< the window was short and rows were rotated
  std::uint32_t cleaned = 0;
  std::optional<std::uint32_t> evicted_row;
  std::uint32_t bits_lost = 0;
  std::uint32_t rows_added = 0;
};

/// The signer's two-dimensional key-availability structure. Rows are held in traversal order
/// head to tail; index arithmetic always counts set bits in that order. Single owner, no
/// internal synchronisation.
class Bitmap {
 public:
  virtual ~Bitmap() = default;

  virtual BitmapBackend backend() const = 0;
  virtual std::unique_ptr<Bitmap> clone() const = 0;

  std::uint32_t t() const { return t_; }
  std::uint32_t rt() const { return rt_; }
  std::uint32_t window() const { return t_; }
  std::uint32_t nextrow() const { return nextrow_; }
  std::uint32_t activerows() const { return activerows_; }
  std::uint64_t activebits() const { return activebits_; }
  /// Bits discarded with evicted non-empty rows over the bitmap's lifetime.
  std::uint64_t bits_lost() const { return bits_lost_; }

  /// Row number and 1-based column of the (index+1)-th set bit. Read-only.
  virtual RowColumn get_row_column(std::uint64_t index) const = 0;

  /// Clears the set bit at each position, highest index first. Indices must be distinct and
  /// below activebits(); otherwise InvalidArgument is thrown and nothing changes.
  void unset_indices(const IndexVector& indices);

  /// Removes every row with no set bits; returns how many were removed.
  virtual std::uint32_t cleanup() = 0;

  bool extend_matrix(std::uint32_t r) { return extend_matrix_detailed(r).ok; }
  ExtendOutcome extend_matrix_detailed(std::uint32_t r);

  virtual void for_each_row(const std::function<void(const BitmapRow&)>& fn) const = 0;
  std::vector<RowColumn> enumerate() const;
  std::vector<std::uint32_t> row_numbers() const;

  /// Drops all rows and reloads up to rt fresh rows starting at `fresh_rownum`.
  void reset(std::uint32_t fresh_rownum, std::uint32_t r);

  /// Replaces the contents with `rows` (traversal order). Used by deserialisation.
  void restore(std::vector<BitmapRow> rows, std::uint32_t nextrow);

  /// Throws StateError if any structural invariant is violated.
  void check_invariants() const;

 protected:
  Bitmap(std::uint32_t t, std::uint32_t rt) : t_(t), rt_(rt) {}
  Bitmap(const Bitmap&) = default;
  Bitmap& operator=(const Bitmap&) = default;

  virtual void unset_one(std::uint64_t index) = 0;
  /// Removes the row with the fewest set bits (lowest row number on ties); returns its
  /// number and the set bits it still held.
  virtual std::pair<std::uint32_t, std::uint32_t> evict_min_row() = 0;
  virtual void append_row(BitmapRow row) = 0;
  virtual void clear_rows() = 0;

  void fill_fresh(std::uint32_t r);

  std::uint32_t t_;
  std::uint32_t rt_;
  std::uint32_t nextrow_ = 1;
  std::uint32_t activerows_ = 0;
  std::uint64_t activebits_ = 0;
  std::uint64_t bits_lost_ = 0;
};

/// Fixed ring of rt row slots with head/tail indices and middle-row deletion.
class QueueBitmap final : public Bitmap {
 public:
  explicit QueueBitmap(const SchemeParams& p);
  /// Places `rows` in consecutive slots starting at `head_slot` (wrapping modulo rt).
  QueueBitmap(std::uint32_t t, std::uint32_t rt, std::uint32_t head_slot, std::vector<BitmapRow> rows,
              std::uint32_t nextrow);

  BitmapBackend backend() const override { return BitmapBackend::queue; }
  std::unique_ptr<Bitmap> clone() const override { return std::make_unique<QueueBitmap>(*this); }

  RowColumn get_row_column(std::uint64_t index) const override;
  std::uint32_t cleanup() override;
  void for_each_row(const std::function<void(const BitmapRow&)>& fn) const override;

  /// Removes the row held in physical slot `slot`, shifting rows from the nearer end
  /// (head on ties). Throws InvalidArgument if the slot holds no row.
  void remove_row(std::uint32_t slot);

  std::uint32_t head() const { return head_; }
  std::uint32_t tail() const { return tail_; }
  bool holds(std::uint32_t slot) const;
  const BitmapRow& slot(std::uint32_t s) const { return slots_.at(s); }

  QueueBitmap(const QueueBitmap&) = default;

 protected:
  void unset_one(std::uint64_t index) override;
  std::pair<std::uint32_t, std::uint32_t> evict_min_row() override;
  void append_row(BitmapRow row) override;
  void clear_rows() override;

 private:
  std::uint32_t next(std::uint32_t s) const { return (s + 1) % rt_; }
  std::uint32_t prev(std::uint32_t s) const { return (s + rt_ - 1) % rt_; }
  /// Physical slot and remaining in-row offset for a window index.
  std::pair<std::uint32_t, std::uint32_t> locate(std::uint64_t index) const;

  std::vector<BitmapRow> slots_;
  std::uint32_t head_ = 0;
  std::uint32_t tail_ = 0;
};

/// Singly linked rows with head/tail links; traversal is forward only.
class ListBitmap final : public Bitmap {
 public:
  explicit ListBitmap(const SchemeParams& p);
  /// Empty list with no rows; fill with restore().
  ListBitmap(std::uint32_t t, std::uint32_t rt);
  ListBitmap(const ListBitmap& other);
  ListBitmap& operator=(const ListBitmap&) = delete;
  ~ListBitmap() override;

  BitmapBackend backend() const override { return BitmapBackend::list; }
  std::unique_ptr<Bitmap> clone() const override { return std::make_unique<ListBitmap>(*this); }

  RowColumn get_row_column(std::uint64_t index) const override;
  std::uint32_t cleanup() override;
  void for_each_row(const std::function<void(const BitmapRow&)>& fn) const override;

 protected:
  void unset_one(std::uint64_t index) override;
  std::pair<std::uint32_t, std::uint32_t> evict_min_row() override;
  void append_row(BitmapRow row) override;
  void clear_rows() override;

 private:
  struct Node {
    BitmapRow row;
    std::unique_ptr<Node> next;
  };
  /// Unlinks the node after `pred` (or the head when pred is null).
  void unlink_after(Node* pred);

  std::unique_ptr<Node> head_;
  Node* tail_ = nullptr;
};

std::unique_ptr<Bitmap> make_bitmap(const SchemeParams& p, BitmapBackend backend);
/// A bitmap holding no rows, for restore().
std::unique_ptr<Bitmap> make_empty_bitmap(std::uint32_t t, std::uint32_t rt, BitmapBackend backend);

/// Brute-force reference: a flat list of live (row, col) pairs plus the held row numbers.
class FlatOracle {
 public:
  explicit FlatOracle(const SchemeParams& p);

  RowColumn get_row_column(std::uint64_t index) const;
  void unset_indices(const IndexVector& indices);
  std::uint32_t cleanup();
  bool extend_matrix(std::uint32_t r);

  std::uint64_t activebits() const { return live_.size(); }
  std::uint32_t activerows() const { return static_cast<std::uint32_t>(rows_.size()); }
  std::uint32_t nextrow() const { return nextrow_; }
  const std::vector<RowColumn>& live() const { return live_; }
  std::vector<RowColumn>& mutable_live() { return live_; }
  const std::vector<std::uint32_t>& rows() const { return rows_; }

 private:
  std::uint32_t count_in_row(std::uint32_t row) const;
  void drop_row(std::uint32_t row);

  std::uint32_t t_;
  std::uint32_t rt_;
  std::uint32_t nextrow_;
  std::vector<std::uint32_t> rows_;
  std::vector<RowColumn> live_;
};

bool oracle_equivalent(const Bitmap& bm, const FlatOracle& oracle);

/// "MBM1" encoding: header then one record per held row in traversal order.
Bytes serialize_bitmap(const Bitmap& bm);
void serialize_bitmap(const Bitmap& bm, Bytes& out);
std::unique_ptr<Bitmap> deserialize_bitmap(ByteReader& in, BitmapBackend backend);

}  // namespace mumhors
