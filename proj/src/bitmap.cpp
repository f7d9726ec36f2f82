#include "mumhors/bitmap.hpp"

#include <algorithm>
#include <bit>
#include <string>

namespace mumhors {

std::string_view to_string(BitmapBackend b) { return b == BitmapBackend::queue ? "queue" : "list"; }

BitmapBackend parse_backend(std::string_view name) {
  if (name == "queue") return BitmapBackend::queue;
  if (name == "list") return BitmapBackend::list;
  throw InvalidParameter("unknown bitmap backend '" + std::string(name) + "'");
}

BitmapRow BitmapRow::full(std::uint32_t num, std::uint32_t t) {
  BitmapRow row;
  row.num = num;
  row.activebits = t;
  row.words.assign((t + 63) / 64, ~std::uint64_t{0});
  if (t % 64 != 0) row.words.back() = ~std::uint64_t{0} << (64 - t % 64);
  return row;
}

bool BitmapRow::test(std::uint32_t col) const {
  const std::uint32_t bit = col - 1;
  return (words[bit / 64] >> (63 - bit % 64)) & 1u;
}

void BitmapRow::clear(std::uint32_t col) {
  const std::uint32_t bit = col - 1;
  words[bit / 64] &= ~(std::uint64_t{1} << (63 - bit % 64));
}

std::uint32_t BitmapRow::select(std::uint32_t n) const {
  for (std::size_t w = 0; w < words.size(); ++w) {
    std::uint64_t word = words[w];
    const auto pc = static_cast<std::uint32_t>(std::popcount(word));
    if (n >= pc) {
      n -= pc;
      continue;
    }
    for (; n > 0; --n) word &= ~(std::uint64_t{1} << (63 - std::countl_zero(word)));
    return static_cast<std::uint32_t>(w * 64 + std::countl_zero(word) + 1);
  }
  throw OutOfRange("row " + std::to_string(num) + " has fewer set bits than requested");
}

std::uint32_t BitmapRow::popcount() const {
  std::uint32_t total = 0;
  for (auto w : words) total += static_cast<std::uint32_t>(std::popcount(w));
  return total;
}

void Bitmap::unset_indices(const IndexVector& indices) {
  IndexVector order(indices);
  std::sort(order.begin(), order.end(), std::greater<>());
  if (std::adjacent_find(order.begin(), order.end()) != order.end())
    throw InvalidArgument("duplicate index in unset_indices");
  if (!order.empty() && order.front() >= activebits_)
    throw InvalidArgument("index " + std::to_string(order.front()) + " out of range (activebits " +
                          std::to_string(activebits_) + ")");
  for (auto idx : order) unset_one(idx);
}

ExtendOutcome Bitmap::extend_matrix_detailed(std::uint32_t r) {
  ExtendOutcome out;
  if (activebits_ >= window()) return out;
  if (nextrow_ > r) {
    out.ok = false;
    return out;
  }
  out.extended = true;
  out.cleaned = cleanup();
  if (out.cleaned == 0 && activerows_ > 0) {
    auto [num, bits] = evict_min_row();
    out.evicted_row = num;
    out.bits_lost = bits;
    bits_lost_ += bits;
  }
  const std::uint32_t before = activerows_;
  fill_fresh(r);
  out.rows_added = activerows_ - before;
  return out;
}

void Bitmap::fill_fresh(std::uint32_t r) {
  if (nextrow_ > r) return;
  const std::uint32_t fill = std::min(rt_ - activerows_, r - nextrow_ + 1);
  for (std::uint32_t i = 0; i < fill; ++i) append_row(BitmapRow::full(nextrow_++, t_));
}

std::vector<RowColumn> Bitmap::enumerate() const {
  std::vector<RowColumn> out;
  out.reserve(activebits_);
  for_each_row([&](const BitmapRow& row) {
    for (std::uint32_t c = 1; c <= t_; ++c)
      if (row.test(c)) out.push_back({row.num, c});
  });
  return out;
}

std::vector<std::uint32_t> Bitmap::row_numbers() const {
  std::vector<std::uint32_t> out;
  for_each_row([&](const BitmapRow& row) { out.push_back(row.num); });
  return out;
}

void Bitmap::reset(std::uint32_t fresh_rownum, std::uint32_t r) {
  if (fresh_rownum < nextrow_)
    throw InvalidArgument("reset row " + std::to_string(fresh_rownum) + " would reissue rows below " +
                          std::to_string(nextrow_));
  if (fresh_rownum > r) throw InvalidArgument("reset row exceeds the total row count");
  clear_rows();
  nextrow_ = fresh_rownum;
  fill_fresh(r);
}

void Bitmap::restore(std::vector<BitmapRow> rows, std::uint32_t nextrow) {
  if (rows.size() > rt_) throw ParseError("more rows than the row threshold");
  clear_rows();
  std::uint32_t last = 0;
  for (auto& row : rows) {
    if (row.words.size() != (t_ + 63) / 64) throw ParseError("row width mismatch");
    if (row.popcount() != row.activebits) throw ParseError("row activebits does not match its bits");
    if (row.num <= last) throw ParseError("row numbers not strictly increasing");
    last = row.num;
    append_row(std::move(row));
  }
  if (nextrow <= last) throw ParseError("nextrow not beyond held rows");
  nextrow_ = nextrow;
}

void Bitmap::check_invariants() const {
  std::uint64_t bits = 0;
  std::uint32_t rows = 0;
  std::uint32_t last = 0;
  for_each_row([&](const BitmapRow& row) {
    if (row.popcount() != row.activebits) throw StateError("row activebits != popcount");
    if (row.num <= last) throw StateError("row numbers not strictly increasing");
    last = row.num;
    bits += row.activebits;
    ++rows;
  });
  if (bits != activebits_) throw StateError("activebits != sum of row activebits");
  if (rows != activerows_) throw StateError("activerows != held rows");
  if (rows > rt_) throw StateError("more rows than rt");
  if (nextrow_ <= last) throw StateError("nextrow not beyond held rows");
}

std::unique_ptr<Bitmap> make_bitmap(const SchemeParams& p, BitmapBackend backend) {
  p.validate();
  if (backend == BitmapBackend::queue) return std::make_unique<QueueBitmap>(p);
  return std::make_unique<ListBitmap>(p);
}

std::unique_ptr<Bitmap> make_empty_bitmap(std::uint32_t t, std::uint32_t rt, BitmapBackend backend) {
  if (!is_power_of_two(t) || t > 32768 || rt == 0) throw ParseError("invalid bitmap geometry");
  if (backend == BitmapBackend::queue) return std::make_unique<QueueBitmap>(t, rt, 0, std::vector<BitmapRow>{}, 1);
  return std::make_unique<ListBitmap>(t, rt);
}

bool oracle_equivalent(const Bitmap& bm, const FlatOracle& oracle) { return bm.enumerate() == oracle.live(); }

void serialize_bitmap(const Bitmap& bm, Bytes& out) {
  put_bytes(out, as_bytes("MBM1"));
  put_u16(out, static_cast<std::uint16_t>(bm.t()));
  put_u16(out, static_cast<std::uint16_t>(bm.rt()));
  put_u32(out, bm.nextrow());
  put_u16(out, static_cast<std::uint16_t>(bm.activerows()));
  const std::size_t row_bytes = (bm.t() + 7) / 8;
  bm.for_each_row([&](const BitmapRow& row) {
    put_u32(out, row.num);
    put_u16(out, static_cast<std::uint16_t>(row.activebits));
    for (std::size_t i = 0; i < row_bytes; ++i)
      out.push_back(static_cast<std::uint8_t>(row.words[i / 8] >> (56 - 8 * (i % 8))));
  });
}

Bytes serialize_bitmap(const Bitmap& bm) {
  Bytes out;
  serialize_bitmap(bm, out);
  return out;
}

std::unique_ptr<Bitmap> deserialize_bitmap(ByteReader& in, BitmapBackend backend) {
  in.expect_magic("MBM1");
  const std::uint32_t t = in.u16();
  const std::uint32_t rt = in.u16();
  const std::uint32_t nextrow = in.u32();
  const std::uint32_t activerows = in.u16();
  if (t == 0 || !is_power_of_two(t)) throw ParseError("bitmap t is not a power of two");
  if (rt == 0 || activerows > rt) throw ParseError("bitmap row counts inconsistent");
  auto bm = make_empty_bitmap(t, rt, backend);
  const std::size_t row_bytes = (t + 7) / 8;
  std::vector<BitmapRow> rows(activerows);
  for (auto& row : rows) {
    row.num = in.u32();
    row.activebits = in.u16();
    row.words.assign((t + 63) / 64, 0);
    auto raw = in.take(row_bytes);
    for (std::size_t i = 0; i < row_bytes; ++i)
      row.words[i / 8] |= std::uint64_t{raw[i]} << (56 - 8 * (i % 8));
    if (t % 8 != 0 && (raw.back() & (0xFFu >> (t % 8))) != 0) throw ParseError("padding bits set in row");
  }
  bm->restore(std::move(rows), nextrow);
  return bm;
}

}  // namespace mumhors
