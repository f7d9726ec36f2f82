#include <string>

#include "mumhors/bitmap.hpp"

namespace mumhors {

QueueBitmap::QueueBitmap(const SchemeParams& p) : Bitmap(p.t, p.rt), slots_(p.rt) {
  p.validate();
  for (std::uint32_t i = 0; i < rt_; ++i) slots_[i] = BitmapRow::full(i + 1, t_);
  head_ = 0;
  tail_ = rt_ - 1;
  activerows_ = rt_;
  activebits_ = std::uint64_t{rt_} * t_;
  nextrow_ = rt_ + 1;
}

QueueBitmap::QueueBitmap(std::uint32_t t, std::uint32_t rt, std::uint32_t head_slot, std::vector<BitmapRow> rows,
                         std::uint32_t nextrow)
    : Bitmap(t, rt), slots_(rt) {
  if (rt == 0) throw InvalidParameter("rt must be at least 1");
  if (head_slot >= rt) throw InvalidArgument("head slot outside the ring");
  if (rows.size() > rt) throw InvalidArgument("more rows than slots");
  head_ = head_slot;
  tail_ = prev(head_slot);
  for (auto& row : rows) append_row(std::move(row));
  nextrow_ = nextrow;
}

bool QueueBitmap::holds(std::uint32_t slot) const {
  return slot < rt_ && (slot + rt_ - head_) % rt_ < activerows_;
}

void QueueBitmap::for_each_row(const std::function<void(const BitmapRow&)>& fn) const {
  for (std::uint32_t i = 0, s = head_; i < activerows_; ++i, s = next(s)) fn(slots_[s]);
}

std::pair<std::uint32_t, std::uint32_t> QueueBitmap::locate(std::uint64_t index) const {
  if (index >= activebits_)
    throw OutOfRange("index " + std::to_string(index) + " beyond " + std::to_string(activebits_) + " set bits");
  for (std::uint32_t i = 0, s = head_; i < activerows_; ++i, s = next(s)) {
    if (index < slots_[s].activebits) return {s, static_cast<std::uint32_t>(index)};
    index -= slots_[s].activebits;
  }
  throw StateError("activebits exceeds the bits held in rows");
}

RowColumn QueueBitmap::get_row_column(std::uint64_t index) const {
  auto [s, offset] = locate(index);
  return {slots_[s].num, slots_[s].select(offset)};
}

void QueueBitmap::unset_one(std::uint64_t index) {
  auto [s, offset] = locate(index);
  BitmapRow& row = slots_[s];
  row.clear(row.select(offset));
  --row.activebits;
  --activebits_;
}

void QueueBitmap::remove_row(std::uint32_t slot) {
  if (!holds(slot)) throw InvalidArgument("slot " + std::to_string(slot) + " holds no row");
  activebits_ -= slots_[slot].activebits;
  if (slot == head_) {
    head_ = next(head_);
  } else if (slot == tail_) {
    tail_ = prev(tail_);
  } else {
    const std::uint32_t from_head = (slot + rt_ - head_) % rt_;
    const std::uint32_t from_tail = (tail_ + rt_ - slot) % rt_;
    if (from_head <= from_tail) {
      for (std::uint32_t p = slot; p != head_; p = prev(p)) slots_[p] = std::move(slots_[prev(p)]);
      head_ = next(head_);
    } else {
      for (std::uint32_t p = slot; p != tail_; p = next(p)) slots_[p] = std::move(slots_[next(p)]);
      tail_ = prev(tail_);
    }
  }
  --activerows_;
}

std::uint32_t QueueBitmap::cleanup() {
  std::uint32_t cleaned = 0;
  // remove_row shifts neighbours into the freed slot, so rescan from the head after each removal.
  for (bool removed = true; removed;) {
    removed = false;
    for (std::uint32_t i = 0, s = head_; i < activerows_; ++i, s = next(s)) {
      if (slots_[s].activebits == 0) {
        remove_row(s);
        ++cleaned;
        removed = true;
        break;
      }
    }
  }
  return cleaned;
}

std::pair<std::uint32_t, std::uint32_t> QueueBitmap::evict_min_row() {
  std::uint32_t best = head_;
  for (std::uint32_t i = 0, s = head_; i < activerows_; ++i, s = next(s))
    if (slots_[s].activebits < slots_[best].activebits) best = s;
  const auto victim = std::make_pair(slots_[best].num, slots_[best].activebits);
  remove_row(best);
  return victim;
}

void QueueBitmap::append_row(BitmapRow row) {
  if (activerows_ == rt_) throw StateError("ring is full");
  tail_ = next(tail_);
  if (activerows_ == 0) head_ = tail_;
  activebits_ += row.activebits;
  slots_[tail_] = std::move(row);
  ++activerows_;
}

void QueueBitmap::clear_rows() {
  head_ = next(tail_);
  activerows_ = 0;
  activebits_ = 0;
}

}  // namespace mumhors
