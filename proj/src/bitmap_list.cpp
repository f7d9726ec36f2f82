#include <string>

#include "mumhors/bitmap.hpp"

namespace mumhors {

ListBitmap::ListBitmap(const SchemeParams& p) : Bitmap(p.t, p.rt) {
  p.validate();
  for (std::uint32_t i = 1; i <= rt_; ++i) append_row(BitmapRow::full(i, t_));
  nextrow_ = rt_ + 1;
}

ListBitmap::ListBitmap(std::uint32_t t, std::uint32_t rt) : Bitmap(t, rt) {}

ListBitmap::ListBitmap(const ListBitmap& other) : Bitmap(other) {
  activerows_ = 0;
  activebits_ = 0;
  for (const Node* n = other.head_.get(); n; n = n->next.get()) append_row(n->row);
}

ListBitmap::~ListBitmap() {
  // Iterative teardown; the default would recurse once per node.
  while (head_) head_ = std::move(head_->next);
}

void ListBitmap::for_each_row(const std::function<void(const BitmapRow&)>& fn) const {
  for (const Node* n = head_.get(); n; n = n->next.get()) fn(n->row);
}

RowColumn ListBitmap::get_row_column(std::uint64_t index) const {
  if (index >= activebits_)
    throw OutOfRange("index " + std::to_string(index) + " beyond " + std::to_string(activebits_) + " set bits");
  const Node* n = head_.get();
  while (n && index >= n->row.activebits) {
    index -= n->row.activebits;
    n = n->next.get();
  }
  if (!n) throw StateError("activebits exceeds the bits held in rows");
  return {n->row.num, n->row.select(static_cast<std::uint32_t>(index))};
}

void ListBitmap::unset_one(std::uint64_t index) {
  Node* n = head_.get();
  while (n && index >= n->row.activebits) {
    index -= n->row.activebits;
    n = n->next.get();
  }
  if (!n) throw StateError("activebits exceeds the bits held in rows");
  n->row.clear(n->row.select(static_cast<std::uint32_t>(index)));
  --n->row.activebits;
  --activebits_;
}

void ListBitmap::unlink_after(Node* pred) {
  std::unique_ptr<Node>& link = pred ? pred->next : head_;
  std::unique_ptr<Node> victim = std::move(link);
  link = std::move(victim->next);
  if (tail_ == victim.get()) tail_ = pred;
  activebits_ -= victim->row.activebits;
  --activerows_;
}

std::uint32_t ListBitmap::cleanup() {
  std::uint32_t cleaned = 0;
  Node* pred = nullptr;
  Node* n = head_.get();
  while (n) {
    if (n->row.activebits == 0) {
      unlink_after(pred);
      ++cleaned;
      n = pred ? pred->next.get() : head_.get();
    } else {
      pred = n;
      n = n->next.get();
    }
  }
  return cleaned;
}

std::pair<std::uint32_t, std::uint32_t> ListBitmap::evict_min_row() {
  Node* best_pred = nullptr;
  Node* best = head_.get();
  Node* pred = head_.get();
  for (Node* n = head_ ? head_->next.get() : nullptr; n; pred = n, n = n->next.get()) {
    if (n->row.activebits < best->row.activebits) {
      best = n;
      best_pred = pred;
    }
  }
  const auto victim = std::make_pair(best->row.num, best->row.activebits);
  unlink_after(best_pred);
  return victim;
}

void ListBitmap::append_row(BitmapRow row) {
  if (activerows_ == rt_) throw StateError("list already holds rt rows");
  auto node = std::make_unique<Node>();
  node->row = std::move(row);
  activebits_ += node->row.activebits;
  Node* raw = node.get();
  if (tail_)
    tail_->next = std::move(node);
  else
    head_ = std::move(node);
  tail_ = raw;
  ++activerows_;
}

void ListBitmap::clear_rows() {
  while (head_) head_ = std::move(head_->next);
  tail_ = nullptr;
  activerows_ = 0;
  activebits_ = 0;
}

}  // namespace mumhors
