#include <algorithm>
#include <string>

#include "mumhors/bitmap.hpp"

namespace mumhors {

FlatOracle::FlatOracle(const SchemeParams& p) : t_(p.t), rt_(p.rt), nextrow_(p.rt + 1) {
  p.validate();
  for (std::uint32_t row = 1; row <= rt_; ++row) {
    rows_.push_back(row);
    for (std::uint32_t col = 1; col <= t_; ++col) live_.push_back({row, col});
  }
}

RowColumn FlatOracle::get_row_column(std::uint64_t index) const {
  if (index >= live_.size()) throw OutOfRange("oracle index out of range");
  return live_[index];
}

void FlatOracle::unset_indices(const IndexVector& indices) {
  IndexVector order(indices);
  std::sort(order.rbegin(), order.rend());
  if (std::adjacent_find(order.begin(), order.end()) != order.end())
    throw InvalidArgument("duplicate index in unset_indices");
  if (!order.empty() && order.front() >= live_.size()) throw InvalidArgument("index out of range");
  for (auto idx : order) live_.erase(live_.begin() + idx);
}

std::uint32_t FlatOracle::count_in_row(std::uint32_t row) const {
  return static_cast<std::uint32_t>(
      std::count_if(live_.begin(), live_.end(), [&](const RowColumn& rc) { return rc.row == row; }));
}

void FlatOracle::drop_row(std::uint32_t row) {
  rows_.erase(std::find(rows_.begin(), rows_.end(), row));
  std::erase_if(live_, [&](const RowColumn& rc) { return rc.row == row; });
}

std::uint32_t FlatOracle::cleanup() {
  std::vector<std::uint32_t> empty;
  for (auto row : rows_)
    if (count_in_row(row) == 0) empty.push_back(row);
  for (auto row : empty) drop_row(row);
  return static_cast<std::uint32_t>(empty.size());
}

bool FlatOracle::extend_matrix(std::uint32_t r) {
  if (live_.size() >= t_) return true;
  if (nextrow_ > r) return false;
  if (cleanup() == 0 && !rows_.empty()) {
    std::uint32_t victim = rows_.front();
    std::uint32_t fewest = count_in_row(victim);
    for (auto row : rows_) {
      const std::uint32_t c = count_in_row(row);
      if (c < fewest) {
        fewest = c;
        victim = row;
      }
    }
    drop_row(victim);
  }
  while (rows_.size() < rt_ && nextrow_ <= r) {
    rows_.push_back(nextrow_);
    for (std::uint32_t col = 1; col <= t_; ++col) live_.push_back({nextrow_, col});
    ++nextrow_;
  }
  return true;
}

}  // namespace mumhors
