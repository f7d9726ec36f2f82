#include "mumhors/verifier.hpp"

#include <algorithm>
#include <string>

namespace mumhors {

std::vector<Digest256> DerivedKeySource::row(std::uint32_t num) const {
  if (num == 0 || num > r_) throw OutOfRange("row " + std::to_string(num) + " outside the key set");
  std::vector<Digest256> keys;
  keys.reserve(t_);
  for (std::uint32_t col = 1; col <= t_; ++col) keys.push_back(one_way(prf(msk_, num, col)));
  return keys;
}

PublicKeyStore::PublicKeyStore(const SchemeParams& params, const Pads& pads, std::shared_ptr<const KeySource> source)
    : params_(params), pads_(pads), source_(std::move(source)) {
  params_.validate();
  if (!source_) throw InvalidArgument("public key store requires a key source");
  if (source_->t() != params_.t || source_->total_rows() != params_.r)
    throw InvalidParameter("key source geometry does not match the scheme parameters");
  fill_fresh();
}

KeyRow PublicKeyStore::load_row(std::uint32_t num) const {
  KeyRow row;
  row.num = num;
  auto keys = source_->row(num);
  if (keys.size() != params_.t) throw ParseError("key source returned a short row");
  row.slots.reserve(keys.size());
  for (auto& k : keys) row.slots.push_back({k, SlotState::live});
  row.activepks = params_.t;
  return row;
}

void PublicKeyStore::fill_fresh() {
  if (nextrow_ > params_.r) return;
  const std::uint32_t fill = std::min<std::uint32_t>(params_.rt - activerows(), params_.r - nextrow_ + 1);
  for (std::uint32_t i = 0; i < fill; ++i) {
    rows_.push_back(load_row(nextrow_++));
    activepks_ += params_.t;
  }
}

std::uint64_t PublicKeyStore::doubt_count() const {
  std::uint64_t n = 0;
  for (const auto& row : rows_)
    n += std::count_if(row.slots.begin(), row.slots.end(), [](const KeySlot& s) { return s.state == SlotState::doubt; });
  return n;
}

SlotLocation PublicKeyStore::resolve(std::uint64_t index) const {
  if (index >= activepks_)
    throw OutOfRange("index " + std::to_string(index) + " beyond " + std::to_string(activepks_) + " public keys");
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const KeyRow& row = rows_[r];
    if (index >= row.activepks) {
      index -= row.activepks;
      continue;
    }
    for (std::uint32_t c = 0; c < row.slots.size(); ++c) {
      if (row.slots[c].state == SlotState::deleted) continue;
      if (index-- == 0) return {r, c + 1};
    }
  }
  throw StateError("activepks exceeds the keys held in rows");
}

void PublicKeyStore::set_state(const SlotLocation& at, SlotState state) {
  KeyRow& row = rows_.at(at.row);
  KeySlot& slot = row.slots.at(at.col - 1);
  const bool was_active = slot.state != SlotState::deleted;
  const bool now_active = state != SlotState::deleted;
  slot.state = state;
  if (was_active && !now_active) {
    --row.activepks;
    --activepks_;
  } else if (!was_active && now_active) {
    ++row.activepks;
    ++activepks_;
  }
}

std::vector<SlotLocation> PublicKeyStore::positions() const {
  std::vector<SlotLocation> out;
  out.reserve(activepks_);
  for (std::size_t r = 0; r < rows_.size(); ++r)
    for (std::uint32_t c = 0; c < rows_[r].slots.size(); ++c)
      if (rows_[r].slots[c].state != SlotState::deleted) out.push_back({r, c + 1});
  return out;
}

void PublicKeyStore::invalidate(const IndexVector& indices) {
  IndexVector order(indices);
  std::sort(order.rbegin(), order.rend());
  if (std::adjacent_find(order.begin(), order.end()) != order.end())
    throw InvalidArgument("duplicate index in invalidate");
  if (!order.empty() && order.front() >= activepks_) throw InvalidArgument("index out of range in invalidate");
  for (auto idx : order) set_state(resolve(idx), SlotState::deleted);
}

ExtendOutcome PublicKeyStore::extend_view() {
  ExtendOutcome out;
  if (activepks_ >= window()) return out;
  if (nextrow_ > params_.r) {
    out.ok = false;
    return out;
  }
  out.extended = true;
  const auto before = rows_.size();
  std::erase_if(rows_, [](const KeyRow& row) { return row.activepks == 0; });
  out.cleaned = static_cast<std::uint32_t>(before - rows_.size());
  if (out.cleaned == 0 && !rows_.empty()) {
    auto victim = rows_.begin();
    for (auto it = rows_.begin(); it != rows_.end(); ++it)
      if (it->activepks < victim->activepks) victim = it;
    out.evicted_row = victim->num;
    out.bits_lost = victim->activepks;
    activepks_ -= victim->activepks;
    rows_.erase(victim);
  }
  const auto held = rows_.size();
  fill_fresh();
  out.rows_added = static_cast<std::uint32_t>(rows_.size() - held);
  return out;
}

void PublicKeyStore::reset(std::uint32_t fresh_rownum) {
  if (fresh_rownum < nextrow_) throw InvalidArgument("reset would reissue public key rows");
  if (fresh_rownum > params_.r) throw InvalidArgument("reset row exceeds the total row count");
  rows_.clear();
  activepks_ = 0;
  nextrow_ = fresh_rownum;
  fill_fresh();
}

bool PublicKeyStore::mirrors(const Bitmap& bm) const {
  if (bm.row_numbers().size() != rows_.size() || bm.nextrow() != nextrow_) return false;
  bool same = true;
  std::size_t r = 0;
  bm.for_each_row([&](const BitmapRow& brow) {
    const KeyRow& krow = rows_[r++];
    if (krow.num != brow.num) {
      same = false;
      return;
    }
    for (std::uint32_t c = 1; c <= params_.t; ++c) {
      const SlotState s = krow.slots[c - 1].state;
      if (s == SlotState::doubt || (s == SlotState::live) != brow.test(c)) {
        same = false;
        return;
      }
    }
  });
  return same;
}

void PublicKeyStore::restore(const std::vector<RowState>& rows, std::uint32_t nextrow) {
  if (rows.size() > params_.rt) throw ParseError("verifier state holds more than rt rows");
  std::deque<KeyRow> loaded;
  std::uint64_t active = 0;
  std::uint32_t last = 0;
  for (const auto& rs : rows) {
    if (rs.num <= last || rs.num > params_.r) throw ParseError("verifier state row numbers invalid");
    if (rs.states.size() != params_.t) throw ParseError("verifier state row width mismatch");
    last = rs.num;
    KeyRow row = load_row(rs.num);
    row.activepks = 0;
    for (std::uint32_t c = 0; c < params_.t; ++c) {
      row.slots[c].state = rs.states[c];
      if (rs.states[c] != SlotState::deleted) ++row.activepks;
    }
    active += row.activepks;
    loaded.push_back(std::move(row));
  }
  if (nextrow <= last || nextrow > params_.r + 1) throw ParseError("verifier state nextrow invalid");
  rows_ = std::move(loaded);
  activepks_ = active;
  nextrow_ = nextrow;
}

namespace {

std::vector<Digest256> claimed_keys(const Signature& sig) {
  std::vector<Digest256> out;
  out.reserve(sig.elems.size());
  for (const auto& e : sig.elems) out.push_back(one_way(e));
  return out;
}

std::optional<IndexDerivation> try_derive(ByteView m, const PublicKeyStore& store, std::string& diag) {
  try {
    return derive_indices(m, store.pads(), store.params());
  } catch (const DerivationFailure& e) {
    diag = e.what();
    return std::nullopt;
  }
}

}  // namespace

VerifyOutcome mum_ver(const PublicKeyStore& store, ByteView m, const Signature& sig) {
  VerifyOutcome out;
  const auto& p = store.params();
  if (sig.elems.size() != p.k) {
    out.diagnostic = "malformed signature: " + std::to_string(sig.elems.size()) + " elements, expected " +
                     std::to_string(p.k);
    return out;
  }
  out.derivation = try_derive(m, store, out.diagnostic);
  if (!out.derivation) return out;
  if (sig.ctr != out.derivation->ctr) {
    out.diagnostic = "counter mismatch: signature carries " + std::to_string(sig.ctr) + ", message requires " +
                     std::to_string(out.derivation->ctr);
    return out;
  }
  if (store.activepks() < store.window()) {
    out.diagnostic = "public key window exhausted";
    return out;
  }
  const auto keys = claimed_keys(sig);
  out.matches.resize(p.k);
  bool all = true;
  for (std::size_t j = 0; j < p.k; ++j) {
    out.matches[j] = store.slot(store.resolve(out.derivation->indices[j])).key == keys[j];
    all = all && out.matches[j];
  }
  out.accepted = all;
  if (!all) out.diagnostic = "public key mismatch";
  return out;
}

bool post_verify(PublicKeyStore& store, const IndexVector& indices) {
  store.invalidate(indices);
  return store.extend_view().ok;
}

VerifyOutcome sca_verify(PublicKeyStore& store, ByteView m, const Signature& sig) {
  VerifyOutcome out;
  const auto& p = store.params();
  if (sig.elems.size() != p.k) {
    out.diagnostic = "malformed signature";
    return out;
  }
  const auto keys = claimed_keys(sig);
  const auto view = store.positions();
  auto is_doubt = [&](std::size_t pos) { return store.slot(view[pos]).state == SlotState::doubt; };
  // doubt_before[p] = DOUBT slots among view[0..p)
  std::vector<std::uint32_t> doubt_before(view.size() + 1, 0);
  for (std::size_t i = 0; i < view.size(); ++i) doubt_before[i + 1] = doubt_before[i] + (is_doubt(i) ? 1 : 0);

  out.derivation = try_derive(m, store, out.diagnostic);
  bool verified = false;
  std::vector<std::optional<std::size_t>> found(p.k);

  if (out.derivation && out.derivation->ctr == sig.ctr) {
    const auto& idx = out.derivation->indices;
    out.matches.assign(p.k, false);
    verified = true;
    for (std::size_t j = 0; j < p.k; ++j) {
      // The signer's slot sits at most (preceding DOUBT count) positions past the index.
      for (std::size_t pos = idx[j]; pos < view.size() && pos - idx[j] <= doubt_before[pos]; ++pos) {
        if (store.slot(view[pos]).key == keys[j]) {
          found[j] = pos;
          break;
        }
      }
      out.matches[j] = found[j].has_value();
      verified = verified && out.matches[j];
    }
    if (!verified) out.diagnostic = "public key mismatch";
  } else if (out.derivation) {
    out.diagnostic = "counter mismatch";
  }

  if (verified) {
    // Walk verified elements in window order; between consecutive anchors the change in
    // shift counts the DOUBT slots that the signer had already consumed.
    std::vector<std::pair<std::uint32_t, std::size_t>> anchors;
    for (std::size_t j = 0; j < p.k; ++j) anchors.emplace_back(out.derivation->indices[j], *found[j]);
    std::sort(anchors.begin(), anchors.end());
    struct Gap {
      std::size_t from, to;  // exclusive bounds in view positions
      bool all_dead;
    };
    std::vector<Gap> resolved;
    long long prev_pos = -1, prev_shift = 0;
    for (auto [index, pos] : anchors) {
      const long long shift = static_cast<long long>(pos) - index;
      const long long delta = shift - prev_shift;
      const long long doubts = doubt_before[pos] - doubt_before[prev_pos + 1];
      if (static_cast<long long>(pos) <= prev_pos || delta < 0 || delta > doubts) {
        verified = false;
        out.diagnostic = "inconsistent key positions";
        break;
      }
      if (doubts > 0 && (delta == 0 || delta == doubts))
        resolved.push_back({static_cast<std::size_t>(prev_pos + 1), pos, delta == doubts});
      if (shift > 0) out.second_chance = true;
      prev_pos = static_cast<long long>(pos);
      prev_shift = shift;
    }
    if (verified) {
      for (const auto& g : resolved)
        for (std::size_t q = g.from; q < g.to; ++q)
          if (is_doubt(q)) store.set_state(view[q], g.all_dead ? SlotState::deleted : SlotState::live);
      for (const auto& f : found) store.set_state(view[*f], SlotState::deleted);
      out.accepted = true;
      out.diagnostic.clear();
      return out;
    }
  }

  // Rejected. Any element whose key is still held was genuinely revealed by the signer, so
  // its slot is consumed; the slots of elements that match nothing get a second chance.
  std::vector<SlotLocation> consumed;
  std::vector<SlotLocation> doubtful;
  for (std::size_t j = 0; j < p.k; ++j) {
    auto hit = std::find_if(view.begin(), view.end(),
                            [&](const SlotLocation& at) { return store.slot(at).key == keys[j]; });
    if (hit != view.end()) {
      consumed.push_back(*hit);
    } else if (out.derivation && out.derivation->indices[j] < view.size()) {
      doubtful.push_back(view[out.derivation->indices[j]]);
    }
  }
  auto same = [](const SlotLocation& a, const SlotLocation& b) { return a.row == b.row && a.col == b.col; };
  for (const auto& at : doubtful) {
    const bool taken = std::any_of(consumed.begin(), consumed.end(), [&](const SlotLocation& c) { return same(c, at); });
    if (!taken && store.slot(at).state == SlotState::live) store.set_state(at, SlotState::doubt);
  }
  for (const auto& at : consumed) store.set_state(at, SlotState::deleted);
  out.accepted = false;
  return out;
}

void hard_reset(PublicKeyStore& store, SignerState& signer, std::uint32_t fresh_rownum) {
  if (fresh_rownum <= store.nextrow() || fresh_rownum <= signer.bitmap().nextrow())
    throw InvalidArgument("reset row must exceed both sides' next row");
  if (signer.awaiting_update()) throw StateError("signer has a signature awaiting post_sign");
  if (fresh_rownum > signer.params().r) throw InvalidArgument("reset row exceeds the total row count");
  signer.bitmap().reset(fresh_rownum, signer.params().r);
  store.reset(fresh_rownum);
}

KeyPair mum_kg(const SchemeParams& params, const KeyMaterial& keys, BitmapBackend backend) {
  params.validate();
  auto source = std::make_shared<DerivedKeySource>(keys.msk, params.t, params.r);
  return KeyPair{SignerState(params, keys, backend), PublicKeyStore(params, keys.pads, std::move(source))};
}

}  // namespace mumhors
