// Copyright 2026 The T2G2 Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Training-set derivation: single-domain filtering and k-shot sampling with a
// guarantee that every act and slot seen in a domain is kept.

#pragma once

#include <algorithm>
#include <bit>
#include <limits>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "t2g2/dialogue.hpp"
#include "t2g2/schema.hpp"

namespace t2g2 {

/// The raw train partition. Only train data goes through the derivations
/// below; dev and test are used as loaded.
struct TrainPartition {
  std::vector<Dialogue> dialogues;
};

struct SgdNlgTrain {
  std::vector<Dialogue> dialogues;
  std::vector<std::string> warnings;
};

inline SgdNlgTrain derive_sgd_nlg(const TrainPartition& train) {
  SgdNlgTrain out;
  for (const auto& d : train.dialogues) {
    if (d.single_service()) out.dialogues.push_back(d);
  }
  if (out.dialogues.empty() && !train.dialogues.empty()) {
    out.warnings.push_back("every train dialogue spans multiple services; the filtered set is empty");
  }
  return out;
}

inline constexpr int kCanonicalShots[] = {5, 10, 20, 40, 80};

/// Coverage items of a dialogue: "act:<name>" and "slot:<name>" for every
/// system action.
inline std::set<std::string> coverage_items(const Dialogue& d) {
  std::set<std::string> out;
  for (const auto& turn : d.turns) {
    for (const auto& frame : turn.frames) {
      for (const auto& a : frame.actions) {
        out.insert("act:" + a.act);
        if (a.slot) out.insert("slot:" + *a.slot);
      }
    }
  }
  return out;
}

inline std::string domain_of(const Dialogue& d, const SchemaCatalog& catalog) {
  return catalog.at(d.services.front()).domain;
}

struct DomainSelection {
  std::string domain;
  std::size_t available = 0;
  std::vector<std::string> dialogue_ids;  // sorted
  std::set<std::string> covered;
};

struct KShotSplit {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<Dialogue> dialogues;  // in input order
  std::vector<DomainSelection> domains;  // sorted by domain
  std::vector<std::string> warnings;
};

namespace detail {

/// Uniform integer in [0, n) by rejection, so results do not depend on the
/// standard library's distribution implementation.
inline std::size_t uniform_below(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r = 0;
  do {
    r = rng();
  } while (r >= limit);
  return static_cast<std::size_t>(r % bound);
}

template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_below(rng, i)]);
  }
}

class Bits {
 public:
  explicit Bits(std::size_t n = 0) : words_((n + 63) / 64, 0) {}
  void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1U; }
  Bits& operator|=(const Bits& o) {
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] |= o.words_[w];
    return *this;
  }
  std::size_t count_new(const Bits& o) const {
    std::size_t n = 0;
    for (std::size_t w = 0; w < words_.size(); ++w) n += std::popcount(o.words_[w] & ~words_[w]);
    return n;
  }
  friend bool operator==(const Bits&, const Bits&) = default;

 private:
  std::vector<std::uint64_t> words_;
};

/// Exact search for at most `limit` sets covering `universe` items. Branches on
/// the uncovered item contained in the fewest candidate sets.
class CoverSearch {
 public:
  CoverSearch(const std::vector<Bits>& sets, std::size_t universe, std::size_t limit, std::size_t node_budget)
      : sets_(sets), universe_(universe), limit_(limit), budget_(node_budget) {
    Bits full(universe);
    for (std::size_t i = 0; i < universe; ++i) full.set(i);
    full_ = full;
  }

  std::optional<std::vector<std::size_t>> run() {
    std::vector<std::size_t> chosen;
    if (recurse(Bits(universe_), chosen)) return chosen;
    return std::nullopt;
  }

  bool exhausted() const { return nodes_ > budget_; }

 private:
  bool recurse(const Bits& covered, std::vector<std::size_t>& chosen) {
    if (covered == full_) return true;
    if (chosen.size() >= limit_ || ++nodes_ > budget_) return false;
    std::size_t best_item = universe_;
    std::size_t best_count = sets_.size() + 1;
    for (std::size_t item = 0; item < universe_; ++item) {
      if (covered.test(item)) continue;
      std::size_t count = 0;
      for (const auto& s : sets_) count += s.test(item);
      if (count < best_count) {
        best_count = count;
        best_item = item;
      }
    }
    if (best_count == 0) return false;
    for (std::size_t i = 0; i < sets_.size(); ++i) {
      if (!sets_[i].test(best_item)) continue;
      Bits next = covered;
      next |= sets_[i];
      chosen.push_back(i);
      if (recurse(next, chosen)) return true;
      chosen.pop_back();
      if (exhausted()) return false;
    }
    return false;
  }

  const std::vector<Bits>& sets_;
  std::size_t universe_;
  std::size_t limit_;
  std::size_t budget_;
  std::size_t nodes_ = 0;
  Bits full_;
};

}  // namespace detail

/// Picks indices into `item_sets` (each a set of item ids over [0, universe))
/// of size min(k, n) whose union covers the universe. Greedy max-gain first,
/// ties broken by a seeded shuffle; exact search when greedy needs more than k;
/// then uniform random fill. Returns nullopt if no cover of size k exists.
inline std::optional<std::vector<std::size_t>> select_covering_subset(const std::vector<std::set<std::size_t>>& item_sets,
                                                                      std::size_t universe, std::size_t k,
                                                                      std::mt19937_64& rng,
                                                                      std::size_t node_budget = 5'000'000) {
  const std::size_t n = item_sets.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  detail::seeded_shuffle(order, rng);

  std::vector<detail::Bits> bits;
  bits.reserve(n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    detail::Bits b(universe);
    for (auto item : item_sets[order[pos]]) b.set(item);
    bits.push_back(std::move(b));
  }
  detail::Bits full(universe);
  for (std::size_t i = 0; i < universe; ++i) full.set(i);

  std::vector<std::size_t> picked;  // positions in `order`
  std::vector<bool> used(n, false);
  detail::Bits covered(universe);
  while (!(covered == full) && picked.size() < k) {
    std::size_t best = n;
    std::size_t best_gain = 0;
    for (std::size_t pos = 0; pos < n; ++pos) {
      if (used[pos]) continue;
      const auto gain = covered.count_new(bits[pos]);
      if (gain > best_gain) {
        best_gain = gain;
        best = pos;
      }
    }
    if (best == n) break;
    used[best] = true;
    picked.push_back(best);
    covered |= bits[best];
  }

  if (!(covered == full)) {
    detail::CoverSearch search(bits, universe, k, node_budget);
    auto exact = search.run();
    if (!exact) return std::nullopt;
    picked = *exact;
    std::fill(used.begin(), used.end(), false);
    for (auto pos : picked) used[pos] = true;
  }

  std::vector<std::size_t> rest;
  for (std::size_t pos = 0; pos < n; ++pos) {
    if (!used[pos]) rest.push_back(pos);
  }
  detail::seeded_shuffle(rest, rng);
  for (std::size_t i = 0; picked.size() < std::min(k, n) && i < rest.size(); ++i) picked.push_back(rest[i]);

  std::vector<std::size_t> out;
  out.reserve(picked.size());
  for (auto pos : picked) out.push_back(order[pos]);
  std::sort(out.begin(), out.end());
  return out;
}

/// Samples k dialogues per domain so that every act and slot present in the
/// domain's training dialogues is still present. Deterministic in seed.
inline KShotSplit derive_kshot(const SgdNlgTrain& filtered, const SchemaCatalog& catalog, int k, std::uint64_t seed) {
  if (k < 1) throw UsageError("k must be a positive integer");
  KShotSplit out;
  out.k = k;
  out.seed = seed;
  if (std::find(std::begin(kCanonicalShots), std::end(kCanonicalShots), k) == std::end(kCanonicalShots)) {
    out.warnings.push_back("k=" + std::to_string(k) + " is not one of the canonical shot counts 5/10/20/40/80");
  }

  std::map<std::string, std::vector<std::size_t>> by_domain;
  for (std::size_t i = 0; i < filtered.dialogues.size(); ++i) {
    const auto& d = filtered.dialogues[i];
    if (!d.single_service()) throw DataError("k-shot sampling expects single-service dialogues: " + d.dialogue_id);
    by_domain[domain_of(d, catalog)].push_back(i);
  }

  std::vector<bool> keep(filtered.dialogues.size(), false);
  for (const auto& [domain, members] : by_domain) {
    // Each domain gets its own stream so adding a domain leaves the others unchanged.
    std::mt19937_64 rng(seed ^ std::stoull(sha256_hex(domain).substr(0, 16), nullptr, 16));

    std::map<std::string, std::size_t> item_ids;
    std::vector<std::set<std::string>> raw_items;
    for (auto idx : members) {
      raw_items.push_back(coverage_items(filtered.dialogues[idx]));
      for (const auto& item : raw_items.back()) item_ids.emplace(item, 0);
    }
    std::size_t next_id = 0;
    std::vector<std::string> id_to_item;
    for (auto& [item, id] : item_ids) {
      id = next_id++;
      id_to_item.push_back(item);
    }
    std::vector<std::set<std::size_t>> sets;
    for (const auto& items : raw_items) {
      std::set<std::size_t> s;
      for (const auto& item : items) s.insert(item_ids.at(item));
      sets.push_back(std::move(s));
    }

    DomainSelection sel;
    sel.domain = domain;
    sel.available = members.size();
    if (members.size() < static_cast<std::size_t>(k)) {
      out.warnings.push_back("domain " + domain + " has only " + std::to_string(members.size()) +
                             " dialogues; taking all of them for k=" + std::to_string(k));
    }
    auto chosen = select_covering_subset(sets, next_id, static_cast<std::size_t>(k), rng);
    if (!chosen) {
      // Report what the best greedy attempt leaves uncovered.
      std::set<std::size_t> covered;
      std::vector<bool> used(sets.size(), false);
      for (int step = 0; step < k; ++step) {
        std::size_t best = sets.size();
        std::size_t gain = 0;
        for (std::size_t i = 0; i < sets.size(); ++i) {
          if (used[i]) continue;
          std::size_t g = 0;
          for (auto item : sets[i]) g += !covered.contains(item);
          if (g > gain) {
            gain = g;
            best = i;
          }
        }
        if (best == sets.size()) break;
        used[best] = true;
        covered.insert(sets[best].begin(), sets[best].end());
      }
      std::vector<std::string> uncovered;
      for (std::size_t id = 0; id < id_to_item.size(); ++id) {
        if (!covered.contains(id)) uncovered.push_back(id_to_item[id]);
      }
      throw CoverageInfeasible(domain, uncovered);
    }
    for (auto local : *chosen) {
      const auto idx = members[local];
      keep[idx] = true;
      sel.dialogue_ids.push_back(filtered.dialogues[idx].dialogue_id);
      sel.covered.insert(raw_items[local].begin(), raw_items[local].end());
    }
    std::sort(sel.dialogue_ids.begin(), sel.dialogue_ids.end());
    out.domains.push_back(std::move(sel));
  }
  for (std::size_t i = 0; i < filtered.dialogues.size(); ++i) {
    if (keep[i]) out.dialogues.push_back(filtered.dialogues[i]);
  }
  return out;
}

}  // namespace t2g2
