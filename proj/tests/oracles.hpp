#pragma once

// Independent reference computations for the metric formulas.

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>

#include "quorum/metrics.hpp"

namespace quorum::test {

/// Task with one multi-label key over codes "c0".."c{L-1}".
inline TaskSpec multilabel_spec(std::size_t num_codes) {
  TaskSpec spec;
  spec.task_id = "ML";
  spec.kind = TaskKind::MultiLabel;
  LabelKey key{"K", {}, TaskKind::MultiLabel};
  for (std::size_t i = 0; i < num_codes; ++i) key.codes.push_back("c" + std::to_string(i));
  spec.keys.push_back(key);
  return spec;
}

inline std::set<std::string> codes_of(std::uint32_t mask, std::size_t num_codes) {
  std::set<std::string> out;
  for (std::size_t i = 0; i < num_codes; ++i) {
    if ((mask >> i) & 1U) out.insert("c" + std::to_string(i));
  }
  return out;
}

struct OracleCheck {
  double max_error = 0;
  std::size_t instances = 0;
};

/// Random multi-label instances (L in 1..13) scored by the library and by
/// popcount(pred ^ gold) over bit vectors.
inline OracleCheck check_multilabel_against_xor(std::uint64_t seed, std::size_t instances) {
  std::mt19937_64 rng(seed);
  OracleCheck check;
  for (std::size_t n = 0; n < instances; ++n) {
    const auto num_codes = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 13)(rng));
    const auto spec = multilabel_spec(num_codes);
    const auto entries_count = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 30)(rng));
    const std::uint32_t full = (1U << num_codes) - 1U;
    std::vector<TextEntry> entries;
    FinalLabels final;
    double oracle_sum = 0;
    for (std::size_t e = 0; e < entries_count; ++e) {
      const auto gold_mask = static_cast<std::uint32_t>(rng()) & full;
      const auto pred_mask = static_cast<std::uint32_t>(rng()) & full;
      const auto id = "e" + std::to_string(e);
      LabelAssignment gold;
      gold.by_key["K"] = codes_of(gold_mask, num_codes);
      entries.push_back(TextEntry{id, e + 1, "t", gold});
      LabelAssignment pred;
      pred.by_key["K"] = codes_of(pred_mask, num_codes);
      final[id] = pred;
      oracle_sum += 1.0 - static_cast<double>(std::popcount(gold_mask ^ pred_mask)) / static_cast<double>(num_codes);
    }
    const double oracle = oracle_sum / static_cast<double>(entries_count);
    const double got = multilabel_accuracy(final, entries, spec);
    check.max_error = std::max(check.max_error, std::abs(got - oracle));
    ++check.instances;
  }
  return check;
}

/// Random multi-class instances scored by the library and by counting exact matches.
inline OracleCheck check_multiclass_against_counting(std::uint64_t seed, std::size_t instances) {
  std::mt19937_64 rng(seed);
  OracleCheck check;
  TaskSpec spec;
  spec.task_id = "MC";
  spec.keys.push_back(LabelKey{"S", {"a", "b", "c", "d"}, TaskKind::MultiClass});
  for (std::size_t n = 0; n < instances; ++n) {
    const auto entries_count = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 40)(rng));
    std::vector<TextEntry> entries;
    FinalLabels final;
    std::size_t matches = 0;
    for (std::size_t e = 0; e < entries_count; ++e) {
      const auto g = spec.keys[0].codes[rng() % 4];
      const auto p = spec.keys[0].codes[rng() % 4];
      const auto id = "e" + std::to_string(e);
      LabelAssignment gold;
      gold.by_key["S"] = {g};
      entries.push_back(TextEntry{id, e + 1, "t", gold});
      if (rng() % 10 == 0) {
        final[id] = std::nullopt;  // failed entries score zero
      } else {
        LabelAssignment pred;
        pred.by_key["S"] = {p};
        final[id] = pred;
        if (p == g) ++matches;
      }
    }
    const double expected = static_cast<double>(matches) / static_cast<double>(entries_count);
    check.max_error = std::max(check.max_error, std::abs(multiclass_accuracy(final, entries, spec) - expected));
    ++check.instances;
  }
  return check;
}

/// Count of random (B, B_before, B_after) triples whose rates are not exactly
/// B_before/B, B_after/B and their difference.
inline std::size_t agreement_formula_mismatches(std::uint64_t seed, std::size_t triples) {
  std::mt19937_64 rng(seed);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < triples; ++i) {
    const auto b = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 200)(rng));
    const auto before = static_cast<std::size_t>(std::uniform_int_distribution<std::size_t>(0, b)(rng));
    const auto after = static_cast<std::size_t>(std::uniform_int_distribution<std::size_t>(before, b)(rng));
    const auto rates = agreement_rates(before, after, b);
    const double pre = static_cast<double>(before) / static_cast<double>(b);
    const double post = static_cast<double>(after) / static_cast<double>(b);
    const double delta = post - pre;
    if (rates.pre_ar != pre || rates.post_ar != post || std::bit_cast<std::uint64_t>(rates.delta_ar) != std::bit_cast<std::uint64_t>(delta)) {
      ++mismatches;
    }
  }
  return mismatches;
}

}  // namespace quorum::test
