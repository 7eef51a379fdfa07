#pragma once

// Word budgets and the canonical enumeration order: total degree ascending,
// and within one degree the exponent tuples in lexicographically descending
// order, so for p = 2 the degree-2 words are (2,0), (1,1), (0,2).

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "hypercyc/core_algebra.hpp"

namespace hypercyc {

enum class CapStrategy {
  Error,     // exceeding max_words raises BudgetOverflow
  Truncate,  // keep the first max_words words in enumeration order
};

struct WordBudget {
  std::uint32_t max_total_degree = 0;  // D
  std::uint32_t min_total_degree = 0;  // M
  std::optional<std::uint64_t> max_words;
  CapStrategy cap = CapStrategy::Error;

  void validate() const {
    if (min_total_degree > max_total_degree)
      throw Error(ErrorCode::InvalidArgument, "word budget has M > D");
  }
};

// C(d + p - 1, p - 1) with saturation at uint64 max.
inline std::uint64_t words_of_degree(std::size_t p, std::uint64_t d) {
  if (p == 0) return d == 0 ? 1 : 0;
  long double c = 1.0L;
  for (std::size_t i = 1; i < p; ++i) c = c * static_cast<long double>(d + i) / static_cast<long double>(i);
  if (c >= static_cast<long double>(std::numeric_limits<std::uint64_t>::max()))
    return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(std::llround(c));
}

// Number of words with M <= degree <= D; saturates instead of overflowing.
inline std::uint64_t word_count(std::size_t p, std::uint32_t min_degree, std::uint32_t max_degree) {
  std::uint64_t total = 0;
  for (std::uint64_t d = min_degree; d <= max_degree; ++d) {
    const std::uint64_t c = words_of_degree(p, d);
    if (total > std::numeric_limits<std::uint64_t>::max() - c)
      return std::numeric_limits<std::uint64_t>::max();
    total += c;
  }
  return total;
}

// Successor of `e` within its degree; false when `e` was the last one.
inline bool next_same_degree(std::vector<std::uint32_t>& e) {
  const std::size_t p = e.size();
  if (p <= 1) return false;
  const std::uint32_t tail = e[p - 1];
  e[p - 1] = 0;
  for (std::size_t i = p - 1; i-- > 0;) {
    if (e[i] > 0) {
      --e[i];
      e[i + 1] = tail + 1;
      return true;
    }
  }
  e[p - 1] = tail;
  return false;
}

inline std::vector<Word> words_with_degree(std::size_t p, std::uint32_t d) {
  std::vector<Word> out;
  if (p == 0) return out;
  out.reserve(static_cast<std::size_t>(words_of_degree(p, d)));
  std::vector<std::uint32_t> e(p, 0);
  e[0] = d;
  do {
    out.emplace_back(e);
  } while (next_same_degree(e));
  return out;
}

// Streams words in canonical order; f returns false to stop early.
template <class Fn>
void for_each_word(std::size_t p, const WordBudget& budget, Fn&& f) {
  budget.validate();
  std::uint64_t emitted = 0;
  const std::uint64_t limit = budget.max_words.value_or(std::numeric_limits<std::uint64_t>::max());
  std::vector<std::uint32_t> e(p, 0);
  for (std::uint32_t d = budget.min_total_degree; d <= budget.max_total_degree; ++d) {
    std::fill(e.begin(), e.end(), 0u);
    e[0] = d;
    do {
      if (emitted == limit) return;
      ++emitted;
      if (!f(Word(e))) return;
    } while (next_same_degree(e));
    if (d == std::numeric_limits<std::uint32_t>::max()) break;
  }
}

inline std::vector<Word> enumerate_words(std::size_t p, const WordBudget& budget) {
  budget.validate();
  if (p == 0) throw Error(ErrorCode::InvalidArgument, "generator count must be positive");
  const std::uint64_t count = word_count(p, budget.min_total_degree, budget.max_total_degree);
  if (budget.max_words && count > *budget.max_words && budget.cap == CapStrategy::Error)
    throw Error(ErrorCode::BudgetOverflow, "budget enumerates " + std::to_string(count) +
                                               " words, more than the cap of " +
                                               std::to_string(*budget.max_words));
  std::vector<Word> out;
  out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, budget.max_words.value_or(count))));
  for_each_word(p, budget, [&](const Word& w) {
    out.push_back(w);
    return true;
  });
  return out;
}

inline void check_budget(std::size_t p, const WordBudget& budget) {
  budget.validate();
  const std::uint64_t count = word_count(p, budget.min_total_degree, budget.max_total_degree);
  if (budget.max_words && count > *budget.max_words && budget.cap == CapStrategy::Error)
    throw Error(ErrorCode::BudgetOverflow, "budget enumerates " + std::to_string(count) +
                                               " words, more than the cap of " +
                                               std::to_string(*budget.max_words));
}

}  // namespace hypercyc
