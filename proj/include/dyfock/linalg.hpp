#pragma once

// Exact rank of rational matrices by fraction-free (Bareiss) elimination.

#include "dyfock/arith.hpp"

#include <cstddef>
#include <utility>
#include <vector>

namespace dyfock {

using RationalMatrix = std::vector<std::vector<Rational>>;

/// Rank over Q. Rows are scaled to integers first; elimination stays in Z.
inline std::size_t exact_rank(const RationalMatrix& m) {
  if (m.empty()) return 0;
  const std::size_t cols = m.front().size();
  std::vector<std::vector<mpz_class>> a;
  a.reserve(m.size());
  for (const auto& row : m) {
    mpz_class l = 1;
    for (const auto& x : row) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), x.get_den_mpz_t());
    std::vector<mpz_class> z(cols);
    for (std::size_t j = 0; j < cols; ++j) z[j] = Rational(row[j] * l).get_num();
    a.push_back(std::move(z));
  }
  std::size_t rank = 0;
  mpz_class prev = 1;
  for (std::size_t c = 0; c < cols && rank < a.size(); ++c) {
    std::size_t piv = rank;
    while (piv < a.size() && a[piv][c] == 0) ++piv;
    if (piv == a.size()) continue;
    std::swap(a[piv], a[rank]);
    for (std::size_t i = rank + 1; i < a.size(); ++i) {
      for (std::size_t j = c + 1; j < cols; ++j) {
        a[i][j] = a[rank][c] * a[i][j] - a[i][c] * a[rank][j];
        mpz_divexact(a[i][j].get_mpz_t(), a[i][j].get_mpz_t(), prev.get_mpz_t());
      }
      a[i][c] = 0;
    }
    prev = a[rank][c];
    ++rank;
  }
  return rank;
}

}  // namespace dyfock
