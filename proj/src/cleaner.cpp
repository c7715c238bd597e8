// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

#include "clc/cleaner.h"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>

namespace clc {

std::size_t clean_count(std::size_t n, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw ContractViolation("tau must lie in (0, 1]");
  // Guard against tau * n landing a rounding error above an integer.
  const double raw = std::ceil(tau * static_cast<double>(n) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(raw, 1.0)), 1, n);
}

std::vector<std::size_t> select_clean(std::span<const double> losses, double tau) {
  if (losses.empty()) throw ContractViolation("select_clean: empty batch");
  for (double l : losses) {
    if (!std::isfinite(l)) throw ContractViolation("select_clean: non-finite loss");
  }
  const std::size_t keep = clean_count(losses.size(), tau);
  std::vector<std::size_t> order(losses.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return losses[a] < losses[b] || (losses[a] == losses[b] && a < b);
                    });
  order.resize(keep);
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<std::size_t> union_selection(std::span<const std::size_t> a,
                                         std::span<const std::size_t> b) {
  std::vector<std::size_t> sa(a.begin(), a.end());
  std::vector<std::size_t> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::vector<std::size_t> out;
  std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(out));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace clc
