#pragma once

// Exhaustive reference for run-length declustering, written without the
// single-pass run logic: two exceedances share a cluster exactly when no
// stretch of more than d_s consecutive grid steps between them is free of
// exceedances. Every pair is checked directly.

#include <cmath>
#include <optional>
#include <vector>

#include "helpers.hpp"
#include "metocean/decluster.hpp"
#include "metocean/random.hpp"

namespace oracle {

struct Case {
  std::vector<long> grid;  ///< grid index of each present record, increasing
  std::vector<double> values;
  double threshold = 0.0;
  int separation_steps = 1;
};

struct Event {
  long grid = 0;
  double value = 0.0;
};

inline Case random_case(metocean::Rng& rng) {
  Case c;
  const auto n = 1 + metocean::uniform_index(rng, 200);
  long g = 0;
  for (std::size_t i = 0; i < n; ++i) {
    c.grid.push_back(g);
    // Integer values force ties; a few missing values and absent records.
    const auto roll = metocean::uniform_index(rng, 40);
    c.values.push_back(roll == 0 ? std::nan("") : static_cast<double>(metocean::uniform_index(rng, 10)));
    g += metocean::uniform_index(rng, 25) == 0 ? 1 + static_cast<long>(metocean::uniform_index(rng, 4)) : 1;
  }
  c.threshold = static_cast<double>(metocean::uniform_index(rng, 10)) + 0.5 * static_cast<double>(metocean::uniform_index(rng, 2));
  c.separation_steps = 1 + static_cast<int>(metocean::uniform_index(rng, 6));
  return c;
}

inline metocean::MultiSeries to_series(const Case& c) {
  metocean::MultiSeries s;
  for (long g : c.grid) s.times.push_back(testing::hour(g));
  s.span_start = s.times.front();
  s.span_end = s.times.back();
  s.names = {"x"};
  s.columns = {c.values};
  return s;
}

/// nullopt when there is no exceedance at all.
inline std::optional<std::vector<Event>> brute_force(const Case& c) {
  std::vector<long> exceed_grid;
  std::vector<double> exceed_value;
  for (std::size_t i = 0; i < c.values.size(); ++i) {
    if (c.values[i] > c.threshold) {
      exceed_grid.push_back(c.grid[i]);
      exceed_value.push_back(c.values[i]);
    }
  }
  if (exceed_grid.empty()) return std::nullopt;
  const std::size_t m = exceed_grid.size();
  auto is_exceed_at = [&](long g) {
    for (long e : exceed_grid) {
      if (e == g) return true;
    }
    return false;
  };
  // linked(i, j): the longest exceedance-free stretch strictly between the
  // two grid indices is at most d_s steps.
  auto linked = [&](std::size_t i, std::size_t j) {
    long longest = 0, current = 0;
    for (long g = exceed_grid[i] + 1; g < exceed_grid[j]; ++g) {
      current = is_exceed_at(g) ? 0 : current + 1;
      longest = std::max(longest, current);
    }
    return longest <= c.separation_steps;
  };
  std::vector<std::size_t> label(m);
  for (std::size_t j = 0; j < m; ++j) {
    label[j] = j;
    for (std::size_t i = 0; i < j; ++i) {
      if (linked(i, j)) {
        label[j] = label[i];
        break;
      }
    }
  }
  std::vector<Event> out;
  for (std::size_t j = 0; j < m; ++j) {
    if (label[j] != j) continue;
    Event best{exceed_grid[j], exceed_value[j]};
    for (std::size_t k = j + 1; k < m; ++k) {
      if (label[k] == j && exceed_value[k] > best.value) best = {exceed_grid[k], exceed_value[k]};
    }
    out.push_back(best);
  }
  return out;
}

inline bool same(const metocean::ClusterMaxima& cm, const std::vector<Event>& expect) {
  if (cm.n_clusters() != expect.size()) return false;
  for (std::size_t k = 0; k < expect.size(); ++k) {
    if (cm.events[k].peak_time != testing::hour(expect[k].grid)) return false;
    if (cm.events[k].values[0] != expect[k].value) return false;
  }
  return true;
}

}  // namespace oracle
