#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "protosel/errors.hpp"
#include "protosel/kernel.hpp"

namespace protosel::eval {

struct WeightedPrototype {
  DataPoint point;
  double weight = 0.0;
};

struct LabelDistribution {
  std::map<int, std::size_t> histogram;
  double entropy = 0.0;  // nats
};

struct EvalReport {
  std::optional<double> accuracy;
  LabelDistribution labels;
  std::optional<double> target_match_rate;
  std::optional<std::vector<double>> cluster_histogram;
};

// Top `top_m` prototypes by weight (ties: smaller stream index), used as a
// 1-NN classifier under Euclidean distance. Weights only rank; they never
// scale distances.
inline double one_nn_accuracy(std::span<const WeightedPrototype> prototypes, std::span<const DataPoint> test,
                              std::size_t top_m) {
  if (prototypes.empty() || top_m == 0) throw EvalError("1-NN evaluation needs at least one prototype");
  if (test.empty()) throw EvalError("1-NN evaluation needs a non-empty test set");
  std::vector<const WeightedPrototype*> ranked;
  for (const auto& p : prototypes) {
    if (!p.point.label) throw EvalError("prototype without label");
    ranked.push_back(&p);
  }
  std::sort(ranked.begin(), ranked.end(), [](const WeightedPrototype* a, const WeightedPrototype* b) {
    if (a->weight != b->weight) return a->weight > b->weight;
    return a->point.stream_index < b->point.stream_index;
  });
  ranked.resize(std::min(top_m, ranked.size()));

  std::size_t correct = 0;
  for (const auto& t : test) {
    if (!t.label) throw EvalError("test point without label");
    double best = std::numeric_limits<double>::infinity();
    int predicted = 0;
    for (const auto* p : ranked) {
      const double d = squared_distance(t.features, p->point.features);
      if (d < best) {
        best = d;
        predicted = *p->point.label;
      }
    }
    if (predicted == *t.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

inline LabelDistribution label_distribution(std::span<const DataPoint> prototypes) {
  LabelDistribution out;
  for (const auto& p : prototypes) {
    if (!p.label) throw EvalError("prototype without label");
    ++out.histogram[*p.label];
  }
  const double total = static_cast<double>(prototypes.size());
  for (const auto& [label, count] : out.histogram) {
    const double q = static_cast<double>(count) / total;
    out.entropy -= q * std::log(q);
  }
  return out;
}

inline double target_match_rate(std::span<const DataPoint> prototypes, int target_label) {
  if (prototypes.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& p : prototypes) {
    if (!p.label) throw EvalError("prototype without label");
    if (*p.label == target_label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(prototypes.size());
}

struct KMeansResult {
  std::vector<std::vector<double>> centroids;
  std::vector<std::size_t> assignment;
  std::size_t iterations = 0;
};

inline std::size_t nearest(std::span<const double> x, const std::vector<std::vector<double>>& centroids) {
  std::size_t arg = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(x, centroids[c]);
    if (d < best) {
      best = d;
      arg = c;
    }
  }
  return arg;
}

// Lloyd iterations from a k-means++ seeding.
inline KMeansResult kmeans(std::span<const DataPoint> base, std::size_t k, std::uint64_t seed,
                           std::size_t max_iter = 100) {
  if (k == 0 || k > base.size()) throw InputError("k-means needs 1 <= k <= |base|");
  const std::size_t n = base.size();
  const std::size_t d = base.front().dim();
  std::mt19937_64 rng(seed);

  KMeansResult r;
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  r.centroids.push_back(base[first(rng)].features);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (r.centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(base[i].features, r.centroids.back()));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      std::discrete_distribution<std::size_t> draw(d2.begin(), d2.end());
      pick = draw(rng);
    } else {
      pick = first(rng);
    }
    r.centroids.push_back(base[pick].features);
  }

  r.assignment.assign(n, 0);
  for (std::size_t it = 0; it < max_iter; ++it) {
    bool changed = it == 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = nearest(base[i].features, r.centroids);
      if (c != r.assignment[i]) changed = true;
      r.assignment[i] = c;
    }
    r.iterations = it + 1;
    if (!changed) break;
    std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[r.assignment[i]];
      for (std::size_t j = 0; j < d; ++j) sums[r.assignment[i]][j] += base[i].features[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      for (std::size_t j = 0; j < d; ++j) r.centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
    }
  }
  return r;
}

// Fraction of prototypes whose nearest k-means centroid (fit on `base`) is
// each cluster.
inline std::vector<double> cluster_coverage(std::span<const DataPoint> prototypes, std::span<const DataPoint> base,
                                            std::size_t k, std::uint64_t seed) {
  const auto km = kmeans(base, k, seed);
  std::vector<double> hist(k, 0.0);
  if (prototypes.empty()) return hist;
  for (const auto& p : prototypes) hist[nearest(p.features, km.centroids)] += 1.0;
  for (auto& h : hist) h /= static_cast<double>(prototypes.size());
  return hist;
}

}  // namespace protosel::eval
