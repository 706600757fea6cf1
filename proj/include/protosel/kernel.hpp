#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "protosel/errors.hpp"

namespace protosel {

// One streamed sample. stream_index identifies the row the point came from and
// is stable under shuffling.
struct DataPoint {
  std::vector<double> features;
  std::optional<int> label;
  std::size_t stream_index = 0;

  std::size_t dim() const { return features.size(); }
};

enum class KernelMode { gaussian };

struct KernelConfig {
  double bandwidth = 1.0;
  KernelMode mode = KernelMode::gaussian;
};

inline void check_config(const KernelConfig& cfg) {
  if (!(cfg.bandwidth > 0.0) || !std::isfinite(cfg.bandwidth)) {
    throw InputError("kernel bandwidth must be positive and finite");
  }
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InputError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

// exp(-|a-b|^2 / (2 sigma^2)); symmetric bit-for-bit since the squared
// distance is accumulated from squared differences.
inline double kernel_eval(std::span<const double> a, std::span<const double> b,
                          const KernelConfig& cfg) {
  const double sq = squared_distance(a, b);
  return std::exp(-sq / (2.0 * cfg.bandwidth * cfg.bandwidth));
}

inline double kernel_eval(const DataPoint& a, const DataPoint& b, const KernelConfig& cfg) {
  return kernel_eval(a.features, b.features, cfg);
}

// Callable wrapper used by the streaming engines.
struct GaussianKernel {
  KernelConfig cfg;
  double operator()(const DataPoint& a, const DataPoint& b) const {
    return kernel_eval(a, b, cfg);
  }
};

inline Eigen::MatrixXd kernel_matrix(std::span<const DataPoint> points, const KernelConfig& cfg) {
  check_config(cfg);
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = kernel_eval(points[i], points[i], cfg);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = kernel_eval(points[i], points[j], cfg);
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

// (1/|ref|) * sum_i k(ref_i, x), summed in reference order.
inline double mean_similarity(std::span<const DataPoint> reference, const DataPoint& x,
                              const KernelConfig& cfg) {
  double acc = 0.0;
  for (const auto& r : reference) acc += kernel_eval(r, x, cfg);
  return acc / static_cast<double>(reference.size());
}

enum class MeanMode { exact_two_pass, reservoir };

// Per-candidate estimate of the mean kernel similarity to a reference set.
// In reservoir mode the reference set is a uniform sample (Algorithm R) of the
// stream seen so far and every tracked candidate is re-estimated on update.
class MeanEstimate {
 public:
  MeanEstimate() = default;

  static MeanEstimate reservoir_mode(std::size_t capacity, std::uint64_t seed) {
    if (capacity == 0) throw InputError("reservoir capacity must be positive");
    MeanEstimate est;
    est.mode_ = MeanMode::reservoir;
    est.capacity_ = capacity;
    est.rng_.seed(seed);
    return est;
  }

  MeanMode mode() const { return mode_; }
  std::size_t reference_count() const { return reference_count_; }
  std::size_t capacity() const { return capacity_; }
  const std::vector<DataPoint>& reservoir() const { return reservoir_; }
  const std::map<std::size_t, double>& values() const { return values_; }

  double at(std::size_t stream_index) const {
    auto it = values_.find(stream_index);
    if (it == values_.end()) {
      throw InputError("no mean estimate for stream index " + std::to_string(stream_index));
    }
    return it->second;
  }
  bool contains(std::size_t stream_index) const { return values_.count(stream_index) != 0; }

  // Adds a candidate whose estimate should follow the reservoir.
  void track(const DataPoint& p, const KernelConfig& cfg) {
    require_reservoir();
    tracked_[p.stream_index] = p;
    if (!reservoir_.empty()) values_[p.stream_index] = mean_similarity(reservoir_, p, cfg);
  }
  // Stops re-estimating a candidate; its last value is kept frozen.
  void untrack(std::size_t stream_index) { tracked_.erase(stream_index); }
  std::size_t tracked_count() const { return tracked_.size(); }

 private:
  friend MeanEstimate mean_vector(std::span<const DataPoint>, std::span<const DataPoint>,
                                  const KernelConfig&);
  friend void update_streaming_mean(MeanEstimate&, const DataPoint&, const KernelConfig&);

  void require_reservoir() const {
    if (mode_ != MeanMode::reservoir) throw InputError("estimate is not in reservoir mode");
  }

  std::map<std::size_t, double> values_;
  std::size_t reference_count_ = 0;
  MeanMode mode_ = MeanMode::exact_two_pass;
  std::size_t capacity_ = 0;
  std::vector<DataPoint> reservoir_;
  std::map<std::size_t, DataPoint> tracked_;
  std::mt19937_64 rng_;
};

inline MeanEstimate mean_vector(std::span<const DataPoint> reference,
                                std::span<const DataPoint> candidates, const KernelConfig& cfg) {
  check_config(cfg);
  if (reference.empty()) throw InputError("reference set is empty");
  MeanEstimate est;
  est.mode_ = MeanMode::exact_two_pass;
  est.reference_count_ = reference.size();
  for (const auto& c : candidates) est.values_[c.stream_index] = mean_similarity(reference, c, cfg);
  return est;
}

// Covariate-shift variant: similarities are averaged over a separate target
// sample. Target labels are never read.
inline MeanEstimate target_mean(std::span<const DataPoint> target,
                                std::span<const DataPoint> candidates, const KernelConfig& cfg) {
  if (target.empty()) throw InputError("target set is empty");
  return mean_vector(target, candidates, cfg);
}

// Offers `incoming` to the reservoir, starts tracking it, and refreshes every
// tracked estimate against the current reservoir.
inline void update_streaming_mean(MeanEstimate& est, const DataPoint& incoming,
                                  const KernelConfig& cfg) {
  est.require_reservoir();
  ++est.reference_count_;
  if (est.reservoir_.size() < est.capacity_) {
    est.reservoir_.push_back(incoming);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, est.reference_count_ - 1);
    const std::size_t slot = pick(est.rng_);
    if (slot < est.capacity_) est.reservoir_[slot] = incoming;
  }
  est.tracked_[incoming.stream_index] = incoming;
  for (const auto& [idx, p] : est.tracked_) {
    est.values_[idx] = mean_similarity(est.reservoir_, p, cfg);
  }
}

struct BandwidthEstimate {
  double bandwidth = 1.0;
  bool degenerate = false;  // all sampled points coincide
};

// Median pairwise Euclidean distance over the sample, or over a uniform
// subsample of at most max_points points.
inline BandwidthEstimate median_heuristic(std::span<const DataPoint> sample,
                                          std::uint64_t seed = 0,
                                          std::size_t max_points = 500) {
  if (sample.size() < 2) throw InputError("median heuristic needs at least two points");
  std::vector<std::size_t> idx(sample.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  if (idx.size() > max_points) {
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(max_points);
    std::sort(idx.begin(), idx.end());
  }
  std::vector<double> dists;
  dists.reserve(idx.size() * (idx.size() - 1) / 2);
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      dists.push_back(std::sqrt(squared_distance(sample[idx[a]].features, sample[idx[b]].features)));
    }
  }
  const std::size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
  double median = dists[mid];
  if (dists.size() % 2 == 0) {
    const double lower = *std::max_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  if (!(median > 0.0)) return {1.0, true};
  return {median, false};
}

}  // namespace protosel
