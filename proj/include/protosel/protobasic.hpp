#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "protosel/errors.hpp"
#include "protosel/nnqp.hpp"
#include "protosel/solution.hpp"

namespace protosel {

// Keeps the m elements with the largest gradient at zero (which is mu_j for
// the mean-discrepancy objective) in a min-heap, then solves a single
// restricted QP over them.
//
// Ordering key is (mu, -stream_index): an arrival only displaces the heap
// minimum when it is strictly better, so equal values keep the incumbent with
// the smaller index.
template <class Item>
class ProtoBasic {
 public:
  struct Entry {
    double mu;
    std::size_t index;
    Item item;
  };

  explicit ProtoBasic(std::size_t m) : m_(m) {
    if (m == 0) throw InputError("ProtoBasic needs m >= 1");
    heap_.reserve(m);
  }

  std::size_t capacity() const { return m_; }
  std::size_t size() const { return heap_.size(); }
  const StreamCounters& counters() const { return counters_; }

  // Returns true when the element was admitted.
  bool offer(std::size_t index, double mu, const Item& item) {
    ++counters_.elements;
    ++counters_.gradient_evals;
    bool admitted = false;
    if (heap_.size() < m_) {
      heap_.push_back(Entry{mu, index, item});
      std::push_heap(heap_.begin(), heap_.end(), better);
      admitted = true;
    } else {
      const Entry candidate{mu, index, item};
      if (better(candidate, heap_.front())) {
        std::pop_heap(heap_.begin(), heap_.end(), better);
        heap_.back() = candidate;
        std::push_heap(heap_.begin(), heap_.end(), better);
        admitted = true;
      }
    }
    if (admitted) {
      ++counters_.accepted_elements;
    } else {
      ++counters_.rejected_elements;
    }
    counters_.peak_tracked = std::max(counters_.peak_tracked, heap_.size());
    return admitted;
  }

  // Current members ordered by stream index.
  std::vector<Entry> entries() const {
    auto out = heap_;
    std::sort(out.begin(), out.end(), [](const Entry& a, const Entry& b) { return a.index < b.index; });
    return out;
  }

  double min_mu() const { return heap_.empty() ? 0.0 : heap_.front().mu; }

  template <class KernelFn>
  Solution finalize(const KernelFn& kernel, const SolverOptions& opts = {}) {
    if (heap_.empty()) return Solution{};
    const auto members = entries();
    const auto k = static_cast<Eigen::Index>(members.size());
    RestrictedQP qp;
    qp.mu.resize(k);
    qp.K.resize(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
      qp.support.push_back(members[a].index);
      qp.mu[a] = members[a].mu;
      for (Eigen::Index b = a; b < k; ++b) {
        const double v = kernel(members[a].item, members[b].item);
        qp.K(a, b) = v;
        qp.K(b, a) = v;
        ++counters_.kernel_evals;
      }
    }
    ++counters_.qp_solves;
    const QPSolution sol = solve(qp, opts);
    return make_solution(qp.support, sol.weights, sol.objective);
  }

 private:
  // Heap comparator: the front is the element every other member beats.
  static bool better(const Entry& a, const Entry& b) {
    if (a.mu != b.mu) return a.mu > b.mu;
    return a.index < b.index;
  }

  std::size_t m_;
  std::vector<Entry> heap_;
  StreamCounters counters_;
};

}  // namespace protosel
