#include "core/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/error.hpp"

namespace mbda {

namespace {

double kernel(double positive, double negative) {
  if (positive > negative) return 1.0;
  if (positive == negative) return 0.5;
  return 0.0;
}

struct Split {
  std::vector<double> positives;
  std::vector<double> negatives;
};

Split split_by_label(const ScoredSet& set) {
  if (set.scores.size() != set.labels.size()) {
    fail(ErrorCode::kLabelMismatch, "scores and labels differ in length");
  }
  Split s;
  for (std::size_t i = 0; i < set.scores.size(); ++i) {
    (set.labels[i] == Label::kMalignant ? s.positives : s.negatives).push_back(set.scores[i]);
  }
  if (s.positives.empty() || s.negatives.empty()) {
    fail(ErrorCode::kSingleClass, "AUC needs at least one case of each class");
  }
  return s;
}

// Structural components: V10 per positive, V01 per negative.
struct Components {
  std::vector<double> v10;
  std::vector<double> v01;
  double auc;
};

Components components(const Split& s) {
  // Sort-based evaluation: for each positive, count negatives below and tied.
  std::vector<double> neg = s.negatives;
  std::vector<double> pos = s.positives;
  std::sort(neg.begin(), neg.end());
  std::sort(pos.begin(), pos.end());
  const double m = static_cast<double>(s.positives.size());
  const double n = static_cast<double>(s.negatives.size());
  Components c;
  c.v10.reserve(s.positives.size());
  c.v01.reserve(s.negatives.size());
  for (double x : s.positives) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), x);
    const auto hi = std::upper_bound(neg.begin(), neg.end(), x);
    c.v10.push_back((static_cast<double>(lo - neg.begin()) +
                     0.5 * static_cast<double>(hi - lo)) / n);
  }
  for (double y : s.negatives) {
    const auto lo = std::lower_bound(pos.begin(), pos.end(), y);
    const auto hi = std::upper_bound(pos.begin(), pos.end(), y);
    c.v01.push_back((static_cast<double>(pos.end() - hi) +
                     0.5 * static_cast<double>(hi - lo)) / m);
  }
  c.auc = std::accumulate(c.v10.begin(), c.v10.end(), 0.0) / m;
  return c;
}

double covariance(std::span<const double> a, std::span<const double> b) {
  const std::size_t k = a.size();
  if (k < 2) return 0.0;
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(k);
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(k);
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / static_cast<double>(k - 1);
}

}  // namespace

double auc(const ScoredSet& set) {
  const auto s = split_by_label(set);
  double total = 0.0;
  for (double x : s.positives) {
    for (double y : s.negatives) total += kernel(x, y);
  }
  return total / (static_cast<double>(s.positives.size()) * static_cast<double>(s.negatives.size()));
}

double normal_two_sided_p(double z) {
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

double delong_variance(const ScoredSet& set) {
  const auto c = components(split_by_label(set));
  return covariance(c.v10, c.v10) / static_cast<double>(c.v10.size()) +
         covariance(c.v01, c.v01) / static_cast<double>(c.v01.size());
}

DelongComparison delong_test(const ScoredSet& a, const ScoredSet& b) {
  if (a.labels != b.labels) {
    fail(ErrorCode::kLabelMismatch, "DeLong test needs both score sets on the same cases");
  }
  const auto ca = components(split_by_label(a));
  const auto cb = components(split_by_label(b));
  const double m = static_cast<double>(ca.v10.size());
  const double n = static_cast<double>(ca.v01.size());

  DelongComparison r;
  r.auc_a = ca.auc;
  r.auc_b = cb.auc;
  r.var_a = covariance(ca.v10, ca.v10) / m + covariance(ca.v01, ca.v01) / n;
  r.var_b = covariance(cb.v10, cb.v10) / m + covariance(cb.v01, cb.v01) / n;
  r.cov_ab = covariance(ca.v10, cb.v10) / m + covariance(ca.v01, cb.v01) / n;
  const double denom = r.var_a + r.var_b - 2.0 * r.cov_ab;
  if (!(denom > 1e-14 * std::max(r.var_a + r.var_b, 1e-300))) {
    r.z = 0.0;
    r.p_two_sided = 1.0;
    r.degenerate = true;
    return r;
  }
  r.z = (r.auc_a - r.auc_b) / std::sqrt(denom);
  r.p_two_sided = normal_two_sided_p(r.z);
  return r;
}

HolmResult holm_bonferroni(std::span<const double> pvalues, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    fail(ErrorCode::kInvalidP, "Holm-Bonferroni: alpha must be in (0, 1)");
  }
  for (double p : pvalues) {
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::kInvalidP, "p-values must lie in [0, 1]");
  }
  HolmResult r;
  r.pvalues.assign(pvalues.begin(), pvalues.end());
  r.alpha = alpha;
  r.order.resize(pvalues.size());
  std::iota(r.order.begin(), r.order.end(), std::size_t{0});
  std::stable_sort(r.order.begin(), r.order.end(),
                   [&](std::size_t i, std::size_t j) { return pvalues[i] < pvalues[j]; });
  r.reject.assign(pvalues.size(), false);
  const std::size_t m = pvalues.size();
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t idx = r.order[k];
    if (pvalues[idx] <= alpha / static_cast<double>(m - k)) {
      r.reject[idx] = true;
    } else {
      break;
    }
  }
  return r;
}

}  // namespace mbda
