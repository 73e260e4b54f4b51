#pragma once

// Reference implementations used as test oracles. Deliberately naive and
// independent of the library code paths they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <utility>
#include <vector>

namespace oracle {

inline double dki_signal(double s0, double adc, double akc, double theta, double b) {
  const double decay = s0 * std::exp(-b * adc + b * b * adc * adc * akc / 6.0);
  return std::sqrt(theta * theta + decay * decay);
}

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Richardson-extrapolated central difference, O(h^4).
inline double richardson_difference(const std::function<double(double)>& f, double x, double h) {
  return (4.0 * central_difference(f, x, h / 2.0) - central_difference(f, x, h)) / 3.0;
}

// Mean of values over true mask entries, double loop over coordinates.
inline double masked_mean(const std::vector<float>& values, const std::vector<std::uint8_t>& mask,
                          std::size_t width, std::size_t height) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      if (mask[y * width + x]) {
        sum += values[y * width + x];
        ++count;
      }
    }
  }
  return sum / static_cast<double>(count);
}

inline double psi(double pos, double neg) {
  if (pos > neg) return 1.0;
  if (pos == neg) return 0.5;
  return 0.0;
}

// labels: 1 = positive (malignant), 0 = negative.
inline double auc_pairs(const std::vector<double>& s, const std::vector<int>& labels) {
  double acc = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (labels[j] != 0) continue;
      acc += psi(s[i], s[j]);
      pairs += 1.0;
    }
  }
  return acc / pairs;
}

// Area under the empirical ROC curve by the trapezoidal rule, sweeping the
// threshold down through the distinct scores.
inline double auc_trapezoid(const std::vector<double>& s, const std::vector<int>& labels) {
  std::vector<double> thresholds = s;
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  double pos = 0.0, neg = 0.0;
  for (int l : labels) (l == 1 ? pos : neg) += 1.0;
  double area = 0.0, prev_tpr = 0.0, prev_fpr = 0.0;
  for (double t : thresholds) {
    double tp = 0.0, fp = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= t) (labels[i] == 1 ? tp : fp) += 1.0;
    }
    const double tpr = tp / pos, fpr = fp / neg;
    area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
    prev_tpr = tpr;
    prev_fpr = fpr;
  }
  return area;
}

struct DelongRef {
  double auc_a, auc_b, var_a, var_b, cov_ab, z, p;
};

// Two-sided normal tail by Simpson integration of the density.
inline double normal_two_sided_p(double z) {
  const double a = std::fabs(z);
  const double upper = a + 40.0;
  const int n = 200000;
  const double h = (upper - a) / n;
  auto phi = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); };
  double sum = phi(a) + phi(upper);
  for (int k = 1; k < n; ++k) sum += (k % 2 ? 4.0 : 2.0) * phi(a + k * h);
  return std::min(1.0, 2.0 * sum * h / 3.0);
}

// DeLong structural components by explicit double loops.
inline DelongRef delong(const std::vector<double>& a, const std::vector<double>& b,
                        const std::vector<int>& labels) {
  std::vector<std::size_t> P, N;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? P : N).push_back(i);
  const double m = static_cast<double>(P.size()), n = static_cast<double>(N.size());
  auto components = [&](const std::vector<double>& s, std::vector<double>& v10,
                        std::vector<double>& v01) {
    v10.assign(P.size(), 0.0);
    v01.assign(N.size(), 0.0);
    for (std::size_t i = 0; i < P.size(); ++i) {
      for (std::size_t j = 0; j < N.size(); ++j) {
        const double k = psi(s[P[i]], s[N[j]]);
        v10[i] += k / n;
        v01[j] += k / m;
      }
    }
  };
  std::vector<double> a10, a01, b10, b01;
  components(a, a10, a01);
  components(b, b10, b01);
  const double A = std::accumulate(a10.begin(), a10.end(), 0.0) / m;
  const double B = std::accumulate(b10.begin(), b10.end(), 0.0) / m;
  auto cov = [](const std::vector<double>& x, double mx, const std::vector<double>& y, double my) {
    if (x.size() < 2) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
    return s / static_cast<double>(x.size() - 1);
  };
  DelongRef r{};
  r.auc_a = A;
  r.auc_b = B;
  r.var_a = cov(a10, A, a10, A) / m + cov(a01, A, a01, A) / n;
  r.var_b = cov(b10, B, b10, B) / m + cov(b01, B, b01, B) / n;
  r.cov_ab = cov(a10, A, b10, B) / m + cov(a01, A, b01, B) / n;
  const double d = r.var_a + r.var_b - 2.0 * r.cov_ab;
  r.z = d > 0.0 ? (A - B) / std::sqrt(d) : 0.0;
  r.p = d > 0.0 ? normal_two_sided_p(r.z) : 1.0;
  return r;
}

// Holm via adjusted p-values: adj_(k) = max_{j<=k} min(1, (m-j+1) p_(j)).
inline std::vector<bool> holm(const std::vector<double>& p, double alpha) {
  const std::size_t m = p.size();
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return p[x] < p[y]; });
  std::vector<bool> reject(m, false);
  double running = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double adj = std::min(1.0, static_cast<double>(m - k) * p[idx[k]]);
    running = std::max(running, adj);
    reject[idx[k]] = running <= alpha;
  }
  return reject;
}

}  // namespace oracle
