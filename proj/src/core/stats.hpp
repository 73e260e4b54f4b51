#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "core/dwi.hpp"

namespace mbda {

struct ScoredSet {
  std::vector<double> scores;
  std::vector<Label> labels;
};

// Mann-Whitney AUC with tie kernel 0.5. Throws SingleClass.
double auc(const ScoredSet& set);

struct DelongComparison {
  double auc_a = 0.5;
  double auc_b = 0.5;
  double var_a = 0.0;
  double var_b = 0.0;
  double cov_ab = 0.0;
  double z = 0.0;
  double p_two_sided = 1.0;
  bool degenerate = false;
};

// DeLong test for two classifiers scored on the same cases.
// Throws LabelMismatch / SingleClass. Identical rankings (zero variance of
// the difference) give p = 1 with the degenerate flag set.
DelongComparison delong_test(const ScoredSet& a, const ScoredSet& b);

// DeLong variance of a single AUC estimate.
double delong_variance(const ScoredSet& set);

// Two-sided standard normal tail probability P(|Z| >= |z|).
double normal_two_sided_p(double z);

struct HolmResult {
  std::vector<double> pvalues;
  std::vector<std::size_t> order;  // indices sorted by ascending p
  std::vector<bool> reject;        // original order
  double alpha = 0.05;
};

// Holm step-down procedure. Throws InvalidP.
HolmResult holm_bonferroni(std::span<const double> pvalues, double alpha = 0.05);

}  // namespace mbda
