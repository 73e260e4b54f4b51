#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/dki.hpp"
#include "core/dwi.hpp"

namespace mbda {

// Truncated-normal tissue parameters for one class.
struct ClassDistribution {
  double adc_mean, adc_sd;
  double akc_mean, akc_sd;
  double s0_mean, s0_sd;
};

struct PhantomConfig {
  std::size_t width = 32;
  std::size_t height = 32;

  // Lesion ellipse: center sampled uniformly in [min, max] (pixel units),
  // semi-axes in [axis_min, axis_max], random orientation.
  double lesion_center_min_x = 12.0, lesion_center_max_x = 20.0;
  double lesion_center_min_y = 14.0, lesion_center_max_y = 20.0;
  double lesion_axis_min = 2.5, lesion_axis_max = 5.5;

  // Fat region: axis-aligned rectangle [x0, x1) x [y0, y1).
  std::size_t fat_x0 = 0, fat_x1 = 32, fat_y0 = 0, fat_y1 = 4;
  // Fat background level theta, sampled per case and rounded to float.
  double fat_level_mean = 60.0, fat_level_sd = 10.0;

  // Surrounding parenchyma.
  DkiParams parenchyma{300.0, 2.2e-3, 0.3, 0.0};

  std::vector<double> protocol{0.0, 100.0, 750.0, 1500.0};
  // Rician noise standard deviation as a fraction of the mean class s0.
  double noise_sigma = 0.02;
  double empty_lesion_fraction = 23.0 / 221.0;

  ClassDistribution benign{1.8e-3, 0.2e-3, 0.6, 0.15, 800.0, 100.0};
  ClassDistribution malignant{1.0e-3, 0.15e-3, 1.2, 0.2, 800.0, 100.0};

  // Bounds used for truncated sampling.
  FitConfig bounds;

  std::uint64_t seed = 1;

  // Throws ValidationError / GeometryError.
  void validate() const;
};

// Counter-based seeding: the RNG for (seed, stream) is independent of any
// other stream and of generation order.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream);

// sqrt((signal + n1)^2 + n2^2) with n1, n2 ~ N(0, sigma^2).
double rician_noise(double signal, double sigma, std::mt19937_64& rng);

// Sampled ground truth of a generated case.
struct PhantomTruth {
  DkiParams tissue;  // theta holds the rendered fat level
  bool empty_lesion = false;
};

LabeledCase generate_case(const PhantomConfig& config, Label label, std::mt19937_64& rng,
                          const std::string& id = "case", PhantomTruth* truth = nullptr);

// Benign cases first, then malignant; ids "case-0000", ... Empty-lesion cases
// are drawn from the benign quota only.
std::vector<LabeledCase> generate_dataset(const PhantomConfig& config, std::size_t n_benign,
                                          std::size_t n_malignant,
                                          std::vector<PhantomTruth>* truths = nullptr);

}  // namespace mbda
