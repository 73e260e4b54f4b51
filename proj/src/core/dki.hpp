#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "core/dwi.hpp"

namespace mbda {

// Kurtosis signal model parameters. adc in mm^2/s, akc dimensionless, s0 and
// theta in signal units. theta is the fixed fat background level.
struct DkiParams {
  double s0 = 1.0;
  double adc = 1e-3;
  double akc = 0.0;
  double theta = 0.0;
};

struct FitConfig {
  double adc_min = 1e-6;
  double adc_max = 5e-3;
  double akc_max = 3.0;
  // Upper bound on s0 as a multiple of the largest measured signal.
  double s0_max_factor = 10.0;
  int max_iterations = 200;
  double cost_tolerance = 1e-12;
  double param_tolerance = 1e-10;
  bool constrain_akc_zero = false;
  double damping_init = 1e-3;

  // Throws ValidationError.
  void validate() const;
};

struct FitResult {
  DkiParams params;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct Sample {
  double b;
  double signal;
};

// S(b) = sqrt(theta^2 + (s0 * exp(-b*adc + b^2*adc^2*akc/6))^2)
double forward_signal(const DkiParams& p, double b);

// Partial derivatives of forward_signal with respect to (s0, adc, akc).
std::array<double, 3> forward_jacobian(const DkiParams& p, double b);

// Bounded Levenberg-Marquardt fit of (s0, adc, akc) with theta held fixed.
// Samples are sorted internally so the result does not depend on their order.
FitResult fit_voxel(std::span<const Sample> samples, double theta, const FitConfig& config);

// Per-voxel coefficient maps; zero outside the mask.
struct ParameterMaps {
  ImagePlane adc_map;
  ImagePlane akc_map;
  ImagePlane s0_map;
  Mask mask;
};

// Fits every lesion voxel of the stack using stack.theta(). threads <= 1
// runs sequentially; results are identical for any thread count.
ParameterMaps fit_roi(const DwiStack& stack, const FitConfig& config, int threads = 1);

struct RoiCoefficients {
  double adc_mean;
  double akc_mean;
};

// Throws EmptyMask.
RoiCoefficients roi_mean_coefficients(const ParameterMaps& maps);

inline constexpr double kDefaultThresholdWidth = 0.2e-3;

// Logistic malignancy score, decreasing in adc_mean; 0.5 at the threshold.
double threshold_classify(double adc_mean, double threshold,
                          double width = kDefaultThresholdWidth);

void save_parameter_maps(const ParameterMaps& maps, const std::filesystem::path& dir,
                         const nlohmann::json& provenance);
ParameterMaps load_parameter_maps(const std::filesystem::path& dir);

}  // namespace mbda
