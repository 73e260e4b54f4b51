#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/dki.hpp"
#include "core/dwi.hpp"

namespace mbda {

enum class Pooling { kAverage, kMax };

// E2E: per-pixel 1x1 channel mixing ("exploit") stage, then 3x3 feature
// stage, masked global pooling, affine 2-class head, softmax.
// F2E: the exploit stage is absent and the input is the (ADC, AKC) map pair.
struct ArchitectureConfig {
  int input_channels = 4;
  std::vector<int> exploit_widths{8, 4};
  std::vector<int> feature_widths{16, 16};
  Pooling pooling = Pooling::kAverage;

  static ArchitectureConfig e2e(int channels);
  static ArchitectureConfig f2e();

  bool is_f2e() const noexcept { return exploit_widths.empty(); }
  // Throws ValidationError.
  void validate() const;

  friend bool operator==(const ArchitectureConfig&, const ArchitectureConfig&) = default;
};

nlohmann::json to_json(const ArchitectureConfig& arch);
ArchitectureConfig architecture_from_json(const nlohmann::json& j);

// Offsets of one layer's kernel and bias inside the flat parameter vector.
struct LayerSlice {
  std::string name;
  int in = 0;
  int out = 0;
  int taps = 1;  // 1 for 1x1 and dense, 9 for 3x3
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;

  std::size_t weight_count() const { return static_cast<std::size_t>(in) * out * taps; }
};

std::vector<LayerSlice> parameter_layout(const ArchitectureConfig& arch);

struct TrainingInfo {
  std::uint64_t seed = 0;
  int epochs_run = 0;
  int selected_epoch = 0;
  double selected_validation_error = 1.0;
  // Training b-values; empty when unknown.
  std::vector<double> protocol;
  bool akc_constrained = false;
};

struct Network {
  ArchitectureConfig arch;
  std::vector<double> params;
  TrainingInfo info;

  static Network initialize(const ArchitectureConfig& arch, std::uint64_t seed);
};

// Channel-major (c, y, x) image with its lesion mask.
struct NetInput {
  std::size_t width = 0;
  std::size_t height = 0;
  int channels = 0;
  std::vector<double> data;
  Mask mask{1, 1};

  double at(int c, std::size_t x, std::size_t y) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
};

// E2E input from the stack's planes (in protocol order), divided by the
// lesion mean of the theta-corrected b0 magnitude. Empty masks are left
// unnormalized.
NetInput make_e2e_input(const DwiStack& stack);
// Same normalization, channels taken from `planes` (slot order).
NetInput make_e2e_input(std::span<const ImagePlane> planes, const DwiStack& reference);
// F2E input: ADC in um^2/ms (mm^2/s * 1000) and AKC.
NetInput make_f2e_input(const ParameterMaps& maps);

// Malignant-class probability. Throws ShapeMismatch / EmptyMask.
double forward(const Network& net, const NetInput& input);
std::array<double, 2> forward_probabilities(const Network& net, const NetInput& input);

// Cross-entropy loss of one sample; adds d(loss)/d(params) into grad.
double loss_and_gradient(const Network& net, const NetInput& input, Label label,
                         std::vector<double>& grad);
double loss(const Network& net, const NetInput& input, Label label);

using ScoreFn = std::function<double(const NetInput&)>;

// Empty lesion masks score 0.0 (benign) without evaluating the model.
double predict_case(const ScoreFn& model, const NetInput& input);
double predict_case(const Network& net, const NetInput& input);
double predict_case(const Network& net, const DwiStack& stack);
double predict_case(const Network& net, const ParameterMaps& maps);

// Central finite-difference derivative of the loss for one parameter.
double finite_difference_gradient(const Network& net, const NetInput& input, Label label,
                                  std::size_t param_index, double step);

// Max relative error between analytic and finite-difference gradients over
// up to `per_layer` random parameters of every layer.
double backward_check(const Network& net, const NetInput& input, Label label,
                      std::mt19937_64& rng, std::size_t per_layer = 50);

void save_network(const Network& net, const std::filesystem::path& file);
Network load_network(const std::filesystem::path& file);

}  // namespace mbda
