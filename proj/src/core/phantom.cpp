#include "core/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "core/error.hpp"

namespace mbda {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double truncated_normal(double mean, double sd, double lo, double hi, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  double v = mean;
  for (int attempt = 0; attempt < 100; ++attempt) {
    v = mean + sd * normal(rng);
    if (v >= lo && v <= hi) return v;
  }
  return std::clamp(v, lo, hi);
}

}  // namespace

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed ^ (stream * 0xD1B54A32D192ED03ULL);
  std::seed_seq seq{splitmix64(state), splitmix64(state), splitmix64(state),
                    splitmix64(state)};
  return std::mt19937_64(seq);
}

double rician_noise(double signal, double sigma, std::mt19937_64& rng) {
  if (sigma == 0.0) return signal;
  std::normal_distribution<double> normal(0.0, sigma);
  const double re = signal + normal(rng);
  const double im = normal(rng);
  return std::sqrt(re * re + im * im);
}

void PhantomConfig::validate() const {
  if (width == 0 || height == 0) fail(ErrorCode::kValidationError, "phantom: empty image");
  Protocol::from_values(protocol);
  bounds.validate();
  if (noise_sigma < 0.0) fail(ErrorCode::kValidationError, "phantom: noise_sigma must be >= 0");
  if (empty_lesion_fraction < 0.0 || empty_lesion_fraction > 1.0) {
    fail(ErrorCode::kValidationError, "phantom: empty_lesion_fraction must be in [0, 1]");
  }
  for (const auto* d : {&benign, &malignant}) {
    if (d->adc_sd < 0 || d->akc_sd < 0 || d->s0_sd < 0) {
      fail(ErrorCode::kValidationError, "phantom: standard deviations must be >= 0");
    }
    if (d->adc_mean < bounds.adc_min || d->adc_mean > bounds.adc_max ||
        d->akc_mean < 0.0 || d->akc_mean > bounds.akc_max || d->s0_mean <= 0.0) {
      fail(ErrorCode::kValidationError, "phantom: class means must lie inside the fit bounds");
    }
  }
  if (fat_level_mean < 0.0 || fat_level_sd < 0.0) {
    fail(ErrorCode::kValidationError, "phantom: fat level must be >= 0");
  }
  if (lesion_axis_min < 0.5 || lesion_axis_max < lesion_axis_min ||
      lesion_center_max_x < lesion_center_min_x || lesion_center_max_y < lesion_center_min_y) {
    fail(ErrorCode::kGeometryError, "phantom: invalid lesion geometry ranges");
  }
  const double lx0 = lesion_center_min_x - lesion_axis_max;
  const double lx1 = lesion_center_max_x + lesion_axis_max;
  const double ly0 = lesion_center_min_y - lesion_axis_max;
  const double ly1 = lesion_center_max_y + lesion_axis_max;
  if (lx0 < 0.0 || ly0 < 0.0 || lx1 > static_cast<double>(width) - 1.0 ||
      ly1 > static_cast<double>(height) - 1.0) {
    fail(ErrorCode::kGeometryError, "phantom: lesion ellipse does not fit inside the image");
  }
  if (fat_x0 >= fat_x1 || fat_y0 >= fat_y1 || fat_x1 > width || fat_y1 > height) {
    fail(ErrorCode::kGeometryError, "phantom: fat rectangle outside the image");
  }
  const bool overlap_x = lx0 < static_cast<double>(fat_x1) && static_cast<double>(fat_x0) <= lx1;
  const bool overlap_y = ly0 < static_cast<double>(fat_y1) && static_cast<double>(fat_y0) <= ly1;
  if (overlap_x && overlap_y) {
    fail(ErrorCode::kGeometryError, "phantom: lesion and fat regions may overlap");
  }
}

namespace {

LabeledCase render_case(const PhantomConfig& config, Label label, bool allow_empty,
                        std::mt19937_64& rng, const std::string& id, PhantomTruth* truth) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool empty = allow_empty && unit(rng) < config.empty_lesion_fraction;
  if (empty) label = Label::kBenign;

  const double theta = static_cast<float>(truncated_normal(
      config.fat_level_mean, config.fat_level_sd, 0.0, 1e30, rng));
  const auto& dist = label == Label::kMalignant ? config.malignant : config.benign;
  DkiParams tissue;
  tissue.adc = truncated_normal(dist.adc_mean, dist.adc_sd, config.bounds.adc_min,
                                config.bounds.adc_max, rng);
  tissue.akc = truncated_normal(dist.akc_mean, dist.akc_sd, 0.0, config.bounds.akc_max, rng);
  tissue.s0 = truncated_normal(dist.s0_mean, dist.s0_sd, 1e-6 * dist.s0_mean, 1e30, rng);
  tissue.theta = theta;

  const double cx = config.lesion_center_min_x +
                    unit(rng) * (config.lesion_center_max_x - config.lesion_center_min_x);
  const double cy = config.lesion_center_min_y +
                    unit(rng) * (config.lesion_center_max_y - config.lesion_center_min_y);
  const double ax = config.lesion_axis_min +
                    unit(rng) * (config.lesion_axis_max - config.lesion_axis_min);
  const double ay = config.lesion_axis_min +
                    unit(rng) * (config.lesion_axis_max - config.lesion_axis_min);
  const double angle = unit(rng) * std::numbers::pi;

  const auto w = config.width;
  const auto h = config.height;
  Mask lesion(w, h), fat(w, h);
  if (!empty) {
    const double c = std::cos(angle), s = std::sin(angle);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double dx = static_cast<double>(x) - cx;
        const double dy = static_cast<double>(y) - cy;
        const double u = (c * dx + s * dy) / ax;
        const double v = (-s * dx + c * dy) / ay;
        if (u * u + v * v <= 1.0) lesion.set(x, y, true);
      }
    }
    if (lesion.empty()) {
      const auto px = static_cast<std::size_t>(std::lround(cx));
      const auto py = static_cast<std::size_t>(std::lround(cy));
      lesion.set(px, py, true);
    }
  }
  for (std::size_t y = config.fat_y0; y < config.fat_y1; ++y) {
    for (std::size_t x = config.fat_x0; x < config.fat_x1; ++x) fat.set(x, y, true);
  }
  for (std::size_t i = 0; i < lesion.size(); ++i) {
    if (lesion[i] && fat[i]) fail(ErrorCode::kGeometryError, "phantom: lesion overlaps fat");
  }

  DkiParams parenchyma = config.parenchyma;
  parenchyma.theta = theta;
  const double sigma =
      config.noise_sigma * 0.5 * (config.benign.s0_mean + config.malignant.s0_mean);
  std::vector<ImagePlane> planes;
  for (double b : config.protocol) {
    ImagePlane plane(w, h);
    const auto lesion_signal = static_cast<float>(forward_signal(tissue, b));
    const auto tissue_signal = static_cast<float>(forward_signal(parenchyma, b));
    for (std::size_t i = 0; i < plane.size(); ++i) {
      double v = lesion[i] ? lesion_signal : fat[i] ? static_cast<float>(theta) : tissue_signal;
      if (sigma > 0.0) v = rician_noise(v, sigma, rng);
      plane[i] = static_cast<float>(v);
    }
    planes.push_back(std::move(plane));
  }

  if (truth) *truth = PhantomTruth{tissue, empty};
  DwiStack stack(Protocol::from_values(config.protocol), std::move(planes), std::move(lesion),
                 std::move(fat));
  return LabeledCase{id, std::move(stack), label};
}

}  // namespace

LabeledCase generate_case(const PhantomConfig& config, Label label, std::mt19937_64& rng,
                          const std::string& id, PhantomTruth* truth) {
  config.validate();
  return render_case(config, label, true, rng, id, truth);
}

std::vector<LabeledCase> generate_dataset(const PhantomConfig& config, std::size_t n_benign,
                                          std::size_t n_malignant,
                                          std::vector<PhantomTruth>* truths) {
  config.validate();
  std::vector<LabeledCase> cases;
  const std::size_t n = n_benign + n_malignant;
  cases.reserve(n);
  if (truths) truths->assign(n, PhantomTruth{});
  for (std::size_t i = 0; i < n; ++i) {
    const Label label = i < n_benign ? Label::kBenign : Label::kMalignant;
    auto rng = make_rng(config.seed, i);
    char id[32];
    std::snprintf(id, sizeof id, "case-%04zu", i);
    cases.push_back(render_case(config, label, label == Label::kBenign, rng, id,
                                truths ? &(*truths)[i] : nullptr));
  }
  return cases;
}

}  // namespace mbda
