#include "core/dki.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "core/error.hpp"
#include "core/parallel.hpp"

namespace mbda {

namespace {

constexpr double kEps = 1e-12;

double exponent(const DkiParams& p, double b) {
  return -b * p.adc + b * b * p.adc * p.adc * p.akc / 6.0;
}

}  // namespace

void FitConfig::validate() const {
  if (!(adc_min > 0.0 && adc_min < adc_max)) {
    fail(ErrorCode::kValidationError, "fit: require 0 < adc_min < adc_max");
  }
  if (!(akc_max > 0.0)) fail(ErrorCode::kValidationError, "fit: akc_max must be > 0");
  if (!(s0_max_factor > 1.0)) fail(ErrorCode::kValidationError, "fit: s0_max_factor must be > 1");
  if (max_iterations < 0) fail(ErrorCode::kValidationError, "fit: max_iterations must be >= 0");
  if (!(cost_tolerance > 0.0 && param_tolerance > 0.0)) {
    fail(ErrorCode::kValidationError, "fit: tolerances must be > 0");
  }
  if (!(damping_init > 0.0)) fail(ErrorCode::kValidationError, "fit: damping_init must be > 0");
}

double forward_signal(const DkiParams& p, double b) {
  const double m = p.s0 * std::exp(exponent(p, b));
  return std::sqrt(p.theta * p.theta + m * m);
}

std::array<double, 3> forward_jacobian(const DkiParams& p, double b) {
  const double e = std::exp(exponent(p, b));
  const double m = p.s0 * e;
  const double s = std::sqrt(p.theta * p.theta + m * m);
  const double ds_dm = s > 0.0 ? m / s : 1.0;
  return {ds_dm * e,
          ds_dm * m * (-b + b * b * p.adc * p.akc / 3.0),
          ds_dm * m * (b * b * p.adc * p.adc / 6.0)};
}

namespace {

struct Bounds {
  std::array<double, 3> lo;
  std::array<double, 3> hi;

  std::array<double, 3> project(std::array<double, 3> x) const {
    for (int i = 0; i < 3; ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
    return x;
  }
};

double corrected_magnitude(double signal, double theta) {
  return std::sqrt(std::max(signal * signal - theta * theta, kEps));
}

DkiParams to_params(const std::array<double, 3>& x, double theta) {
  return DkiParams{x[0], x[1], x[2], theta};
}

double half_cost(std::span<const Sample> samples, const DkiParams& p) {
  double c = 0.0;
  for (const auto& s : samples) {
    const double r = forward_signal(p, s.b) - s.signal;
    c += r * r;
  }
  return 0.5 * c;
}

}  // namespace

FitResult fit_voxel(std::span<const Sample> input, double theta, const FitConfig& config) {
  std::vector<Sample> samples(input.begin(), input.end());
  std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) {
    return a.b < b.b || (a.b == b.b && a.signal < b.signal);
  });
  for (const auto& s : samples) {
    if (!std::isfinite(s.b) || s.b < 0.0 || !std::isfinite(s.signal)) {
      fail(ErrorCode::kDegenerateInput, "fit: samples must be finite with b >= 0");
    }
  }
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i == 0 || samples[i].b != samples[i - 1].b) ++distinct;
  }
  if (distinct < 2) {
    fail(ErrorCode::kDegenerateInput, "fit: need at least two distinct b-values");
  }
  if (distinct < 3 && !config.constrain_akc_zero) {
    fail(ErrorCode::kUnderDetermined,
         "fit: three free parameters need at least three distinct b-values");
  }

  double max_signal = 0.0;
  double signal_scale = 0.0;
  for (const auto& s : samples) {
    max_signal = std::max(max_signal, std::abs(s.signal));
    signal_scale += s.signal * s.signal;
  }
  if (max_signal == 0.0) {
    FitResult degenerate;
    degenerate.params = DkiParams{kEps, config.adc_min, 0.0, theta};
    degenerate.residual_norm = 0.0;
    degenerate.iterations = 0;
    degenerate.converged = true;
    return degenerate;
  }

  const bool fixed_akc = config.constrain_akc_zero;
  const Bounds bounds{{kEps, config.adc_min, 0.0},
                      {config.s0_max_factor * max_signal, config.adc_max,
                       fixed_akc ? 0.0 : config.akc_max}};

  // Closed-form warm start.
  std::vector<std::pair<double, double>> by_b;  // (b, mean corrected magnitude)
  for (std::size_t i = 0; i < samples.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < samples.size() && samples[j].b == samples[i].b) sum += samples[j++].signal;
    by_b.emplace_back(samples[i].b,
                      corrected_magnitude(sum / static_cast<double>(j - i), theta));
    i = j;
  }
  std::size_t first = by_b.front().first > 0.0 ? 0 : 1;
  std::size_t lo = first, hi = first + 1;
  if (hi >= by_b.size()) {
    lo = 0;
    hi = 1;
  }
  double adc0 = std::log(by_b[lo].second / by_b[hi].second) / (by_b[hi].first - by_b[lo].first);
  if (!std::isfinite(adc0)) adc0 = 1e-3;
  adc0 = std::clamp(adc0, config.adc_min, config.adc_max);
  const double s00 = by_b.front().second * std::exp(by_b.front().first * adc0);
  std::array<double, 3> x = bounds.project({s00, adc0, fixed_akc ? 0.0 : 0.5});

  const double floor_cost = 0.5 * 1e-28 * signal_scale;
  double cost = half_cost(samples, to_params(x, theta));
  double lambda = config.damping_init;
  FitResult result;
  int it = 0;
  bool converged = cost <= floor_cost;

  while (!converged && it < config.max_iterations) {
    ++it;
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
    const DkiParams p = to_params(x, theta);
    for (const auto& s : samples) {
      const auto g = forward_jacobian(p, s.b);
      Eigen::Vector3d row(g[0], g[1], fixed_akc ? 0.0 : g[2]);
      const double r = forward_signal(p, s.b) - s.signal;
      jtj += row * row.transpose();
      jtr += row * r;
    }
    if (fixed_akc) {
      jtj(2, 2) = 1.0;
      jtr(2) = 0.0;
    }
    bool accepted = false;
    while (!accepted) {
      Eigen::Matrix3d a = jtj;
      for (int i = 0; i < 3; ++i) {
        a(i, i) += lambda * std::max(jtj(i, i), 1e-300);
      }
      const Eigen::Vector3d step = a.ldlt().solve(-jtr);
      std::array<double, 3> trial = x;
      bool finite = true;
      for (int i = 0; i < 3; ++i) {
        trial[i] += step(i);
        finite = finite && std::isfinite(trial[i]);
      }
      trial = bounds.project(trial);
      const double trial_cost = finite ? half_cost(samples, to_params(trial, theta))
                                       : std::numeric_limits<double>::infinity();
      if (trial_cost < cost) {
        double rel_step = 0.0;
        for (int i = 0; i < 3; ++i) {
          const double ref = std::max(std::abs(x[i]), bounds.hi[i] * 1e-6);
          if (ref > 0.0) rel_step = std::max(rel_step, std::abs(trial[i] - x[i]) / ref);
        }
        const double rel_decrease = (cost - trial_cost) / cost;
        x = trial;
        cost = trial_cost;
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        if (cost <= floor_cost || rel_decrease < config.cost_tolerance ||
            rel_step < config.param_tolerance) {
          converged = true;
        }
      } else {
        lambda *= 10.0;
        if (lambda > 1e16) {
          // No descent direction left at working precision.
          converged = true;
          break;
        }
      }
    }
  }

  result.params = to_params(x, theta);
  result.residual_norm = std::sqrt(2.0 * cost);
  result.iterations = it;
  result.converged = converged;
  return result;
}

ParameterMaps fit_roi(const DwiStack& stack, const FitConfig& config, int threads) {
  config.validate();
  if (stack.protocol().size() < 3 && !config.constrain_akc_zero) {
    fail(ErrorCode::kUnderDetermined,
         "fit_roi: protocol " + format_protocol(stack.protocol()) +
             " needs constrain_akc_zero");
  }
  const auto w = stack.width();
  const auto h = stack.height();
  ParameterMaps maps{ImagePlane(w, h), ImagePlane(w, h), ImagePlane(w, h), stack.lesion_mask()};
  const auto voxels = stack.lesion_mask().indices();
  const auto bvals = stack.protocol().values();
  std::vector<FitResult> fits(voxels.size());
  parallel_for(voxels.size(), threads, [&](std::size_t k) {
    std::vector<Sample> samples(bvals.size());
    for (std::size_t i = 0; i < bvals.size(); ++i) {
      samples[i] = Sample{bvals[i], static_cast<double>(stack.plane(i)[voxels[k]])};
    }
    fits[k] = fit_voxel(samples, stack.theta(), config);
  });
  for (std::size_t k = 0; k < voxels.size(); ++k) {
    const auto& p = fits[k].params;
    maps.adc_map[voxels[k]] = static_cast<float>(p.adc);
    maps.akc_map[voxels[k]] = static_cast<float>(p.akc);
    maps.s0_map[voxels[k]] = static_cast<float>(p.s0);
  }
  return maps;
}

RoiCoefficients roi_mean_coefficients(const ParameterMaps& maps) {
  double adc = 0.0, akc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < maps.mask.size(); ++i) {
    if (!maps.mask[i]) continue;
    adc += maps.adc_map[i];
    akc += maps.akc_map[i];
    ++n;
  }
  if (n == 0) fail(ErrorCode::kEmptyMask, "roi_mean_coefficients: mask is empty");
  return {adc / static_cast<double>(n), akc / static_cast<double>(n)};
}

double threshold_classify(double adc_mean, double threshold, double width) {
  return 1.0 / (1.0 + std::exp((adc_mean - threshold) / width));
}

void save_parameter_maps(const ParameterMaps& maps, const std::filesystem::path& dir,
                         const nlohmann::json& provenance) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIoError, "cannot create " + dir.string());
  write_plane_file(maps.adc_map, dir / "adc.f32");
  write_plane_file(maps.akc_map, dir / "akc.f32");
  write_plane_file(maps.s0_map, dir / "s0.f32");
  write_mask_file(maps.mask, dir / "mask.u8");
  nlohmann::json m = {
      {"format", "mbda-maps"},
      {"version", 1},
      {"width", maps.mask.width()},
      {"height", maps.mask.height()},
      {"maps", {{"adc", "adc.f32"}, {"akc", "akc.f32"}, {"s0", "s0.f32"}}},
      {"mask", "mask.u8"},
      {"provenance", provenance},
  };
  write_text_file(dir / "maps.json", m.dump(2) + "\n");
}

ParameterMaps load_parameter_maps(const std::filesystem::path& dir) {
  const auto m = read_json_file(dir / "maps.json");
  if (m.value("format", "") != "mbda-maps") {
    fail(ErrorCode::kFormatError, (dir / "maps.json").string() + ": not an mbda-maps manifest");
  }
  const auto w = m.at("width").get<std::size_t>();
  const auto h = m.at("height").get<std::size_t>();
  const auto& names = m.at("maps");
  return ParameterMaps{read_plane_file(dir / names.at("adc").get<std::string>(), w, h),
                       read_plane_file(dir / names.at("akc").get<std::string>(), w, h),
                       read_plane_file(dir / names.at("s0").get<std::string>(), w, h),
                       read_mask_file(dir / m.at("mask").get<std::string>(), w, h)};
}

}  // namespace mbda
