#include "core/adapt.hpp"

#include "core/error.hpp"
#include "core/parallel.hpp"

namespace mbda {

namespace {

nlohmann::json values_of(const std::vector<BValue>& b) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& v : b) out.push_back(v.value());
  return out;
}

}  // namespace

nlohmann::json AdaptationReport::to_json() const {
  return {{"kept", values_of(kept)}, {"derived", values_of(derived)},
          {"dropped", values_of(dropped)}};
}

std::vector<ImagePlane> restore_channels(const DwiStack& stack,
                                         std::span<const BValue> targets,
                                         const FitConfig& config, int threads) {
  config.validate();
  if (stack.protocol().size() < 3 && !config.constrain_akc_zero) {
    fail(ErrorCode::kUnderDetermined,
         "restore: a two-b-value stack requires constrain_akc_zero");
  }
  const auto w = stack.width();
  const auto h = stack.height();
  std::vector<ImagePlane> out(targets.size(), ImagePlane(w, h));
  const auto voxels = stack.lesion_mask().indices();
  const auto bvals = stack.protocol().values();
  std::vector<DkiParams> params(voxels.size());
  parallel_for(voxels.size(), threads, [&](std::size_t k) {
    std::vector<Sample> samples(bvals.size());
    for (std::size_t i = 0; i < bvals.size(); ++i) {
      samples[i] = Sample{bvals[i], static_cast<double>(stack.plane(i)[voxels[k]])};
    }
    params[k] = fit_voxel(samples, stack.theta(), config).params;
  });
  for (std::size_t t = 0; t < targets.size(); ++t) {
    for (std::size_t k = 0; k < voxels.size(); ++k) {
      out[t][voxels[k]] = static_cast<float>(forward_signal(params[k], targets[t].value()));
    }
  }
  return out;
}

ImagePlane restore_channel(const DwiStack& stack, BValue target_b, const FitConfig& config,
                           int threads) {
  return std::move(restore_channels(stack, std::span(&target_b, 1), config, threads).front());
}

FitConfig adaptation_fit_config(const FitConfig& config, std::size_t distinct_bvalues) {
  FitConfig effective = config;
  if (distinct_bvalues == 2) effective.constrain_akc_zero = true;
  return effective;
}

AdaptedStack adapt_stack(const DwiStack& inference, const Protocol& training,
                         const FitConfig& config, int threads) {
  AdaptationReport report;
  for (const auto& b : training.bvalues()) {
    (inference.protocol().contains(b) ? report.kept : report.derived).push_back(b);
  }
  for (const auto& b : inference.protocol().bvalues()) {
    if (!training.contains(b)) report.dropped.push_back(b);
  }

  std::vector<ImagePlane> restored;
  if (!report.derived.empty()) {
    restored = restore_channels(inference, report.derived,
                                adaptation_fit_config(config, inference.protocol().size()),
                                threads);
  }
  std::vector<ImagePlane> planes;
  planes.reserve(training.size());
  std::size_t next_derived = 0;
  for (const auto& b : training.bvalues()) {
    if (inference.protocol().contains(b)) {
      planes.push_back(inference.plane_at(b));
    } else {
      planes.push_back(std::move(restored[next_derived++]));
    }
  }
  DwiStack out(training, std::move(planes), inference.lesion_mask(), inference.fat_mask());
  return AdaptedStack{std::move(out), std::move(report)};
}

}  // namespace mbda
