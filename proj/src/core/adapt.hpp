#pragma once

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/dki.hpp"
#include "core/dwi.hpp"

namespace mbda {

// How each training-protocol channel was produced by adapt_stack.
struct AdaptationReport {
  std::vector<BValue> kept;     // measured and passed through bit-identically
  std::vector<BValue> derived;  // synthesized from the per-voxel model fit
  std::vector<BValue> dropped;  // measured but not part of the training protocol

  nlohmann::json to_json() const;
};

// Fits the model to every lesion voxel using all planes of the stack and
// evaluates it at target_b. Never copies a measured plane. Zero outside the
// lesion mask.
ImagePlane restore_channel(const DwiStack& stack, BValue target_b, const FitConfig& config,
                           int threads = 1);

// Same as restore_channel for several targets, sharing one fit per voxel.
std::vector<ImagePlane> restore_channels(const DwiStack& stack,
                                         std::span<const BValue> targets,
                                         const FitConfig& config, int threads = 1);

// Forces constrain_akc_zero when only two distinct b-values are available.
FitConfig adaptation_fit_config(const FitConfig& config, std::size_t distinct_bvalues);

struct AdaptedStack {
  DwiStack stack;
  AdaptationReport report;
};

// Rebuilds the training protocol's channels from an inference stack: shared
// b-values pass through, missing ones are restored from a fit to all measured
// b-values. The fat-calibration level comes from the inference stack.
AdaptedStack adapt_stack(const DwiStack& inference, const Protocol& training,
                         const FitConfig& config, int threads = 1);

}  // namespace mbda
