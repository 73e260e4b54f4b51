#include "core/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include "core/error.hpp"
#include "core/phantom.hpp"

namespace mbda {

ArchitectureConfig ArchitectureConfig::e2e(int channels) {
  ArchitectureConfig a;
  a.input_channels = channels;
  return a;
}

ArchitectureConfig ArchitectureConfig::f2e() {
  ArchitectureConfig a;
  a.input_channels = 2;
  a.exploit_widths.clear();
  return a;
}

void ArchitectureConfig::validate() const {
  if (input_channels < 1) fail(ErrorCode::kValidationError, "network: input_channels < 1");
  if (feature_widths.empty()) fail(ErrorCode::kValidationError, "network: no feature layers");
  if (exploit_widths.empty() && input_channels != 2) {
    fail(ErrorCode::kValidationError, "network: F2E input must be the (ADC, AKC) pair");
  }
  for (int w : exploit_widths) {
    if (w < 1) fail(ErrorCode::kValidationError, "network: layer widths must be >= 1");
  }
  for (int w : feature_widths) {
    if (w < 1) fail(ErrorCode::kValidationError, "network: layer widths must be >= 1");
  }
}

nlohmann::json to_json(const ArchitectureConfig& arch) {
  return {{"input_channels", arch.input_channels},
          {"exploit_widths", arch.exploit_widths},
          {"feature_widths", arch.feature_widths},
          {"pooling", arch.pooling == Pooling::kMax ? "max" : "average"}};
}

ArchitectureConfig architecture_from_json(const nlohmann::json& j) {
  ArchitectureConfig a;
  a.input_channels = j.value("input_channels", a.input_channels);
  a.exploit_widths = j.value("exploit_widths", a.exploit_widths);
  a.feature_widths = j.value("feature_widths", a.feature_widths);
  const auto pooling = j.value("pooling", std::string("average"));
  if (pooling == "max") {
    a.pooling = Pooling::kMax;
  } else if (pooling == "average") {
    a.pooling = Pooling::kAverage;
  } else {
    fail(ErrorCode::kValidationError, "network: unknown pooling '" + pooling + "'");
  }
  a.validate();
  return a;
}

std::vector<LayerSlice> parameter_layout(const ArchitectureConfig& arch) {
  std::vector<LayerSlice> layers;
  std::size_t offset = 0;
  int in = arch.input_channels;
  auto add = [&](std::string name, int out, int taps) {
    LayerSlice s{std::move(name), in, out, taps, offset, 0};
    offset += s.weight_count();
    s.bias_offset = offset;
    offset += static_cast<std::size_t>(out);
    layers.push_back(std::move(s));
    in = out;
  };
  for (std::size_t i = 0; i < arch.exploit_widths.size(); ++i) {
    add("exploit" + std::to_string(i), arch.exploit_widths[i], 1);
  }
  for (std::size_t i = 0; i < arch.feature_widths.size(); ++i) {
    add("feature" + std::to_string(i), arch.feature_widths[i], 9);
  }
  add("dense", 2, 1);
  return layers;
}

namespace {

std::size_t parameter_count(const std::vector<LayerSlice>& layout) {
  return layout.back().bias_offset + static_cast<std::size_t>(layout.back().out);
}

}  // namespace

Network Network::initialize(const ArchitectureConfig& arch, std::uint64_t seed) {
  arch.validate();
  Network net;
  net.arch = arch;
  const auto layout = parameter_layout(arch);
  net.params.assign(parameter_count(layout), 0.0);
  auto rng = make_rng(seed, 0x1417);
  for (const auto& layer : layout) {
    const double fan_in = static_cast<double>(layer.in * layer.taps);
    const double limit =
        layer.name == "dense" ? std::sqrt(1.0 / fan_in) : std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t k = 0; k < layer.weight_count(); ++k) {
      net.params[layer.weight_offset + k] = dist(rng);
    }
  }
  net.info.seed = seed;
  return net;
}

namespace {

double b0_normalizer(const ImagePlane& b0, const Mask& mask, double theta) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const double s = b0[i];
    sum += std::sqrt(std::max(s * s - theta * theta, 1e-12));
    ++n;
  }
  if (n == 0) return 1.0;
  const double mean = sum / static_cast<double>(n);
  return mean > 0.0 ? mean : 1.0;
}

}  // namespace

NetInput make_e2e_input(std::span<const ImagePlane> planes, const DwiStack& reference) {
  const auto& mask = reference.lesion_mask();
  NetInput in;
  in.width = reference.width();
  in.height = reference.height();
  in.channels = static_cast<int>(planes.size());
  in.mask = mask;
  const double norm = b0_normalizer(reference.plane(0), mask, reference.theta());
  const std::size_t n = in.width * in.height;
  in.data.assign(planes.size() * n, 0.0);
  for (std::size_t c = 0; c < planes.size(); ++c) {
    if (planes[c].width() != in.width || planes[c].height() != in.height) {
      fail(ErrorCode::kShapeMismatch, "network input planes differ in size");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (mask[i]) in.data[c * n + i] = planes[c][i] / norm;
    }
  }
  return in;
}

NetInput make_e2e_input(const DwiStack& stack) {
  return make_e2e_input(stack.planes(), stack);
}

NetInput make_f2e_input(const ParameterMaps& maps) {
  NetInput in;
  in.width = maps.mask.width();
  in.height = maps.mask.height();
  in.channels = 2;
  in.mask = maps.mask;
  const std::size_t n = in.width * in.height;
  in.data.assign(2 * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!maps.mask[i]) continue;
    in.data[i] = 1000.0 * maps.adc_map[i];
    in.data[n + i] = maps.akc_map[i];
  }
  return in;
}

namespace {

// Evaluation state for one sample. Everything lives on a crop of the image
// around the lesion; feature layer l is only evaluated on the mask dilated
// (L - 1 - l) times, which is all that masked pooling can reach.
struct Workspace {
  std::size_t x0 = 0, y0 = 0, cw = 0, ch = 0;
  std::vector<std::size_t> mask_px;
  std::vector<std::vector<std::size_t>> active;  // per feature layer
  std::vector<std::vector<double>> acts;         // [0] = masked input
  std::vector<double> pooled;
  std::vector<std::size_t> argmax;
  std::array<double, 2> probs{};

  std::size_t n() const { return cw * ch; }
};

void check_shapes(const Network& net, const std::vector<LayerSlice>& layout,
                  const NetInput& input) {
  if (net.params.size() != parameter_count(layout)) {
    fail(ErrorCode::kShapeMismatch, "network parameters do not match the architecture");
  }
  if (input.channels != net.arch.input_channels) {
    fail(ErrorCode::kShapeMismatch, "input has " + std::to_string(input.channels) +
                                        " channels, network expects " +
                                        std::to_string(net.arch.input_channels));
  }
  if (input.data.size() != static_cast<std::size_t>(input.channels) * input.width * input.height ||
      input.mask.width() != input.width || input.mask.height() != input.height) {
    fail(ErrorCode::kShapeMismatch, "input data does not match its dimensions");
  }
}

void prepare(const NetInput& input, std::size_t feature_layers, Workspace& ws) {
  const auto& mask = input.mask;
  std::size_t bx0 = input.width, by0 = input.height, bx1 = 0, by1 = 0;
  bool any = false;
  for (std::size_t y = 0; y < input.height; ++y) {
    for (std::size_t x = 0; x < input.width; ++x) {
      if (!mask.at(x, y)) continue;
      any = true;
      bx0 = std::min(bx0, x);
      by0 = std::min(by0, y);
      bx1 = std::max(bx1, x);
      by1 = std::max(by1, y);
    }
  }
  if (!any) fail(ErrorCode::kEmptyMask, "network input has an empty lesion mask");
  const std::size_t m = feature_layers;
  ws.x0 = bx0 >= m ? bx0 - m : 0;
  ws.y0 = by0 >= m ? by0 - m : 0;
  const std::size_t x1 = std::min(input.width - 1, bx1 + m);
  const std::size_t y1 = std::min(input.height - 1, by1 + m);
  ws.cw = x1 - ws.x0 + 1;
  ws.ch = y1 - ws.y0 + 1;

  std::vector<std::uint8_t> region(ws.n(), 0);
  ws.mask_px.clear();
  for (std::size_t y = 0; y < ws.ch; ++y) {
    for (std::size_t x = 0; x < ws.cw; ++x) {
      if (mask.at(x + ws.x0, y + ws.y0)) {
        region[y * ws.cw + x] = 1;
        ws.mask_px.push_back(y * ws.cw + x);
      }
    }
  }
  // dilations[k] = mask dilated k times with a 3x3 structuring element.
  std::vector<std::vector<std::size_t>> dilations{ws.mask_px};
  for (std::size_t k = 1; k < m; ++k) {
    std::vector<std::uint8_t> next(region);
    for (std::size_t y = 0; y < ws.ch; ++y) {
      for (std::size_t x = 0; x < ws.cw; ++x) {
        if (!region[y * ws.cw + x]) continue;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const auto yy = static_cast<std::ptrdiff_t>(y) + dy;
            const auto xx = static_cast<std::ptrdiff_t>(x) + dx;
            if (yy < 0 || xx < 0 || yy >= static_cast<std::ptrdiff_t>(ws.ch) ||
                xx >= static_cast<std::ptrdiff_t>(ws.cw)) {
              continue;
            }
            next[static_cast<std::size_t>(yy) * ws.cw + static_cast<std::size_t>(xx)] = 1;
          }
        }
      }
    }
    region.swap(next);
    std::vector<std::size_t> px;
    for (std::size_t i = 0; i < region.size(); ++i) {
      if (region[i]) px.push_back(i);
    }
    dilations.push_back(std::move(px));
  }
  ws.active.assign(m, {});
  for (std::size_t l = 0; l < m; ++l) ws.active[l] = dilations[m - 1 - l];
}

// Gathers the 3x3 neighborhood of crop pixel p from one channel plane.
inline void gather3x3(const double* plane, const Workspace& ws, std::size_t p, double out[9]) {
  const std::size_t py = p / ws.cw;
  const std::size_t px = p % ws.cw;
  int t = 0;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx, ++t) {
      const auto yy = static_cast<std::ptrdiff_t>(py) + dy;
      const auto xx = static_cast<std::ptrdiff_t>(px) + dx;
      if (yy < 0 || xx < 0 || yy >= static_cast<std::ptrdiff_t>(ws.ch) ||
          xx >= static_cast<std::ptrdiff_t>(ws.cw)) {
        out[t] = 0.0;
      } else {
        out[t] = plane[static_cast<std::size_t>(yy) * ws.cw + static_cast<std::size_t>(xx)];
      }
    }
  }
}

void run_forward(const Network& net, const std::vector<LayerSlice>& layout,
                 const NetInput& input, Workspace& ws) {
  check_shapes(net, layout, input);
  const std::size_t n_exploit = net.arch.exploit_widths.size();
  const std::size_t n_feature = net.arch.feature_widths.size();
  prepare(input, n_feature, ws);
  const std::size_t n = ws.n();
  const double* w = net.params.data();

  ws.acts.assign(layout.size(), {});
  auto& x = ws.acts[0];
  x.assign(static_cast<std::size_t>(input.channels) * n, 0.0);
  for (int c = 0; c < input.channels; ++c) {
    for (std::size_t p : ws.mask_px) {
      x[static_cast<std::size_t>(c) * n + p] =
          input.at(c, p % ws.cw + ws.x0, p / ws.cw + ws.y0);
    }
  }

  std::size_t li = 0;
  for (; li < n_exploit; ++li) {
    const auto& L = layout[li];
    const auto& prev = ws.acts[li];
    auto& out = ws.acts[li + 1];
    out.assign(static_cast<std::size_t>(L.out) * n, 0.0);
    for (std::size_t p : ws.mask_px) {
      for (int o = 0; o < L.out; ++o) {
        double z = w[L.bias_offset + o];
        const double* k = w + L.weight_offset + static_cast<std::size_t>(o) * L.in;
        for (int i = 0; i < L.in; ++i) z += k[i] * prev[static_cast<std::size_t>(i) * n + p];
        out[static_cast<std::size_t>(o) * n + p] = z > 0.0 ? z : 0.0;
      }
    }
  }
  std::vector<double> z;
  double nb[9];
  for (std::size_t f = 0; f < n_feature; ++f, ++li) {
    const auto& L = layout[li];
    const auto& prev = ws.acts[li];
    auto& out = ws.acts[li + 1];
    out.assign(static_cast<std::size_t>(L.out) * n, 0.0);
    z.resize(static_cast<std::size_t>(L.out));
    for (std::size_t p : ws.active[f]) {
      for (int o = 0; o < L.out; ++o) z[o] = w[L.bias_offset + o];
      for (int i = 0; i < L.in; ++i) {
        gather3x3(prev.data() + static_cast<std::size_t>(i) * n, ws, p, nb);
        for (int o = 0; o < L.out; ++o) {
          const double* k = w + L.weight_offset + (static_cast<std::size_t>(o) * L.in + i) * 9;
          double acc = 0.0;
          for (int t = 0; t < 9; ++t) acc += k[t] * nb[t];
          z[o] += acc;
        }
      }
      for (int o = 0; o < L.out; ++o) {
        out[static_cast<std::size_t>(o) * n + p] = z[o] > 0.0 ? z[o] : 0.0;
      }
    }
  }

  const auto& last = ws.acts[li];
  const int channels = layout[li].in;
  ws.pooled.assign(static_cast<std::size_t>(channels), 0.0);
  ws.argmax.assign(static_cast<std::size_t>(channels), 0);
  const double inv = 1.0 / static_cast<double>(ws.mask_px.size());
  for (int c = 0; c < channels; ++c) {
    const double* a = last.data() + static_cast<std::size_t>(c) * n;
    if (net.arch.pooling == Pooling::kAverage) {
      double s = 0.0;
      for (std::size_t p : ws.mask_px) s += a[p];
      ws.pooled[c] = s * inv;
    } else {
      double best = a[ws.mask_px.front()];
      std::size_t arg = ws.mask_px.front();
      for (std::size_t p : ws.mask_px) {
        if (a[p] > best) {
          best = a[p];
          arg = p;
        }
      }
      ws.pooled[c] = best;
      ws.argmax[c] = arg;
    }
  }

  const auto& D = layout[li];
  std::array<double, 2> logits{};
  for (int o = 0; o < 2; ++o) {
    double s = w[D.bias_offset + o];
    for (int c = 0; c < channels; ++c) {
      s += w[D.weight_offset + static_cast<std::size_t>(o) * channels + c] * ws.pooled[c];
    }
    logits[o] = s;
  }
  const double mx = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - mx);
  const double e1 = std::exp(logits[1] - mx);
  ws.probs = {e0 / (e0 + e1), e1 / (e0 + e1)};
}

double cross_entropy(const std::array<double, 2>& probs, Label label) {
  const double p = probs[label == Label::kMalignant ? 1 : 0];
  return -std::log(std::max(p, 1e-300));
}

}  // namespace

std::array<double, 2> forward_probabilities(const Network& net, const NetInput& input) {
  Workspace ws;
  run_forward(net, parameter_layout(net.arch), input, ws);
  return ws.probs;
}

double forward(const Network& net, const NetInput& input) {
  return forward_probabilities(net, input)[1];
}

double loss(const Network& net, const NetInput& input, Label label) {
  return cross_entropy(forward_probabilities(net, input), label);
}

double loss_and_gradient(const Network& net, const NetInput& input, Label label,
                         std::vector<double>& grad) {
  const auto layout = parameter_layout(net.arch);
  Workspace ws;
  run_forward(net, layout, input, ws);
  if (grad.size() != net.params.size()) grad.assign(net.params.size(), 0.0);
  const double* w = net.params.data();
  double* g = grad.data();
  const std::size_t n = ws.n();
  const std::size_t n_exploit = net.arch.exploit_widths.size();
  const std::size_t n_feature = net.arch.feature_widths.size();
  const std::size_t head = layout.size() - 1;

  // Softmax + cross-entropy.
  std::array<double, 2> dlogit = ws.probs;
  dlogit[label == Label::kMalignant ? 1 : 0] -= 1.0;
  const auto& D = layout[head];
  const int channels = D.in;
  std::vector<double> dpool(static_cast<std::size_t>(channels), 0.0);
  for (int o = 0; o < 2; ++o) {
    g[D.bias_offset + o] += dlogit[o];
    for (int c = 0; c < channels; ++c) {
      const std::size_t k = D.weight_offset + static_cast<std::size_t>(o) * channels + c;
      g[k] += dlogit[o] * ws.pooled[c];
      dpool[c] += dlogit[o] * w[k];
    }
  }

  // Pooling.
  std::vector<double> dact(static_cast<std::size_t>(channels) * n, 0.0);
  const double inv = 1.0 / static_cast<double>(ws.mask_px.size());
  for (int c = 0; c < channels; ++c) {
    double* d = dact.data() + static_cast<std::size_t>(c) * n;
    if (net.arch.pooling == Pooling::kAverage) {
      for (std::size_t p : ws.mask_px) d[p] = dpool[c] * inv;
    } else {
      d[ws.argmax[c]] = dpool[c];
    }
  }

  // Feature stage.
  double nb[9];
  std::vector<double> dz;
  for (std::size_t f = n_feature; f-- > 0;) {
    const std::size_t li = n_exploit + f;
    const auto& L = layout[li];
    const auto& prev = ws.acts[li];
    const auto& out = ws.acts[li + 1];
    std::vector<double> dprev(static_cast<std::size_t>(L.in) * n, 0.0);
    dz.resize(static_cast<std::size_t>(L.out));
    for (std::size_t p : ws.active[f]) {
      bool any = false;
      for (int o = 0; o < L.out; ++o) {
        const std::size_t idx = static_cast<std::size_t>(o) * n + p;
        dz[o] = out[idx] > 0.0 ? dact[idx] : 0.0;
        any = any || dz[o] != 0.0;
      }
      if (!any) continue;
      for (int o = 0; o < L.out; ++o) g[L.bias_offset + o] += dz[o];
      const std::size_t py = p / ws.cw;
      const std::size_t px = p % ws.cw;
      for (int i = 0; i < L.in; ++i) {
        gather3x3(prev.data() + static_cast<std::size_t>(i) * n, ws, p, nb);
        double back[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
        for (int o = 0; o < L.out; ++o) {
          if (dz[o] == 0.0) continue;
          const std::size_t k = L.weight_offset + (static_cast<std::size_t>(o) * L.in + i) * 9;
          for (int t = 0; t < 9; ++t) {
            g[k + t] += dz[o] * nb[t];
            back[t] += dz[o] * w[k + t];
          }
        }
        if (f == 0 && n_exploit == 0) continue;  // input gradient not needed
        double* dp = dprev.data() + static_cast<std::size_t>(i) * n;
        int t = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx, ++t) {
            const auto yy = static_cast<std::ptrdiff_t>(py) + dy;
            const auto xx = static_cast<std::ptrdiff_t>(px) + dx;
            if (yy < 0 || xx < 0 || yy >= static_cast<std::ptrdiff_t>(ws.ch) ||
                xx >= static_cast<std::ptrdiff_t>(ws.cw)) {
              continue;
            }
            dp[static_cast<std::size_t>(yy) * ws.cw + static_cast<std::size_t>(xx)] += back[t];
          }
        }
      }
    }
    dact.swap(dprev);
  }

  // Exploit stage; its outputs are masked, so only lesion pixels carry gradient.
  for (std::size_t li = n_exploit; li-- > 0;) {
    const auto& L = layout[li];
    const auto& prev = ws.acts[li];
    const auto& out = ws.acts[li + 1];
    std::vector<double> dprev(li > 0 ? static_cast<std::size_t>(L.in) * n : 0, 0.0);
    for (std::size_t p : ws.mask_px) {
      for (int o = 0; o < L.out; ++o) {
        const std::size_t idx = static_cast<std::size_t>(o) * n + p;
        if (!(out[idx] > 0.0)) continue;
        const double d = dact[idx];
        if (d == 0.0) continue;
        g[L.bias_offset + o] += d;
        const std::size_t k = L.weight_offset + static_cast<std::size_t>(o) * L.in;
        for (int i = 0; i < L.in; ++i) {
          g[k + i] += d * prev[static_cast<std::size_t>(i) * n + p];
          if (li > 0) dprev[static_cast<std::size_t>(i) * n + p] += d * w[k + i];
        }
      }
    }
    dact.swap(dprev);
  }
  return cross_entropy(ws.probs, label);
}

double predict_case(const ScoreFn& model, const NetInput& input) {
  if (input.mask.empty()) return 0.0;
  return model(input);
}

double predict_case(const Network& net, const NetInput& input) {
  if (input.mask.empty()) return 0.0;
  return forward(net, input);
}

double predict_case(const Network& net, const DwiStack& stack) {
  if (stack.lesion_mask().empty()) return 0.0;
  return forward(net, make_e2e_input(stack));
}

double predict_case(const Network& net, const ParameterMaps& maps) {
  if (maps.mask.empty()) return 0.0;
  return forward(net, make_f2e_input(maps));
}

double finite_difference_gradient(const Network& net, const NetInput& input, Label label,
                                  std::size_t param_index, double step) {
  Network probe = net;
  const double w0 = probe.params[param_index];
  probe.params[param_index] = w0 + step;
  const double up = loss(probe, input, label);
  probe.params[param_index] = w0 - step;
  const double down = loss(probe, input, label);
  return (up - down) / (2.0 * step);
}

double backward_check(const Network& net, const NetInput& input, Label label,
                      std::mt19937_64& rng, std::size_t per_layer) {
  std::vector<double> grad(net.params.size(), 0.0);
  loss_and_gradient(net, input, label, grad);
  double worst = 0.0;
  for (const auto& layer : parameter_layout(net.arch)) {
    std::vector<std::size_t> indices;
    for (std::size_t k = 0; k < layer.weight_count(); ++k) {
      indices.push_back(layer.weight_offset + k);
    }
    for (int k = 0; k < layer.out; ++k) indices.push_back(layer.bias_offset + k);
    std::shuffle(indices.begin(), indices.end(), rng);
    if (indices.size() > per_layer) indices.resize(per_layer);
    for (std::size_t idx : indices) {
      // A ReLU kink inside the stencil spoils a step; shrinking it moves the
      // kink outside, so the best of three steps is kept.
      const double analytic = grad[idx];
      double err = std::numeric_limits<double>::infinity();
      double step = 1e-5 * std::max(1.0, std::abs(net.params[idx]));
      for (int k = 0; k < 3; ++k, step /= 10.0) {
        const double numeric = finite_difference_gradient(net, input, label, idx, step);
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        err = std::min(err, std::abs(analytic - numeric) / denom);
      }
      worst = std::max(worst, err);
    }
  }
  return worst;
}

namespace {

constexpr char kNetworkMagic[8] = {'M', 'B', 'D', 'A', 'N', 'E', 'T', '1'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
}

std::uint64_t get_u64(const std::vector<char>& in, std::size_t at) {
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + k])) << (8 * k);
  }
  return v;
}

}  // namespace

void save_network(const Network& net, const std::filesystem::path& file) {
  nlohmann::json header = {
      {"format", "mbda-network"},
      {"version", 1},
      {"architecture", to_json(net.arch)},
      {"parameter_count", net.params.size()},
      {"training",
       {{"seed", net.info.seed},
        {"epochs_run", net.info.epochs_run},
        {"selected_epoch", net.info.selected_epoch},
        {"selected_validation_error", net.info.selected_validation_error},
        {"protocol", net.info.protocol},
        {"akc_constrained", net.info.akc_constrained}}},
  };
  const std::string text = header.dump();
  std::string blob(kNetworkMagic, sizeof kNetworkMagic);
  put_u64(blob, text.size());
  blob += text;
  for (double v : net.params) put_u64(blob, std::bit_cast<std::uint64_t>(v));
  write_text_file(file, blob);
}

Network load_network(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + file.string());
  std::vector<char> bytes(std::istreambuf_iterator<char>(in), {});
  if (bytes.size() < 16 || !std::equal(kNetworkMagic, kNetworkMagic + 8, bytes.begin())) {
    fail(ErrorCode::kFormatError, file.string() + ": not an mbda network file");
  }
  const auto header_len = get_u64(bytes, 8);
  if (16 + header_len > bytes.size()) fail(ErrorCode::kFormatError, file.string() + ": truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 16,
                                   bytes.begin() + 16 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormatError, file.string() + ": " + e.what());
  }
  if (header.value("version", 0) != 1) {
    fail(ErrorCode::kFormatError, file.string() + ": unsupported network version");
  }
  Network net;
  net.arch = architecture_from_json(header.at("architecture"));
  const auto count = header.at("parameter_count").get<std::size_t>();
  if (count != parameter_count(parameter_layout(net.arch)) ||
      bytes.size() != 16 + header_len + 8 * count) {
    fail(ErrorCode::kFormatError, file.string() + ": parameter blob size mismatch");
  }
  net.params.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    net.params[i] = std::bit_cast<double>(get_u64(bytes, 16 + header_len + 8 * i));
  }
  const auto& t = header.at("training");
  net.info.seed = t.value("seed", std::uint64_t{0});
  net.info.epochs_run = t.value("epochs_run", 0);
  net.info.selected_epoch = t.value("selected_epoch", 0);
  net.info.selected_validation_error = t.value("selected_validation_error", 1.0);
  net.info.protocol = t.value("protocol", std::vector<double>{});
  net.info.akc_constrained = t.value("akc_constrained", false);
  return net;
}

}  // namespace mbda
