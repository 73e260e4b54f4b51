#include "core/dwi.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "core/error.hpp"
#include "core/log.hpp"

namespace fs = std::filesystem;

namespace mbda {

const char* label_name(Label label) noexcept {
  return label == Label::kMalignant ? "malignant" : "benign";
}

Label parse_label(const std::string& name) {
  if (name == "benign") return Label::kBenign;
  if (name == "malignant") return Label::kMalignant;
  fail(ErrorCode::kFormatError, "unknown label '" + name + "'");
}

BValue::BValue(double value) : value_(value) {
  if (!std::isfinite(value) || value < 0.0) {
    fail(ErrorCode::kProtocolError,
         "b-value must be finite and >= 0, got " + std::to_string(value));
  }
}

Protocol::Protocol(std::vector<BValue> bvalues) : bvalues_(std::move(bvalues)) {
  if (bvalues_.size() < 2) {
    fail(ErrorCode::kProtocolError, "a protocol needs at least two b-values");
  }
  if (bvalues_.front().value() != 0.0) {
    fail(ErrorCode::kProtocolError, "protocol must start at b = 0");
  }
  for (std::size_t i = 1; i < bvalues_.size(); ++i) {
    if (!(bvalues_[i - 1] < bvalues_[i])) {
      fail(ErrorCode::kProtocolError,
           "protocol b-values must be strictly increasing: " +
               format_protocol(*this));
    }
  }
}

Protocol Protocol::from_values(std::span<const double> values) {
  std::vector<BValue> b;
  b.reserve(values.size());
  for (double v : values) b.emplace_back(v);
  return Protocol(std::move(b));
}

std::vector<double> Protocol::values() const {
  std::vector<double> out;
  out.reserve(bvalues_.size());
  for (const auto& b : bvalues_) out.push_back(b.value());
  return out;
}

bool Protocol::contains(BValue b) const { return index_of(b).has_value(); }

std::optional<std::size_t> Protocol::index_of(BValue b) const {
  auto it = std::lower_bound(bvalues_.begin(), bvalues_.end(), b);
  if (it == bvalues_.end() || *it != b) return std::nullopt;
  return static_cast<std::size_t>(it - bvalues_.begin());
}

std::string format_protocol(const Protocol& protocol) {
  std::ostringstream os;
  for (std::size_t i = 0; i < protocol.size(); ++i) {
    if (i) os << ',';
    os << protocol[i].value();
  }
  return os.str();
}

std::vector<double> parse_bvalue_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) {
      fail(ErrorCode::kInvalidArgument, "cannot parse b-value '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

ImagePlane::ImagePlane(std::size_t width, std::size_t height)
    : ImagePlane(width, height, std::vector<float>(width * height, 0.0f)) {}

ImagePlane::ImagePlane(std::size_t width, std::size_t height, std::vector<float> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width == 0 || height == 0) {
    fail(ErrorCode::kDimensionMismatch, "image dimensions must be positive");
  }
  if (data_.size() != width * height) {
    fail(ErrorCode::kDimensionMismatch, "plane data length does not match dimensions");
  }
}

void ImagePlane::validate() const {
  for (float v : data_) {
    if (!std::isfinite(v) || v < 0.0f) {
      fail(ErrorCode::kFormatError, "plane contains a negative or non-finite sample");
    }
  }
}

Mask::Mask(std::size_t width, std::size_t height)
    : Mask(width, height, std::vector<std::uint8_t>(width * height, 0)) {}

Mask::Mask(std::size_t width, std::size_t height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width == 0 || height == 0) {
    fail(ErrorCode::kDimensionMismatch, "mask dimensions must be positive");
  }
  if (data_.size() != width * height) {
    fail(ErrorCode::kDimensionMismatch, "mask data length does not match dimensions");
  }
  for (auto& v : data_) v = v ? 1 : 0;
}

std::size_t Mask::count() const noexcept {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

std::vector<std::size_t> Mask::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (data_[i]) out.push_back(i);
  }
  return out;
}

double compute_theta(const ImagePlane& b0, const Mask& fat_mask) {
  if (b0.width() != fat_mask.width() || b0.height() != fat_mask.height()) {
    fail(ErrorCode::kDimensionMismatch, "fat mask does not match the b0 plane");
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < b0.size(); ++i) {
    if (fat_mask[i]) {
      sum += b0[i];
      ++n;
    }
  }
  if (n == 0) fail(ErrorCode::kEmptyFatMask, "fat mask is empty");
  return sum / static_cast<double>(n);
}

double compute_theta(const DwiStack& stack) {
  return compute_theta(stack.plane(0), stack.fat_mask());
}

DwiStack::DwiStack(Protocol protocol, std::vector<ImagePlane> planes, Mask lesion_mask,
                   Mask fat_mask, ThetaPolicy policy)
    : protocol_(std::move(protocol)),
      planes_(std::move(planes)),
      lesion_mask_(std::move(lesion_mask)),
      fat_mask_(std::move(fat_mask)) {
  if (planes_.size() != protocol_.size()) {
    fail(ErrorCode::kDimensionMismatch, "plane count does not match protocol length");
  }
  const auto w = lesion_mask_.width();
  const auto h = lesion_mask_.height();
  if (fat_mask_.width() != w || fat_mask_.height() != h) {
    fail(ErrorCode::kDimensionMismatch, "lesion and fat masks differ in size");
  }
  for (const auto& p : planes_) {
    if (p.width() != w || p.height() != h) {
      fail(ErrorCode::kDimensionMismatch, "plane dimensions differ from the masks");
    }
    p.validate();
  }
  if (fat_mask_.empty()) {
    if (policy == ThetaPolicy::kStrict) {
      fail(ErrorCode::kEmptyFatMask, "fat mask is empty");
    }
    logger().warn("empty fat mask, using theta = 0");
    theta_ = 0.0;
  } else {
    theta_ = compute_theta(planes_.front(), fat_mask_);
  }
}

const ImagePlane& DwiStack::plane_at(BValue b) const {
  auto idx = protocol_.index_of(b);
  if (!idx) {
    fail(ErrorCode::kMissingBValue,
         "b = " + std::to_string(b.value()) + " is not in the stack protocol");
  }
  return planes_[*idx];
}

DwiStack subset_protocol(const DwiStack& stack, std::span<const BValue> keep) {
  std::vector<BValue> sorted(keep.begin(), keep.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (sorted.empty() || sorted.front().value() != 0.0) {
    fail(ErrorCode::kB0Required, "the kept b-values must include b = 0");
  }
  std::vector<ImagePlane> planes;
  for (const auto& b : sorted) {
    if (!stack.protocol().contains(b)) {
      fail(ErrorCode::kMissingBValue,
           "b = " + std::to_string(b.value()) + " is not in the stack protocol");
    }
    planes.push_back(stack.plane_at(b));
  }
  return DwiStack(Protocol(std::move(sorted)), std::move(planes), stack.lesion_mask(),
                  stack.fat_mask());
}

DwiStack subset_protocol(const DwiStack& stack, const Protocol& keep) {
  return subset_protocol(stack, std::span<const BValue>(keep.bvalues()));
}

namespace {

template <typename T>
std::vector<char> to_little_endian(std::span<const T> values) {
  std::vector<char> bytes(values.size() * sizeof(T));
  for (std::size_t i = 0; i < values.size(); ++i) {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    U bits = std::bit_cast<U>(values[i]);
    for (std::size_t k = 0; k < sizeof(T); ++k) {
      bytes[i * sizeof(T) + k] = static_cast<char>((bits >> (8 * k)) & 0xFF);
    }
  }
  return bytes;
}

std::vector<char> read_all(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + file.string());
  return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

void write_all(const fs::path& file, const char* data, std::size_t n) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + file.string());
  out.write(data, static_cast<std::streamsize>(n));
  if (!out) fail(ErrorCode::kIoError, "write failed for " + file.string());
}

}  // namespace

void write_plane_file(const ImagePlane& plane, const fs::path& file) {
  auto bytes = to_little_endian<float>(plane.data());
  write_all(file, bytes.data(), bytes.size());
}

ImagePlane read_plane_file(const fs::path& file, std::size_t width, std::size_t height) {
  auto bytes = read_all(file);
  if (bytes.size() != width * height * 4) {
    fail(ErrorCode::kFormatError, file.string() + ": expected " +
                                      std::to_string(width * height * 4) + " bytes, found " +
                                      std::to_string(bytes.size()));
  }
  std::vector<float> data(width * height);
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::uint32_t bits = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + k]))
              << (8 * k);
    }
    data[i] = std::bit_cast<float>(bits);
  }
  ImagePlane plane(width, height, std::move(data));
  plane.validate();
  return plane;
}

void write_mask_file(const Mask& mask, const fs::path& file) {
  write_all(file, reinterpret_cast<const char*>(mask.data().data()), mask.size());
}

Mask read_mask_file(const fs::path& file, std::size_t width, std::size_t height) {
  auto bytes = read_all(file);
  if (bytes.size() != width * height) {
    fail(ErrorCode::kFormatError, file.string() + ": mask size mismatch");
  }
  std::vector<std::uint8_t> data(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    auto v = static_cast<std::uint8_t>(bytes[i]);
    if (v > 1) fail(ErrorCode::kFormatError, file.string() + ": mask bytes must be 0 or 1");
    data[i] = v;
  }
  return Mask(width, height, std::move(data));
}

nlohmann::json read_json_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + file.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormatError, file.string() + ": " + e.what());
  }
}

void write_text_file(const fs::path& file, const std::string& text) {
  write_all(file, text.data(), text.size());
}

fs::path save_stack(const DwiStack& stack, const fs::path& dir, const StackMeta& meta) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());

  nlohmann::json m = nlohmann::json::object();
  m["format"] = "mbda-stack";
  m["version"] = 1;
  m["id"] = meta.id;
  m["label"] = meta.label ? nlohmann::json(label_name(*meta.label)) : nlohmann::json(nullptr);
  m["width"] = stack.width();
  m["height"] = stack.height();
  m["protocol"] = stack.protocol().values();
  nlohmann::json planes = nlohmann::json::array();
  for (std::size_t i = 0; i < stack.planes().size(); ++i) {
    std::string name = "plane_" + std::to_string(i) + ".f32";
    write_plane_file(stack.plane(i), dir / name);
    planes.push_back({{"b", stack.protocol()[i].value()}, {"file", name}});
  }
  m["planes"] = planes;
  write_mask_file(stack.lesion_mask(), dir / "lesion_mask.u8");
  write_mask_file(stack.fat_mask(), dir / "fat_mask.u8");
  m["lesion_mask"] = "lesion_mask.u8";
  m["fat_mask"] = "fat_mask.u8";
  m["theta"] = stack.theta();
  for (const auto& [key, value] : meta.extra.items()) {
    if (!m.contains(key)) m[key] = value;
  }
  auto manifest = dir / kManifestName;
  write_text_file(manifest, m.dump(2) + "\n");
  return manifest;
}

fs::path save_case(const LabeledCase& c, const fs::path& dir, nlohmann::json extra) {
  return save_stack(c.stack, dir, StackMeta{c.id, c.label, std::move(extra)});
}

namespace {

fs::path manifest_path(const fs::path& path) {
  return fs::is_directory(path) ? path / kManifestName : path;
}

template <typename T>
T required(const nlohmann::json& m, const char* key, const fs::path& file) {
  if (!m.contains(key)) {
    fail(ErrorCode::kFormatError, file.string() + ": missing field '" + key + "'");
  }
  try {
    return m.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormatError, file.string() + ": bad field '" + key + "': " + e.what());
  }
}

}  // namespace

DwiStack load_stack(const fs::path& path, StackMeta& meta, ThetaPolicy policy) {
  const auto manifest = manifest_path(path);
  const auto dir = manifest.parent_path();
  const auto m = read_json_file(manifest);
  if (!m.is_object() || m.value("format", "") != "mbda-stack") {
    fail(ErrorCode::kFormatError, manifest.string() + ": not an mbda-stack manifest");
  }
  const auto width = required<std::size_t>(m, "width", manifest);
  const auto height = required<std::size_t>(m, "height", manifest);
  const auto bvals = required<std::vector<double>>(m, "protocol", manifest);
  Protocol protocol = Protocol::from_values(bvals);

  const auto& planes_json = m.at("planes");
  if (!planes_json.is_array() || planes_json.size() != protocol.size()) {
    fail(ErrorCode::kDimensionMismatch,
         manifest.string() + ": plane list does not match the protocol");
  }
  std::vector<ImagePlane> planes;
  for (std::size_t i = 0; i < planes_json.size(); ++i) {
    const auto b = required<double>(planes_json[i], "b", manifest);
    if (b != protocol[i].value()) {
      fail(ErrorCode::kProtocolError, manifest.string() + ": planes out of protocol order");
    }
    planes.push_back(read_plane_file(
        dir / required<std::string>(planes_json[i], "file", manifest), width, height));
  }
  Mask lesion = read_mask_file(dir / required<std::string>(m, "lesion_mask", manifest),
                               width, height);
  Mask fat = read_mask_file(dir / required<std::string>(m, "fat_mask", manifest), width,
                            height);

  meta.id = m.value("id", "");
  meta.label.reset();
  if (m.contains("label") && m["label"].is_string()) {
    meta.label = parse_label(m["label"].get<std::string>());
  }
  static const char* kCoreKeys[] = {"format", "version", "id",         "label",
                                    "width",  "height",  "protocol",   "planes",
                                    "theta",  "fat_mask", "lesion_mask"};
  meta.extra = nlohmann::json::object();
  for (const auto& [key, value] : m.items()) {
    if (std::find(std::begin(kCoreKeys), std::end(kCoreKeys), key) == std::end(kCoreKeys)) {
      meta.extra[key] = value;
    }
  }
  return DwiStack(std::move(protocol), std::move(planes), std::move(lesion), std::move(fat),
                  policy);
}

DwiStack load_stack(const fs::path& path, ThetaPolicy policy) {
  StackMeta meta;
  return load_stack(path, meta, policy);
}

LabeledCase load_case(const fs::path& path, ThetaPolicy policy) {
  StackMeta meta;
  DwiStack stack = load_stack(path, meta, policy);
  if (!meta.label) {
    fail(ErrorCode::kFormatError, manifest_path(path).string() + ": case has no label");
  }
  return LabeledCase{meta.id, std::move(stack), *meta.label};
}

void save_dataset(const std::vector<LabeledCase>& cases, const fs::path& dir,
                  nlohmann::json info) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& c : cases) {
    save_case(c, dir / c.id);
    entries.push_back({{"id", c.id}, {"label", label_name(c.label)}, {"path", c.id}});
  }
  nlohmann::json index = {{"format", "mbda-dataset"}, {"version", 1}, {"cases", entries}};
  for (const auto& [key, value] : info.items()) {
    if (!index.contains(key)) index[key] = value;
  }
  write_text_file(dir / kDatasetIndexName, index.dump(2) + "\n");
}

DatasetIndex read_dataset_index(const fs::path& dir) {
  const auto file = dir / kDatasetIndexName;
  const auto j = read_json_file(file);
  if (j.value("format", "") != "mbda-dataset") {
    fail(ErrorCode::kFormatError, file.string() + ": not an mbda-dataset index");
  }
  DatasetIndex index;
  for (const auto& e : j.at("cases")) {
    index.entries.push_back(DatasetEntry{required<std::string>(e, "id", file),
                                         parse_label(required<std::string>(e, "label", file)),
                                         required<std::string>(e, "path", file)});
  }
  for (const auto& [key, value] : j.items()) {
    if (key != "cases" && key != "format" && key != "version") index.info[key] = value;
  }
  return index;
}

std::vector<LabeledCase> load_dataset(const fs::path& dir) {
  auto index = read_dataset_index(dir);
  std::vector<LabeledCase> cases;
  cases.reserve(index.entries.size());
  for (const auto& e : index.entries) {
    auto c = load_case(dir / e.path);
    if (c.id != e.id || c.label != e.label) {
      fail(ErrorCode::kFormatError, "dataset index disagrees with manifest of " + e.id);
    }
    cases.push_back(std::move(c));
  }
  std::sort(cases.begin(), cases.end(),
            [](const LabeledCase& a, const LabeledCase& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < cases.size(); ++i) {
    if (cases[i].id == cases[i - 1].id) {
      fail(ErrorCode::kFormatError, "duplicate case id " + cases[i].id);
    }
  }
  return cases;
}

}  // namespace mbda
