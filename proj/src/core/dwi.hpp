#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mbda {

enum class Label : int { kBenign = 0, kMalignant = 1 };

const char* label_name(Label label) noexcept;
Label parse_label(const std::string& name);

// Diffusion weighting in s/mm^2.
class BValue {
 public:
  explicit BValue(double value);

  double value() const noexcept { return value_; }

  friend auto operator<=>(const BValue&, const BValue&) = default;
  friend bool operator==(const BValue&, const BValue&) = default;

 private:
  double value_;
};

// Strictly increasing b-values starting at b = 0, at least two entries.
class Protocol {
 public:
  explicit Protocol(std::vector<BValue> bvalues);
  static Protocol from_values(std::span<const double> values);

  std::size_t size() const noexcept { return bvalues_.size(); }
  const BValue& operator[](std::size_t i) const { return bvalues_[i]; }
  const std::vector<BValue>& bvalues() const noexcept { return bvalues_; }
  std::vector<double> values() const;

  bool contains(BValue b) const;
  std::optional<std::size_t> index_of(BValue b) const;

  friend bool operator==(const Protocol&, const Protocol&) = default;

 private:
  std::vector<BValue> bvalues_;
};

std::string format_protocol(const Protocol& protocol);
// Parses "0,100,750" style lists.
std::vector<double> parse_bvalue_list(const std::string& text);

class ImagePlane {
 public:
  ImagePlane(std::size_t width, std::size_t height);
  ImagePlane(std::size_t width, std::size_t height, std::vector<float> data);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  float operator[](std::size_t i) const { return data_[i]; }
  float& operator[](std::size_t i) { return data_[i]; }
  float at(std::size_t x, std::size_t y) const { return data_[y * width_ + x]; }
  float& at(std::size_t x, std::size_t y) { return data_[y * width_ + x]; }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }

  // Throws FormatError on negative or non-finite samples.
  void validate() const;

  friend bool operator==(const ImagePlane&, const ImagePlane&) = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<float> data_;
};

class Mask {
 public:
  Mask(std::size_t width, std::size_t height);
  Mask(std::size_t width, std::size_t height, std::vector<std::uint8_t> data);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  bool operator[](std::size_t i) const { return data_[i] != 0; }
  bool at(std::size_t x, std::size_t y) const { return data_[y * width_ + x] != 0; }
  void set(std::size_t i, bool v) { data_[i] = v ? 1 : 0; }
  void set(std::size_t x, std::size_t y, bool v) { data_[y * width_ + x] = v ? 1 : 0; }

  std::size_t count() const noexcept;
  bool empty() const noexcept { return count() == 0; }
  // Row-major indices of true pixels.
  std::vector<std::size_t> indices() const;

  std::span<const std::uint8_t> data() const noexcept { return data_; }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<std::uint8_t> data_;
};

enum class ThetaPolicy { kStrict, kZeroFallback };

// Mean b0 intensity over the fat mask. Throws EmptyFatMask when the mask is
// all-false.
double compute_theta(const ImagePlane& b0, const Mask& fat_mask);

// Co-registered planes, one per protocol b-value. Immutable; theta is the
// fat-mask mean of the b0 plane and is always derived from the data.
class DwiStack {
 public:
  DwiStack(Protocol protocol, std::vector<ImagePlane> planes, Mask lesion_mask,
           Mask fat_mask, ThetaPolicy policy = ThetaPolicy::kZeroFallback);

  const Protocol& protocol() const noexcept { return protocol_; }
  const std::vector<ImagePlane>& planes() const noexcept { return planes_; }
  const ImagePlane& plane(std::size_t i) const { return planes_[i]; }
  // Throws MissingBValue.
  const ImagePlane& plane_at(BValue b) const;
  const Mask& lesion_mask() const noexcept { return lesion_mask_; }
  const Mask& fat_mask() const noexcept { return fat_mask_; }
  double theta() const noexcept { return theta_; }
  std::size_t width() const noexcept { return lesion_mask_.width(); }
  std::size_t height() const noexcept { return lesion_mask_.height(); }

  friend bool operator==(const DwiStack&, const DwiStack&) = default;

 private:
  Protocol protocol_;
  std::vector<ImagePlane> planes_;
  Mask lesion_mask_;
  Mask fat_mask_;
  double theta_ = 0.0;
};

double compute_theta(const DwiStack& stack);

struct LabeledCase {
  std::string id;
  DwiStack stack;
  Label label;
};

// Extra manifest fields: case id, label and arbitrary audit objects merged
// into the top level of manifest.json.
struct StackMeta {
  std::string id;
  std::optional<Label> label;
  nlohmann::json extra = nlohmann::json::object();
};

inline constexpr const char* kManifestName = "manifest.json";

std::filesystem::path save_stack(const DwiStack& stack,
                                 const std::filesystem::path& dir,
                                 const StackMeta& meta = {});
std::filesystem::path save_case(const LabeledCase& c,
                                const std::filesystem::path& dir,
                                nlohmann::json extra = nlohmann::json::object());

// Accepts a stack directory or its manifest path.
DwiStack load_stack(const std::filesystem::path& path,
                    ThetaPolicy policy = ThetaPolicy::kZeroFallback);
DwiStack load_stack(const std::filesystem::path& path, StackMeta& meta,
                    ThetaPolicy policy = ThetaPolicy::kZeroFallback);
LabeledCase load_case(const std::filesystem::path& path,
                      ThetaPolicy policy = ThetaPolicy::kZeroFallback);

// Restricts the stack to the kept b-values. keep must include b = 0.
DwiStack subset_protocol(const DwiStack& stack, std::span<const BValue> keep);
DwiStack subset_protocol(const DwiStack& stack, const Protocol& keep);

// Raw plane/mask files: little-endian float32 and one byte per pixel.
void write_plane_file(const ImagePlane& plane, const std::filesystem::path& file);
ImagePlane read_plane_file(const std::filesystem::path& file, std::size_t width,
                           std::size_t height);
void write_mask_file(const Mask& mask, const std::filesystem::path& file);
Mask read_mask_file(const std::filesystem::path& file, std::size_t width,
                    std::size_t height);

nlohmann::json read_json_file(const std::filesystem::path& file);
void write_text_file(const std::filesystem::path& file, const std::string& text);

// Dataset index: dataset.json listing case directories relative to the
// dataset root.
struct DatasetEntry {
  std::string id;
  Label label;
  std::string path;
};

struct DatasetIndex {
  std::vector<DatasetEntry> entries;
  nlohmann::json info = nlohmann::json::object();
};

inline constexpr const char* kDatasetIndexName = "dataset.json";

void save_dataset(const std::vector<LabeledCase>& cases,
                  const std::filesystem::path& dir,
                  nlohmann::json info = nlohmann::json::object());
DatasetIndex read_dataset_index(const std::filesystem::path& dir);
// Cases sorted by id.
std::vector<LabeledCase> load_dataset(const std::filesystem::path& dir);

}  // namespace mbda
