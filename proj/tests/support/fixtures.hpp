#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "core/dki.hpp"
#include "core/dwi.hpp"

namespace fixtures {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("mbda-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Stack whose lesion voxels follow the DKI model exactly (float-rounded)
// with the given params; fat row at y = 0 rendered at theta.
inline mbda::DwiStack model_stack(const std::vector<double>& bvalues, const mbda::DkiParams& p,
                                  std::size_t width = 8, std::size_t height = 8) {
  mbda::Mask lesion(width, height), fat(width, height);
  for (std::size_t x = 0; x < width; ++x) fat.set(x, 0, true);
  for (std::size_t y = height / 2 - 1; y <= height / 2 + 1; ++y) {
    for (std::size_t x = width / 2 - 1; x <= width / 2 + 1; ++x) lesion.set(x, y, true);
  }
  std::vector<mbda::ImagePlane> planes;
  for (double b : bvalues) {
    mbda::ImagePlane plane(width, height);
    for (std::size_t i = 0; i < plane.size(); ++i) {
      if (fat[i]) {
        plane[i] = static_cast<float>(p.theta);
      } else if (lesion[i]) {
        plane[i] = static_cast<float>(mbda::forward_signal(p, b));
      } else {
        plane[i] = 5.0f;
      }
    }
    planes.push_back(std::move(plane));
  }
  return mbda::DwiStack(mbda::Protocol::from_values(bvalues), std::move(planes),
                        std::move(lesion), std::move(fat));
}

// Random stack with positive planes and random masks (fat mask non-empty).
inline mbda::DwiStack random_stack(std::mt19937_64& rng, const std::vector<double>& bvalues,
                                   std::size_t width, std::size_t height) {
  std::uniform_real_distribution<float> value(0.0f, 1000.0f);
  std::bernoulli_distribution coin(0.3);
  mbda::Mask lesion(width, height), fat(width, height);
  for (std::size_t i = 0; i < width * height; ++i) {
    lesion.set(i, coin(rng));
    fat.set(i, coin(rng));
  }
  fat.set(0, true);
  std::vector<mbda::ImagePlane> planes;
  for (std::size_t k = 0; k < bvalues.size(); ++k) {
    mbda::ImagePlane plane(width, height);
    for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = value(rng);
    planes.push_back(std::move(plane));
  }
  return mbda::DwiStack(mbda::Protocol::from_values(bvalues), std::move(planes),
                        std::move(lesion), std::move(fat));
}

}  // namespace fixtures
