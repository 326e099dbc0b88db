#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

#include "pixle/image.hpp"
#include "pixle/oracle.hpp"

namespace pixle::testing {

inline ImageTensor random_image(std::mt19937_64& gen, std::size_t channels, std::size_t height,
                                std::size_t width, int levels = 0) {
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  std::uniform_int_distribution<int> level(0, levels > 0 ? levels - 1 : 0);
  std::vector<float> data(channels * height * width);
  for (auto& v : data) {
    // A small number of levels forces duplicate pixel values.
    v = levels > 0 ? static_cast<float>(level(gen)) / static_cast<float>(std::max(levels - 1, 1)) : unit(gen);
  }
  return ImageTensor(channels, height, width, std::move(data));
}

/// Returns the same probability vector for every image.
class ConstantOracle final : public Oracle {
 public:
  explicit ConstantOracle(ProbVector probs)
      : probs_(std::move(probs)), descriptor_{OracleKind::Builtin, "constant", probs_.size(), true, std::nullopt} {}
  ProbVector query(const ImageTensor&) override {
    ++calls;
    return probs_;
  }
  const OracleDescriptor& descriptor() const noexcept override { return descriptor_; }
  std::atomic<std::size_t> calls{0};

 private:
  ProbVector probs_;
  OracleDescriptor descriptor_;
};

/// Delegates to another oracle and fails once `fail_after` queries have succeeded.
class FailingOracle final : public Oracle {
 public:
  FailingOracle(Oracle& inner, std::size_t fail_after) : inner_(inner), fail_after_(fail_after) {}
  ProbVector query(const ImageTensor& image) override {
    if (calls++ >= fail_after_) throw TransportError("simulated oracle outage");
    return inner_.query(image);
  }
  const OracleDescriptor& descriptor() const noexcept override { return inner_.descriptor(); }
  std::size_t calls = 0;

 private:
  Oracle& inner_;
  std::size_t fail_after_;
};

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("pixle_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace pixle::testing
