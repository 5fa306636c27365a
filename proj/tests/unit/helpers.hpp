#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <system_error>
#include <vector>

#include <unistd.h>

#include "tweezer/simulator.hpp"
#include "tweezer/timeseries.hpp"

namespace tweezer::testing {

/// Scratch directory removed when the object goes out of scope.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("tweezer_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
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
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::filesystem::path path_;
};

inline TimeSeries white_series(std::size_t n, double rate, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sd);
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return TimeSeries(std::move(v), rate);
}

/// Radial trap at 737.9 Hz with D chosen for unit-scale positions.
inline sim::AxisParams radial_axis(double fc = 737.9, double diffusion = 1.0) { return {fc, diffusion}; }

}  // namespace tweezer::testing
