#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "editfx/util.hpp"

namespace testing_helpers {

inline std::filesystem::path data_path(const std::string& name) { return std::filesystem::path(EDITFX_TEST_DATA) / name; }

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path = std::filesystem::temp_directory_path() / ("editfx-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

}  // namespace testing_helpers
