#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include "bedsense/dataset.hpp"

namespace testutil {

inline bedsense::PressureFrame frame(int rows, int cols, std::vector<double> values, double ceiling = 1000.0) {
  bedsense::PressureFrame f;
  f.grid = {rows, cols, ceiling, 1.0};
  f.values = std::move(values);
  f.subject_id = "A";
  f.posture_id = 1;
  return f;
}

/// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("bedsense_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline bedsense::Corpus tiny_corpus() {
  bedsense::Corpus c;
  c.name = "tiny";
  c.grid = {2, 3, 100.0, 1.5};
  c.subjects = {bedsense::make_subject("A", 1.70, 65.0, 30.0), bedsense::make_subject("B", 1.80, 90.0, std::nullopt)};
  for (const char* id : {"B", "A"}) {
    for (int k = 0; k < 3; ++k) {
      bedsense::PressureFrame f;
      f.grid = c.grid;
      f.subject_id = id;
      f.posture_id = 2 - k % 2;
      f.frame_index = k;
      f.values = {0.0, 1.5, 100.0, 0.1 * k, 42.0, 7.25};
      c.frames.push_back(f);
    }
  }
  c.canonicalize();
  return c;
}

}  // namespace testutil
