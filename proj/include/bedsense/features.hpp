#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bedsense/dataset.hpp"
#include "bedsense/feature_mask.hpp"

namespace bedsense {

/// Histogram resolution behind the entropy feature.
inline constexpr int kEntropyBins = 256;

/// Threshold-count bounds (strict inequalities).
inline constexpr double kTau1 = 20.0;
inline constexpr double kTau2 = 60.0;
inline constexpr double kTau3 = 100.0;

/// The 14 per-frame features in canonical order plus the mask that says which
/// of them a model consumes. Masked entries keep their computed value but are
/// reported as absent.
struct FeatureVector {
  std::array<double, kFeatureCount> values{};
  FeatureMask mask = full_feature_mask();

  double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
  double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }

  bool present(std::size_t i) const { return mask.test(i); }
  std::optional<double> get(std::size_t i) const {
    return present(i) ? std::optional<double>(values[i]) : std::nullopt;
  }

  /// Present features only, in canonical order.
  std::vector<double> model_input() const;
};

struct StatisticalFeatures {
  double max = 0, mode = 0, range = 0, entropy = 0;
  double mean = 0, variance = 0, skewness = 0, kurtosis = 0;
  double nonzero_count = 0, count_20_60 = 0, count_60_100 = 0, count_above_100 = 0;
};

struct ContourFeatures {
  double num_isolines = 0;
  double isoline_coord_sum = 0;
};

StatisticalFeatures extract_statistical(const PressureFrame& frame);
ContourFeatures extract_contour_features(const PressureFrame& frame);
FeatureVector extract_all(const PressureFrame& frame, const FeatureMask& mask = full_feature_mask());

/// One row of a feature table: identity, posture group, BMI and features.
struct FeatureRow {
  std::string subject_id;
  int posture_id = 0;
  std::int64_t frame_index = 0;
  FeatureVector features;
  double bmi = 0.0;
};

struct FeatureTable {
  FeatureMask mask = full_feature_mask();
  std::vector<FeatureRow> rows;
  /// Subject anthropometrics, when known (needed for weight/height BMI classes).
  std::vector<SubjectRecord> subjects;
  nlohmann::ordered_json provenance = nlohmann::ordered_json::object();

  /// Sorted distinct subject ids; class index = position in this list.
  std::vector<std::string> subject_ids() const;
};

/// Extracts every frame of a corpus. Posture ids are folded through the
/// corpus' posture_groups table when it has one.
FeatureTable extract_table(const Corpus& corpus);

/// features.csv plus a JSON sidecar (`<path>.json`) holding the mask,
/// subjects and provenance. Masked features are written as empty cells.
void save_feature_table(const FeatureTable& table, const std::filesystem::path& csv_path);
FeatureTable load_feature_table(const std::filesystem::path& csv_path);

/// Copy of the table with the given feature removed from the mask.
FeatureTable drop_feature(const FeatureTable& table, std::size_t feature_index);

}  // namespace bedsense
