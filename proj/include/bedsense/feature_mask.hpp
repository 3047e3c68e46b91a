#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <string_view>

namespace bedsense {

inline constexpr std::size_t kFeatureCount = 14;

/// Canonical feature order. Indices are stable and used in every file format.
enum class Feature : std::size_t {
  kMax = 0,
  kMode,
  kRange,
  kEntropy,
  kMean,
  kVariance,
  kSkewness,
  kKurtosis,
  kNonzeroCount,
  kCount20To60,
  kCount60To100,
  kCountAbove100,
  kNumIsolines,
  kIsolineCoordSum,
};

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "max",         "mode",         "range",           "entropy",      "mean",
    "variance",    "skewness",     "kurtosis",        "nonzero_count", "count_20_60",
    "count_60_100", "count_above_100", "num_isolines", "isoline_coord_sum"};

using FeatureMask = std::bitset<kFeatureCount>;

inline FeatureMask full_feature_mask() { return FeatureMask{}.set(); }

/// Mask used for corpora whose frames were range-normalized upstream, where
/// max and range carry no information.
inline FeatureMask prenormalized_feature_mask() {
  FeatureMask mask = full_feature_mask();
  mask.reset(static_cast<std::size_t>(Feature::kMax));
  mask.reset(static_cast<std::size_t>(Feature::kRange));
  return mask;
}

}  // namespace bedsense
