#pragma once

#include <filesystem>
#include <string>

#include "bedsense/dataset.hpp"

namespace bedsense {

enum class Adapter { kPmatData, kHrlRos };

Adapter adapter_from_string(const std::string& name);
std::string to_string(Adapter adapter);

struct IngestOptions {
  Adapter adapter = Adapter::kPmatData;
  /// subjects.csv with heights and weights; defaults to <raw>/subjects.csv.
  std::filesystem::path subjects_csv;
  /// Frames dropped from the start of every recording.
  int skip_leading_frames = 0;
};

/// Grid, mask and posture table an adapter writes into the manifest.
Corpus adapter_template(Adapter adapter);

/// Reads <raw>/<subject_id>/<posture_id>.txt recordings, one frame per line
/// as whitespace-separated readings in row-major order. Subject directories
/// without a subjects.csv entry are a LoadError.
Corpus ingest_raw(const std::filesystem::path& raw, const IngestOptions& options);

}  // namespace bedsense
