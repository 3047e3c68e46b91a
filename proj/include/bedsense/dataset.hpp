#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bedsense/feature_mask.hpp"

namespace bedsense {

struct GridSpec {
  int rows = 0;
  int cols = 0;
  double sensor_ceiling = 0.0;
  double frame_rate_hz = 0.0;

  std::size_t cell_count() const {
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }

  /// Throws DomainError if any field is non-positive.
  void validate() const;

  bool operator==(const GridSpec&) const = default;
};

/// One snapshot of the mattress. Values are row-major, x = column, y = row.
struct PressureFrame {
  GridSpec grid;
  std::vector<double> values;
  std::string subject_id;
  int posture_id = 0;
  std::int64_t frame_index = 0;

  double at(int row, int col) const {
    return values[static_cast<std::size_t>(row) * static_cast<std::size_t>(grid.cols) +
                  static_cast<std::size_t>(col)];
  }

  bool operator==(const PressureFrame&) const = default;
};

struct SubjectRecord {
  std::string subject_id;
  double height_m = 0.0;
  double weight_kg = 0.0;
  std::optional<double> age_years;
  double bmi = 0.0;

  bool operator==(const SubjectRecord&) const = default;
};

/// Weight over squared height. Throws DomainError on non-positive input.
double compute_bmi(double weight_kg, double height_m);

/// Builds a record with its BMI filled in; rejects BMIs outside (10, 60).
SubjectRecord make_subject(std::string subject_id, double height_m, double weight_kg,
                           std::optional<double> age_years = std::nullopt);

struct Corpus {
  std::string name;
  GridSpec grid;
  std::vector<SubjectRecord> subjects;  // sorted by subject_id
  std::vector<PressureFrame> frames;    // sorted by (subject_id, posture_id, frame_index)
  FeatureMask feature_mask = full_feature_mask();
  /// Optional raw-posture -> posture-group table applied when features are
  /// emitted (see merge_postures).
  std::map<int, int> posture_groups;
  /// Free-form provenance echoed by whichever tool produced the corpus.
  nlohmann::ordered_json provenance = nlohmann::ordered_json::object();

  const SubjectRecord* find_subject(const std::string& subject_id) const;

  /// Sorts subjects and frames into canonical order.
  void canonicalize();

  /// Checks every invariant; throws DomainError describing the first violation.
  void validate() const;

  bool operator==(const Corpus&) const = default;
};

/// Reads a subjects.csv table; errors name file and line.
std::vector<SubjectRecord> load_subjects(const std::filesystem::path& csv_path);

/// Reads manifest.json, subjects.csv and frames.csv under root. Errors are
/// reported as LoadError naming the file and line.
Corpus load_corpus(const std::filesystem::path& root);

/// Writes the canonical layout. Each file is written to a temporary sibling
/// and renamed into place.
void save_corpus(const Corpus& corpus, const std::filesystem::path& root);

/// Raw posture id -> posture group. Loaded from a two-column CSV
/// (`raw_id,group_id`).
class PostureMap {
 public:
  PostureMap() = default;
  explicit PostureMap(std::map<int, int> table);

  static PostureMap load(const std::filesystem::path& csv_path);
  /// The table shipped in config/pmatdata_postures.csv.
  static const PostureMap& pmatdata();

  int group_of(int raw_id) const;
  const std::map<int, int>& table() const { return table_; }
  std::size_t group_count() const;

 private:
  std::map<int, int> table_;
};

/// PmatData's 17 recorded postures folded onto the 10 non-wedged groups.
int merge_postures(int raw_posture_id);

/// Directory holding shipped configuration tables.
std::filesystem::path config_dir();

/// Stable hash of a corpus' serialized form, used by round-trip checks.
std::uint64_t corpus_checksum(const Corpus& corpus);

}  // namespace bedsense
