#include "bedsense/ingest.hpp"

#include <algorithm>
#include <cctype>

#include "bedsense/error.hpp"
#include "bedsense/textio.hpp"

namespace bedsense {

namespace fs = std::filesystem;

Adapter adapter_from_string(const std::string& name) {
  if (name == "pmatdata") return Adapter::kPmatData;
  if (name == "hrlros") return Adapter::kHrlRos;
  throw DomainError("unknown adapter '" + name + "'");
}

std::string to_string(Adapter adapter) {
  return adapter == Adapter::kPmatData ? "pmatdata" : "hrlros";
}

Corpus adapter_template(Adapter adapter) {
  Corpus c;
  if (adapter == Adapter::kPmatData) {
    c.name = "pmatdata";
    c.grid = {64, 32, 1000.0, 1.5};
    c.feature_mask = full_feature_mask();
    c.posture_groups = PostureMap::pmatdata().table();
  } else {
    c.name = "hrlros";
    c.grid = {64, 27, 1024.0, 1.0};
    c.feature_mask = prenormalized_feature_mask();
  }
  return c;
}

namespace {

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char ch) { return std::isdigit(ch); });
}

void read_recording(Corpus& c, const fs::path& file, const std::string& subject, int posture, int skip) {
  const std::string text = textio::read_file(file);
  textio::LineReader reader(text);
  std::string_view line;
  const std::size_t cells = c.grid.cell_count();
  std::int64_t index = 0;
  int seen = 0;
  while (reader.next(line)) {
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos) continue;
    if (seen++ < skip) continue;
    PressureFrame f;
    f.grid = c.grid;
    f.subject_id = subject;
    f.posture_id = posture;
    f.frame_index = index++;
    f.values.reserve(cells);
    std::size_t pos = first;
    while (pos < line.size()) {
      const std::size_t end = std::min(line.find_first_of(" \t,", pos), line.size());
      double v = 0;
      if (!textio::parse_double(line.substr(pos, end - pos), v)) {
        throw LoadError(file.string() + ":" + std::to_string(reader.line_number()) + ": bad reading '" +
                        std::string(line.substr(pos, end - pos)) + "'");
      }
      if (!(v >= 0.0 && v <= c.grid.sensor_ceiling)) {
        throw LoadError(file.string() + ":" + std::to_string(reader.line_number()) + ": reading " +
                        textio::format_double(v) + " outside [0, " + textio::format_double(c.grid.sensor_ceiling) +
                        "]");
      }
      f.values.push_back(v);
      pos = line.find_first_not_of(" \t,", end);
      if (pos == std::string_view::npos) break;
    }
    if (f.values.size() != cells) {
      throw LoadError(file.string() + ":" + std::to_string(reader.line_number()) + ": expected " +
                      std::to_string(cells) + " readings, found " + std::to_string(f.values.size()));
    }
    c.frames.push_back(std::move(f));
  }
}

}  // namespace

Corpus ingest_raw(const fs::path& raw, const IngestOptions& options) {
  if (!fs::is_directory(raw)) throw LoadError(raw.string() + ": not a directory");
  if (options.skip_leading_frames < 0) throw DomainError("skip_leading_frames must be non-negative");
  Corpus c = adapter_template(options.adapter);
  const fs::path subjects_csv = options.subjects_csv.empty() ? raw / "subjects.csv" : options.subjects_csv;
  if (!fs::exists(subjects_csv)) throw LoadError(subjects_csv.string() + ": missing file");
  c.subjects = load_subjects(subjects_csv);

  std::vector<fs::path> subject_dirs;
  for (const auto& e : fs::directory_iterator(raw)) {
    if (e.is_directory()) subject_dirs.push_back(e.path());
  }
  std::sort(subject_dirs.begin(), subject_dirs.end());
  for (const auto& dir : subject_dirs) {
    const std::string subject = dir.filename().string();
    if (c.find_subject(subject) == nullptr) {
      throw LoadError(dir.string() + ": subject '" + subject + "' missing from " + subjects_csv.string());
    }
    std::vector<std::pair<int, fs::path>> recordings;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (!e.is_regular_file() || e.path().extension() != ".txt") continue;
      const std::string stem = e.path().stem().string();
      if (!all_digits(stem)) continue;
      const int posture = std::stoi(stem);
      if (options.adapter == Adapter::kPmatData) merge_postures(posture);
      recordings.emplace_back(posture, e.path());
    }
    std::sort(recordings.begin(), recordings.end());
    for (const auto& [posture, file] : recordings) {
      read_recording(c, file, subject, posture, options.skip_leading_frames);
    }
  }
  // Subjects without recordings are dropped.
  std::erase_if(c.subjects, [&](const SubjectRecord& s) {
    return std::none_of(c.frames.begin(), c.frames.end(), [&](const PressureFrame& f) { return f.subject_id == s.subject_id; });
  });
  c.provenance["adapter"] = to_string(options.adapter);
  c.provenance["skip_leading_frames"] = options.skip_leading_frames;
  c.canonicalize();
  c.validate();
  return c;
}

}  // namespace bedsense
