#include "bedsense/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <tuple>

#include "bedsense/error.hpp"
#include "bedsense/textio.hpp"

#ifndef BEDSENSE_CONFIG_DIR
#define BEDSENSE_CONFIG_DIR "config"
#endif

namespace bedsense {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void GridSpec::validate() const {
  if (rows <= 0 || cols <= 0) throw DomainError("grid rows and cols must be positive");
  if (!(sensor_ceiling > 0.0) || !std::isfinite(sensor_ceiling)) {
    throw DomainError("sensor_ceiling must be positive and finite");
  }
  if (!(frame_rate_hz > 0.0) || !std::isfinite(frame_rate_hz)) {
    throw DomainError("frame_rate_hz must be positive and finite");
  }
}

double compute_bmi(double weight_kg, double height_m) {
  if (!(weight_kg > 0.0) || !(height_m > 0.0)) {
    throw DomainError("compute_bmi: weight and height must be positive");
  }
  return weight_kg / (height_m * height_m);
}

namespace {

bool valid_subject_id(const std::string& id) {
  if (id.empty()) return false;
  return std::none_of(id.begin(), id.end(), [](char c) {
    return c == ',' || c == '"' || c == '\n' || c == '\r';
  });
}

auto frame_key(const PressureFrame& f) {
  return std::tie(f.subject_id, f.posture_id, f.frame_index);
}

}  // namespace

SubjectRecord make_subject(std::string subject_id, double height_m, double weight_kg,
                           std::optional<double> age_years) {
  if (!valid_subject_id(subject_id)) {
    throw DomainError("invalid subject id '" + subject_id + "'");
  }
  if (age_years && !(*age_years > 0.0)) {
    throw DomainError("subject " + subject_id + ": age must be positive");
  }
  SubjectRecord rec;
  rec.subject_id = std::move(subject_id);
  rec.height_m = height_m;
  rec.weight_kg = weight_kg;
  rec.age_years = age_years;
  rec.bmi = compute_bmi(weight_kg, height_m);
  if (!(rec.bmi > 10.0 && rec.bmi < 60.0)) {
    throw DomainError("subject " + rec.subject_id + ": BMI " +
                      textio::format_double(rec.bmi) + " outside sanity band (10, 60)");
  }
  return rec;
}

const SubjectRecord* Corpus::find_subject(const std::string& subject_id) const {
  const auto it = std::lower_bound(
      subjects.begin(), subjects.end(), subject_id,
      [](const SubjectRecord& s, const std::string& id) { return s.subject_id < id; });
  if (it == subjects.end() || it->subject_id != subject_id) return nullptr;
  return &*it;
}

void Corpus::canonicalize() {
  std::stable_sort(subjects.begin(), subjects.end(),
                   [](const auto& a, const auto& b) { return a.subject_id < b.subject_id; });
  std::stable_sort(frames.begin(), frames.end(),
                   [](const auto& a, const auto& b) { return frame_key(a) < frame_key(b); });
}

void Corpus::validate() const {
  grid.validate();
  if (feature_mask.count() < 12) {
    throw DomainError("feature mask must enable at least 12 features");
  }
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const auto& s = subjects[i];
    if (i > 0 && !(subjects[i - 1].subject_id < s.subject_id)) {
      throw DomainError("subjects not sorted or duplicated at '" + s.subject_id + "'");
    }
    if (!valid_subject_id(s.subject_id)) throw DomainError("invalid subject id");
    if (s.bmi != compute_bmi(s.weight_kg, s.height_m)) {
      throw DomainError("subject " + s.subject_id + ": bmi inconsistent with weight/height");
    }
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    if (!(f.grid == grid)) throw DomainError("frame grid differs from corpus grid");
    if (f.values.size() != grid.cell_count()) throw DomainError("frame has wrong cell count");
    if (f.frame_index < 0) throw DomainError("negative frame_index");
    if (find_subject(f.subject_id) == nullptr) {
      throw DomainError("frame references unknown subject '" + f.subject_id + "'");
    }
    for (double v : f.values) {
      if (!(v >= 0.0 && v <= grid.sensor_ceiling)) {
        throw DomainError("frame value outside [0, sensor_ceiling]");
      }
    }
    if (i > 0 && !(frame_key(frames[i - 1]) < frame_key(f))) {
      throw DomainError("frames not in canonical order or duplicated");
    }
  }
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string manifest_text(const Corpus& c) {
  ordered_json m;
  m["name"] = c.name;
  m["rows"] = c.grid.rows;
  m["cols"] = c.grid.cols;
  m["sensor_ceiling"] = c.grid.sensor_ceiling;
  m["frame_rate_hz"] = c.grid.frame_rate_hz;
  ordered_json mask = ordered_json::array();
  for (std::size_t i = 0; i < kFeatureCount; ++i) mask.push_back(c.feature_mask.test(i));
  m["feature_mask"] = mask;
  if (!c.posture_groups.empty()) {
    ordered_json groups = ordered_json::object();
    for (const auto& [raw, group] : c.posture_groups) groups[std::to_string(raw)] = group;
    m["posture_groups"] = groups;
  }
  if (!c.provenance.empty()) m["provenance"] = c.provenance;
  return m.dump(2) + "\n";
}

std::string subjects_text(const Corpus& c) {
  std::string out = "subject_id,height_m,weight_kg,age_years\n";
  for (const auto& s : c.subjects) {
    out += s.subject_id;
    out += ',';
    textio::append_double(out, s.height_m);
    out += ',';
    textio::append_double(out, s.weight_kg);
    out += ',';
    if (s.age_years) textio::append_double(out, *s.age_years);
    out += '\n';
  }
  return out;
}

std::string frames_header(std::size_t cells) {
  std::string out = "subject_id,posture_id,frame_index";
  for (std::size_t i = 0; i < cells; ++i) out += ",v" + std::to_string(i);
  out += '\n';
  return out;
}

std::string frames_text(const Corpus& c) {
  std::string out = frames_header(c.grid.cell_count());
  out.reserve(out.size() + c.frames.size() * c.grid.cell_count() * 6);
  for (const auto& f : c.frames) {
    out += f.subject_id;
    out += ',';
    out += std::to_string(f.posture_id);
    out += ',';
    out += std::to_string(f.frame_index);
    for (double v : f.values) {
      out += ',';
      textio::append_double(out, v);
    }
    out += '\n';
  }
  return out;
}

[[noreturn]] void fail(const fs::path& file, std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << file.string();
  if (line > 0) msg << ":" << line;
  msg << ": " << what;
  throw LoadError(msg.str());
}

double require_number(const ordered_json& m, const char* key, const fs::path& file) {
  if (!m.contains(key) || !m[key].is_number()) fail(file, 0, std::string("missing numeric key '") + key + "'");
  return m[key].get<double>();
}

void parse_manifest(Corpus& c, const fs::path& file) {
  ordered_json m;
  try {
    m = ordered_json::parse(textio::read_file(file));
  } catch (const nlohmann::json::exception& e) {
    fail(file, 0, e.what());
  }
  if (!m.is_object()) fail(file, 0, "manifest must be a JSON object");
  if (!m.contains("name") || !m["name"].is_string()) fail(file, 0, "missing string key 'name'");
  c.name = m["name"].get<std::string>();
  for (const char* key : {"rows", "cols"}) {
    if (!m.contains(key) || !m[key].is_number_integer()) {
      fail(file, 0, std::string("missing integer key '") + key + "'");
    }
  }
  c.grid.rows = m["rows"].get<int>();
  c.grid.cols = m["cols"].get<int>();
  c.grid.sensor_ceiling = require_number(m, "sensor_ceiling", file);
  c.grid.frame_rate_hz = require_number(m, "frame_rate_hz", file);
  try {
    c.grid.validate();
  } catch (const DomainError& e) {
    fail(file, 0, e.what());
  }
  if (!m.contains("feature_mask") || !m["feature_mask"].is_array() ||
      m["feature_mask"].size() != kFeatureCount) {
    fail(file, 0, "feature_mask must be an array of 14 booleans");
  }
  c.feature_mask.reset();
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (!m["feature_mask"][i].is_boolean()) fail(file, 0, "feature_mask entries must be booleans");
    c.feature_mask.set(i, m["feature_mask"][i].get<bool>());
  }
  if (c.feature_mask.count() < 12) fail(file, 0, "feature_mask must enable at least 12 features");
  c.posture_groups.clear();
  if (m.contains("posture_groups")) {
    for (const auto& [raw, group] : m["posture_groups"].items()) {
      long long raw_id = 0;
      if (!textio::parse_int(raw, raw_id) || !group.is_number_integer()) {
        fail(file, 0, "posture_groups must map integer ids to integer groups");
      }
      c.posture_groups[static_cast<int>(raw_id)] = group.get<int>();
    }
  }
  c.provenance = m.contains("provenance") ? m["provenance"] : ordered_json::object();
}

void parse_subjects(Corpus& c, const fs::path& file) {
  const std::string text = textio::read_file(file);
  textio::LineReader reader(text);
  std::string_view line;
  if (!reader.next(line) || line != "subject_id,height_m,weight_kg,age_years") {
    fail(file, 1, "expected header 'subject_id,height_m,weight_kg,age_years'");
  }
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto fields = textio::split_csv_line(line);
    if (fields.size() != 4) fail(file, reader.line_number(), "expected 4 fields");
    double height = 0, weight = 0, age = 0;
    if (!textio::parse_double(fields[1], height)) fail(file, reader.line_number(), "bad height_m");
    if (!textio::parse_double(fields[2], weight)) fail(file, reader.line_number(), "bad weight_kg");
    std::optional<double> age_opt;
    if (!fields[3].empty()) {
      if (!textio::parse_double(fields[3], age)) fail(file, reader.line_number(), "bad age_years");
      age_opt = age;
    }
    try {
      c.subjects.push_back(make_subject(std::string(fields[0]), height, weight, age_opt));
    } catch (const DomainError& e) {
      fail(file, reader.line_number(), e.what());
    }
  }
  std::sort(c.subjects.begin(), c.subjects.end(),
            [](const auto& a, const auto& b) { return a.subject_id < b.subject_id; });
  for (std::size_t i = 1; i < c.subjects.size(); ++i) {
    if (c.subjects[i - 1].subject_id == c.subjects[i].subject_id) {
      fail(file, 0, "duplicate subject '" + c.subjects[i].subject_id + "'");
    }
  }
}

void parse_frames(Corpus& c, const fs::path& file) {
  const std::string text = textio::read_file(file);
  textio::LineReader reader(text);
  std::string_view line;
  const std::size_t cells = c.grid.cell_count();
  std::string header = frames_header(cells);
  header.pop_back();
  if (!reader.next(line) || line != header) {
    fail(file, 1, "header does not match grid (expected subject_id,posture_id,frame_index,v0..v" +
                      std::to_string(cells - 1) + ")");
  }
  while (reader.next(line)) {
    if (line.empty()) continue;
    const std::size_t ln = reader.line_number();
    const auto fields = textio::split_csv_line(line);
    if (fields.size() != cells + 3) {
      fail(file, ln, "expected " + std::to_string(cells + 3) + " fields, found " +
                         std::to_string(fields.size()));
    }
    PressureFrame f;
    f.grid = c.grid;
    f.subject_id = std::string(fields[0]);
    if (c.find_subject(f.subject_id) == nullptr) {
      fail(file, ln, "unknown subject_id '" + f.subject_id + "'");
    }
    long long posture = 0, index = 0;
    if (!textio::parse_int(fields[1], posture)) fail(file, ln, "bad posture_id");
    if (!textio::parse_int(fields[2], index) || index < 0) fail(file, ln, "bad frame_index");
    f.posture_id = static_cast<int>(posture);
    f.frame_index = index;
    f.values.resize(cells);
    for (std::size_t i = 0; i < cells; ++i) {
      double v = 0;
      if (!textio::parse_double(fields[i + 3], v)) {
        fail(file, ln, "bad value in column v" + std::to_string(i));
      }
      if (!(v >= 0.0 && v <= c.grid.sensor_ceiling)) {
        fail(file, ln, "value " + std::string(fields[i + 3]) + " in column v" + std::to_string(i) +
                           " outside [0, " + textio::format_double(c.grid.sensor_ceiling) + "]");
      }
      f.values[i] = v;
    }
    c.frames.push_back(std::move(f));
  }
  std::stable_sort(c.frames.begin(), c.frames.end(),
                   [](const auto& a, const auto& b) { return frame_key(a) < frame_key(b); });
  for (std::size_t i = 1; i < c.frames.size(); ++i) {
    if (frame_key(c.frames[i - 1]) == frame_key(c.frames[i])) {
      fail(file, 0, "duplicate frame (" + c.frames[i].subject_id + ", " +
                        std::to_string(c.frames[i].posture_id) + ", " +
                        std::to_string(c.frames[i].frame_index) + ")");
    }
  }
}

}  // namespace

std::vector<SubjectRecord> load_subjects(const fs::path& csv_path) {
  Corpus c;
  parse_subjects(c, csv_path);
  return c.subjects;
}

Corpus load_corpus(const fs::path& root) {
  Corpus c;
  for (const char* name : {"manifest.json", "subjects.csv", "frames.csv"}) {
    if (!fs::exists(root / name)) fail(root / name, 0, "missing file");
  }
  parse_manifest(c, root / "manifest.json");
  parse_subjects(c, root / "subjects.csv");
  parse_frames(c, root / "frames.csv");
  return c;
}

void save_corpus(const Corpus& corpus, const fs::path& root) {
  corpus.validate();
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError(root.string() + ": " + ec.message());
  textio::write_file_atomic(root / "subjects.csv", subjects_text(corpus));
  textio::write_file_atomic(root / "frames.csv", frames_text(corpus));
  textio::write_file_atomic(root / "manifest.json", manifest_text(corpus));
}

std::uint64_t corpus_checksum(const Corpus& corpus) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
  };
  mix(manifest_text(corpus));
  mix(subjects_text(corpus));
  mix(frames_text(corpus));
  return h;
}

// ---------------------------------------------------------------------------
// Posture groups

PostureMap::PostureMap(std::map<int, int> table) : table_(std::move(table)) {}

PostureMap PostureMap::load(const fs::path& csv_path) {
  const std::string text = textio::read_file(csv_path);
  textio::LineReader reader(text);
  std::string_view line;
  if (!reader.next(line) || line != "raw_id,group_id") {
    fail(csv_path, 1, "expected header 'raw_id,group_id'");
  }
  std::map<int, int> table;
  while (reader.next(line)) {
    if (line.empty() || line.front() == '#') continue;
    const auto fields = textio::split_csv_line(line);
    long long raw = 0, group = 0;
    if (fields.size() < 2 || !textio::parse_int(fields[0], raw) ||
        !textio::parse_int(fields[1], group)) {
      fail(csv_path, reader.line_number(), "expected 'raw_id,group_id'");
    }
    if (!table.emplace(static_cast<int>(raw), static_cast<int>(group)).second) {
      fail(csv_path, reader.line_number(), "duplicate raw_id");
    }
  }
  return PostureMap(std::move(table));
}

const PostureMap& PostureMap::pmatdata() {
  static const PostureMap map = load(config_dir() / "pmatdata_postures.csv");
  return map;
}

int PostureMap::group_of(int raw_id) const {
  const auto it = table_.find(raw_id);
  if (it == table_.end()) {
    throw DomainError("posture id " + std::to_string(raw_id) + " not in posture table");
  }
  return it->second;
}

std::size_t PostureMap::group_count() const {
  std::vector<int> groups;
  for (const auto& [raw, group] : table_) groups.push_back(group);
  std::sort(groups.begin(), groups.end());
  return static_cast<std::size_t>(std::unique(groups.begin(), groups.end()) - groups.begin());
}

int merge_postures(int raw_posture_id) {
  if (raw_posture_id < 1 || raw_posture_id > 17) {
    throw DomainError("PmatData posture id must be in 1..17, got " + std::to_string(raw_posture_id));
  }
  return PostureMap::pmatdata().group_of(raw_posture_id);
}

fs::path config_dir() {
  if (const char* env = std::getenv("BEDSENSE_CONFIG_DIR"); env != nullptr && *env != '\0') {
    return fs::path(env);
  }
  return fs::path(BEDSENSE_CONFIG_DIR);
}

}  // namespace bedsense
