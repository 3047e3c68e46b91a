#include "bedsense/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "bedsense/contour.hpp"
#include "bedsense/error.hpp"
#include "bedsense/textio.hpp"

namespace bedsense {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::vector<double> FeatureVector::model_input() const {
  std::vector<double> out;
  out.reserve(mask.count());
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (mask.test(i)) out.push_back(values[i]);
  }
  return out;
}

StatisticalFeatures extract_statistical(const PressureFrame& frame) {
  StatisticalFeatures f;
  const auto& v = frame.values;
  if (v.empty()) return f;

  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  f.max = *hi;
  f.range = *hi - *lo;

  // Mode over integer-rounded readings; ties go to the smaller value.
  std::map<double, std::size_t> counts;
  for (double s : v) ++counts[std::round(s)];
  std::size_t best = 0;
  for (const auto& [value, count] : counts) {
    if (count > best) {
      best = count;
      f.mode = value;
    }
  }

  std::array<std::size_t, kEntropyBins> histogram{};
  const double ceiling = frame.grid.sensor_ceiling;
  for (double s : v) {
    auto bin = static_cast<long long>(std::floor(s / ceiling * kEntropyBins));
    bin = std::clamp<long long>(bin, 0, kEntropyBins - 1);
    ++histogram[static_cast<std::size_t>(bin)];
  }
  const double total = static_cast<double>(v.size());
  for (std::size_t count : histogram) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / total;
    f.entropy -= p * std::log(p);
  }

  double sum = 0.0;
  std::size_t n = 0;
  for (double s : v) {
    if (s != 0.0) {
      sum += s;
      ++n;
    }
    if (s > kTau1 && s < kTau2) f.count_20_60 += 1;
    if (s > kTau2 && s < kTau3) f.count_60_100 += 1;
    if (s > kTau3) f.count_above_100 += 1;
  }
  f.nonzero_count = static_cast<double>(n);
  if (n == 0) return f;

  f.mean = sum / static_cast<double>(n);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double s : v) {
    if (s == 0.0) continue;
    const double d = s - f.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= static_cast<double>(n);
  m3 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  f.variance = m2;
  if (m2 > 0.0) {
    const double sigma = std::sqrt(m2);
    f.skewness = m3 / (sigma * sigma * sigma);
    f.kurtosis = m4 / (m2 * m2);
  }
  return f;
}

ContourFeatures extract_contour_features(const PressureFrame& frame) {
  ContourFeatures out;
  const ContourSet set = trace_contours(frame);
  for (const auto& lines : set.polylines) {
    out.num_isolines += static_cast<double>(lines.size());
    for (const auto& line : lines) {
      for (const auto& p : line.vertices) out.isoline_coord_sum += p.x + p.y;
    }
  }
  return out;
}

FeatureVector extract_all(const PressureFrame& frame, const FeatureMask& mask) {
  const StatisticalFeatures s = extract_statistical(frame);
  const ContourFeatures c = extract_contour_features(frame);
  FeatureVector fv;
  fv.mask = mask;
  fv.values = {s.max,      s.mode,          s.range,       s.entropy,         s.mean,
               s.variance, s.skewness,      s.kurtosis,    s.nonzero_count,   s.count_20_60,
               s.count_60_100, s.count_above_100, c.num_isolines, c.isoline_coord_sum};
  return fv;
}

std::vector<std::string> FeatureTable::subject_ids() const {
  std::vector<std::string> ids;
  for (const auto& r : rows) ids.push_back(r.subject_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

FeatureTable extract_table(const Corpus& corpus) {
  FeatureTable table;
  table.mask = corpus.feature_mask;
  table.subjects = corpus.subjects;
  const PostureMap groups(corpus.posture_groups);
  table.rows.reserve(corpus.frames.size());
  for (const auto& frame : corpus.frames) {
    const SubjectRecord* subject = corpus.find_subject(frame.subject_id);
    if (subject == nullptr) throw DomainError("frame references unknown subject " + frame.subject_id);
    FeatureRow row;
    row.subject_id = frame.subject_id;
    row.posture_id = corpus.posture_groups.empty() ? frame.posture_id : groups.group_of(frame.posture_id);
    row.frame_index = frame.frame_index;
    row.features = extract_all(frame, corpus.feature_mask);
    row.bmi = subject->bmi;
    table.rows.push_back(std::move(row));
  }
  return table;
}

namespace {

fs::path sidecar_path(const fs::path& csv_path) {
  fs::path p = csv_path;
  p += ".json";
  return p;
}

std::string table_header() {
  std::string h = "subject_id,posture_id,frame_index";
  for (std::size_t i = 0; i < kFeatureCount; ++i) h += ",f" + std::to_string(i);
  return h + ",bmi";
}

}  // namespace

void save_feature_table(const FeatureTable& table, const fs::path& csv_path) {
  std::string csv = table_header() + "\n";
  for (const auto& r : table.rows) {
    csv += r.subject_id;
    csv += ',' + std::to_string(r.posture_id) + ',' + std::to_string(r.frame_index);
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      csv += ',';
      if (table.mask.test(i)) textio::append_double(csv, r.features.values[i]);
    }
    csv += ',';
    textio::append_double(csv, r.bmi);
    csv += '\n';
  }

  ordered_json meta;
  ordered_json mask = ordered_json::array();
  for (std::size_t i = 0; i < kFeatureCount; ++i) mask.push_back(table.mask.test(i));
  meta["feature_mask"] = mask;
  ordered_json names = ordered_json::array();
  for (auto name : kFeatureNames) names.push_back(std::string(name));
  meta["feature_names"] = names;
  ordered_json subjects = ordered_json::array();
  for (const auto& s : table.subjects) {
    ordered_json js;
    js["subject_id"] = s.subject_id;
    js["height_m"] = s.height_m;
    js["weight_kg"] = s.weight_kg;
    js["age_years"] = s.age_years ? ordered_json(*s.age_years) : ordered_json(nullptr);
    subjects.push_back(js);
  }
  meta["subjects"] = subjects;
  meta["provenance"] = table.provenance;

  textio::write_file_atomic(sidecar_path(csv_path), meta.dump(2) + "\n");
  textio::write_file_atomic(csv_path, csv);
}

FeatureTable load_feature_table(const fs::path& csv_path) {
  FeatureTable table;
  const std::string text = textio::read_file(csv_path);
  textio::LineReader reader(text);
  std::string_view line;
  auto fail = [&](std::size_t ln, const std::string& what) -> void {
    throw LoadError(csv_path.string() + (ln ? ":" + std::to_string(ln) : "") + ": " + what);
  };
  if (!reader.next(line) || line != table_header()) fail(1, "unexpected header (expected " + table_header() + ")");

  std::optional<FeatureMask> mask;
  const fs::path meta_path = sidecar_path(csv_path);
  if (fs::exists(meta_path)) {
    ordered_json meta;
    try {
      meta = ordered_json::parse(textio::read_file(meta_path));
      FeatureMask m;
      const auto& jm = meta.at("feature_mask");
      if (!jm.is_array() || jm.size() != kFeatureCount) throw LoadError("bad feature_mask");
      for (std::size_t i = 0; i < kFeatureCount; ++i) m.set(i, jm.at(i).get<bool>());
      mask = m;
      for (const auto& js : meta.at("subjects")) {
        std::optional<double> age;
        if (!js.at("age_years").is_null()) age = js.at("age_years").get<double>();
        table.subjects.push_back(make_subject(js.at("subject_id").get<std::string>(),
                                              js.at("height_m").get<double>(),
                                              js.at("weight_kg").get<double>(), age));
      }
      if (meta.contains("provenance")) table.provenance = meta["provenance"];
    } catch (const std::exception& e) {
      throw LoadError(meta_path.string() + ": " + e.what());
    }
  }

  while (reader.next(line)) {
    if (line.empty()) continue;
    const std::size_t ln = reader.line_number();
    const auto fields = textio::split_csv_line(line);
    if (fields.size() != kFeatureCount + 4) fail(ln, "expected " + std::to_string(kFeatureCount + 4) + " fields");
    FeatureRow row;
    row.subject_id = std::string(fields[0]);
    if (row.subject_id.empty()) fail(ln, "empty subject_id");
    long long posture = 0, index = 0;
    if (!textio::parse_int(fields[1], posture)) fail(ln, "bad posture_id");
    if (!textio::parse_int(fields[2], index)) fail(ln, "bad frame_index");
    row.posture_id = static_cast<int>(posture);
    row.frame_index = index;
    FeatureMask row_mask;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      const auto field = fields[3 + i];
      if (field.empty()) continue;
      double v = 0;
      if (!textio::parse_double(field, v) || !std::isfinite(v)) fail(ln, "bad value in f" + std::to_string(i));
      row.features.values[i] = v;
      row_mask.set(i);
    }
    if (!mask) mask = row_mask;
    if (row_mask != *mask) fail(ln, "feature cells do not match the feature mask");
    row.features.mask = *mask;
    if (!textio::parse_double(fields[kFeatureCount + 3], row.bmi)) fail(ln, "bad bmi");
    table.rows.push_back(std::move(row));
  }
  table.mask = mask.value_or(full_feature_mask());
  return table;
}

FeatureTable drop_feature(const FeatureTable& table, std::size_t feature_index) {
  if (feature_index >= kFeatureCount) throw DomainError("drop_feature: index out of range");
  FeatureTable out = table;
  out.mask.reset(feature_index);
  for (auto& r : out.rows) r.features.mask = out.mask;
  return out;
}

}  // namespace bedsense
