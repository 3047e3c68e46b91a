// bedsense command-line driver.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bedsense/dataset.hpp"
#include "bedsense/error.hpp"
#include "bedsense/evalharness.hpp"
#include "bedsense/features.hpp"
#include "bedsense/ingest.hpp"
#include "bedsense/mtnet.hpp"
#include "bedsense/preprocess.hpp"
#include "bedsense/synthgen.hpp"
#include "bedsense/textio.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace bedsense;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

double parse_number(const std::string& s, const std::string& what) {
  double v = 0;
  if (!textio::parse_double(s, v)) throw DomainError("bad " + what + " '" + s + "'");
  return v;
}

NoiseSpec parse_noise(const std::string& s) {
  if (s == "none") return NoiseSpec::none();
  if (s == "moderate") return NoiseSpec::moderate();
  const auto parts = split(s, ',');
  if (parts.size() != 3) throw DomainError("--noise expects none, moderate or SIGMA,DROPOUT,JITTER");
  return {parse_number(parts[0], "noise sigma"), parse_number(parts[1], "dropout"), parse_number(parts[2], "jitter")};
}

std::vector<Posture> parse_postures(const std::string& s) {
  std::vector<Posture> out;
  for (const auto& p : split(s, ',')) {
    if (p == "supine") out.push_back(Posture::kSupine);
    else if (p == "left") out.push_back(Posture::kLeft);
    else if (p == "right") out.push_back(Posture::kRight);
    else throw DomainError("unknown posture '" + p + "'");
  }
  return out;
}

std::vector<int> parse_hidden(const std::string& s) {
  std::vector<int> out;
  for (const auto& p : split(s, ',')) {
    long long v = 0;
    if (!textio::parse_int(p, v) || v < 1) throw DomainError("bad hidden width '" + p + "'");
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw DomainError("--hidden needs at least one width");
  return out;
}

// Saves into a sibling directory and renames it into place.
void save_corpus_atomic(const Corpus& corpus, const fs::path& out) {
  fs::path tmp = out;
  tmp += ".partial";
  fs::remove_all(tmp);
  try {
    save_corpus(corpus, tmp);
    fs::remove_all(out);
    fs::rename(tmp, out);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(tmp, ec);
    throw;
  }
}

ordered_json mask_json(const FeatureMask& mask) {
  ordered_json j = ordered_json::array();
  for (std::size_t i = 0; i < kFeatureCount; ++i) j.push_back(mask.test(i));
  return j;
}

struct Options {
  // synth
  int subjects = 8;
  int frames_per_subject = 200;
  std::string postures = "supine,left,right";
  std::string noise = "moderate";
  std::uint64_t seed = 0;
  // io
  std::string in, out, subjects_csv, model_out, features, report_out, format = "text";
  // ingest
  std::string adapter = "pmatdata";
  int skip_leading = 0;
  // preprocess
  PreprocessOptions pre;
  // train / eval
  std::string optimizer = "lbfgs";
  int max_iter = 14500;
  double weight_decay = 1e-4;
  std::string hidden = "64,128,256,256,256";
  std::string recipe = "mtnet";
  int folds = 10;
  int k = 10;
  std::string metric = "euclidean";
  std::string class_mode = "weight_height";
  int threads = 0;
};

mtnet::TrainConfig train_config(const Options& o) {
  mtnet::TrainConfig c;
  if (o.optimizer != "lbfgs" && o.optimizer != "adaptive") throw DomainError("unknown optimizer '" + o.optimizer + "'");
  c.optimizer = o.optimizer == "lbfgs" ? mtnet::OptimizerKind::kLbfgs : mtnet::OptimizerKind::kAdaptive;
  if (o.max_iter < 1) throw DomainError("--max-iter must be positive");
  if (!(o.weight_decay >= 0.0)) throw DomainError("--weight-decay must be non-negative");
  c.max_iterations = o.max_iter;
  c.weight_decay = o.weight_decay;
  c.hidden = parse_hidden(o.hidden);
  c.seed = o.seed;
  return c;
}

eval::Recipe recipe(const Options& o) {
  eval::Recipe r;
  r.kind = eval::recipe_from_string(o.recipe);
  r.mtnet = train_config(o);
  r.knn_k = o.k;
  r.knn_metric = baselines::metric_from_string(o.metric);
  r.class_mode = baselines::bmi_class_mode_from_string(o.class_mode);
  r.threads = o.threads;
  return r;
}

void cmd_synth(const Options& o) {
  SynthConfig c;
  c.n_subjects = o.subjects;
  c.frames_per_subject = o.frames_per_subject;
  c.postures = parse_postures(o.postures);
  c.noise = parse_noise(o.noise);
  c.seed = o.seed;
  Corpus corpus = generate_corpus(c);
  corpus.provenance["synth"] = {{"subjects", o.subjects},
                                {"frames_per_subject", o.frames_per_subject},
                                {"postures", o.postures},
                                {"noise", o.noise},
                                {"seed", o.seed}};
  save_corpus_atomic(corpus, o.out);
}

void cmd_ingest(const Options& o) {
  IngestOptions opt;
  opt.adapter = adapter_from_string(o.adapter);
  opt.subjects_csv = o.subjects_csv;
  opt.skip_leading_frames = o.skip_leading;
  Corpus corpus = ingest_raw(o.in, opt);
  corpus.provenance["ingest"] = {{"adapter", o.adapter}, {"in", o.in}, {"skip_leading", o.skip_leading}};
  if (!o.subjects_csv.empty()) corpus.provenance["ingest"]["subjects"] = o.subjects_csv;
  save_corpus_atomic(corpus, o.out);
}

void cmd_preprocess(const Options& o) {
  const Corpus in = load_corpus(o.in);
  Corpus out = preprocess_corpus(in, o.pre);
  out.provenance["preprocess"] = {{"median_window", o.pre.median_window},
                                  {"gaussian_window", o.pre.gaussian_window},
                                  {"gaussian_sigma", o.pre.gaussian_sigma},
                                  {"skip_filters", o.pre.skip_filters}};
  save_corpus_atomic(out, o.out);
}

void cmd_features(const Options& o) {
  const Corpus corpus = load_corpus(o.in);
  FeatureTable table = extract_table(corpus);
  table.provenance = {{"corpus", corpus.name},
                      {"corpus_provenance", corpus.provenance},
                      {"features", {{"in", o.in}, {"feature_mask", mask_json(corpus.feature_mask)}}}};
  save_feature_table(table, o.out);
}

void cmd_train(const Options& o) {
  const FeatureTable table = load_feature_table(o.features);
  const auto ids = table.subject_ids();
  mtnet::TrainingData data;
  const auto f = static_cast<Eigen::Index>(table.mask.count());
  data.features.resize(static_cast<Eigen::Index>(table.rows.size()), f);
  data.bmi.resize(static_cast<Eigen::Index>(table.rows.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto in = table.rows[i].features.model_input();
    for (Eigen::Index c = 0; c < f; ++c) data.features(static_cast<Eigen::Index>(i), c) = in[static_cast<std::size_t>(c)];
    data.identities.push_back(static_cast<int>(
        std::lower_bound(ids.begin(), ids.end(), table.rows[i].subject_id) - ids.begin()));
    data.bmi(static_cast<Eigen::Index>(i)) = table.rows[i].bmi;
  }
  data.n_subjects = static_cast<int>(ids.size());
  mtnet::TrainResult r = mtnet::train(data, train_config(o));
  r.model.mask = table.mask;
  r.model.subject_ids = ids;
  r.model.provenance = {{"features", o.features},
                        {"features_provenance", table.provenance},
                        {"stop_reason", optim::to_string(r.optimizer.reason)},
                        {"iterations", r.optimizer.iterations},
                        {"final_loss", r.optimizer.loss}};
  mtnet::save_model(r.model, o.model_out);
}

void cmd_eval(const Options& o) {
  const FeatureTable table = load_feature_table(o.features);
  const eval::FoldPlan plan = eval::make_folds(table, o.folds, o.seed);
  eval::EvaluationReport report = eval::run_cv(table, recipe(o), plan);
  report.config_echo["features"] = o.features;
  report.config_echo["seed"] = o.seed;
  eval::save_report(report, o.report_out);
}

void cmd_importance(const Options& o) {
  const FeatureTable table = load_feature_table(o.features);
  const eval::FoldPlan plan = eval::make_folds(table, o.folds, o.seed);
  eval::ImportanceReport report = eval::drop_column_importance(table, recipe(o), plan);
  report.full.config_echo["features"] = o.features;
  report.full.config_echo["seed"] = o.seed;
  textio::write_file_atomic(o.out, eval::to_json(report).dump(2) + "\n");
}

void cmd_report(const Options& o) {
  const eval::EvaluationReport report = eval::load_report(o.in);
  std::string text;
  if (o.format == "text") text = eval::render_text(report);
  else if (o.format == "csv") text = eval::render_csv(report);
  else throw DomainError("unknown format '" + o.format + "'");
  if (o.out.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
  } else {
    textio::write_file_atomic(o.out, text);
  }
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smart-bed pressure pipeline: synthesis, preprocessing, features, training and evaluation"};
  app.require_subcommand(1);
  Options o;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth->add_option("--subjects", o.subjects, "Number of subjects")->check(CLI::Range(2, 10000));
  synth->add_option("--frames-per-subject", o.frames_per_subject, "Frames per subject")->check(CLI::PositiveNumber);
  synth->add_option("--postures", o.postures, "Comma list of supine,left,right");
  synth->add_option("--noise", o.noise, "none, moderate or SIGMA,DROPOUT,JITTER");
  synth->add_option("--seed", o.seed, "RNG seed")->required();
  synth->add_option("--out", o.out, "Output corpus directory")->required();

  auto* ingest = app.add_subcommand("ingest", "Convert a raw dataset into a corpus");
  ingest->add_option("--adapter", o.adapter, "pmatdata or hrlros")->check(CLI::IsMember({"pmatdata", "hrlros"}));
  ingest->add_option("--in", o.in, "Raw dataset directory")->required()->check(CLI::ExistingDirectory);
  ingest->add_option("--out", o.out, "Output corpus directory")->required();
  ingest->add_option("--subjects", o.subjects_csv, "subjects.csv (default <in>/subjects.csv)");
  ingest->add_option("--skip-leading", o.skip_leading, "Frames dropped from the start of each recording");

  auto* pre = app.add_subcommand("preprocess", "Median and temporal Gaussian filtering");
  pre->add_option("--in", o.in, "Input corpus")->required()->check(CLI::ExistingDirectory);
  pre->add_option("--out", o.out, "Output corpus")->required();
  pre->add_option("--median-window", o.pre.median_window, "Spatial median window (odd)");
  pre->add_option("--gaussian-window", o.pre.gaussian_window, "Temporal Gaussian window (odd)");
  pre->add_option("--gaussian-sigma", o.pre.gaussian_sigma, "Temporal Gaussian sigma (frames)");
  pre->add_flag("--skip-filters", o.pre.skip_filters, "Copy frames unchanged");

  auto* feat = app.add_subcommand("features", "Extract the per-frame feature table");
  feat->add_option("--in", o.in, "Input corpus")->required()->check(CLI::ExistingDirectory);
  feat->add_option("--out", o.out, "features.csv path")->required();

  auto add_model_flags = [&](CLI::App* cmd) {
    cmd->add_option("--optimizer", o.optimizer, "lbfgs or adaptive")->check(CLI::IsMember({"lbfgs", "adaptive"}));
    cmd->add_option("--max-iter", o.max_iter, "Optimizer iteration cap");
    cmd->add_option("--weight-decay", o.weight_decay, "L2 penalty on weights");
    cmd->add_option("--hidden", o.hidden, "Comma list of hidden widths");
  };

  auto* train = app.add_subcommand("train", "Train the multitask network on a feature table");
  train->add_option("--features", o.features, "features.csv")->required()->check(CLI::ExistingFile);
  train->add_option("--model-out", o.model_out, "Model JSON path")->required();
  train->add_option("--seed", o.seed, "Initialization seed")->required();
  add_model_flags(train);

  auto add_cv_flags = [&](CLI::App* cmd) {
    cmd->add_option("--features", o.features, "features.csv")->required()->check(CLI::ExistingFile);
    cmd->add_option("--recipe", o.recipe, "mtnet, knn, gnb or linreg")
        ->check(CLI::IsMember({"mtnet", "knn", "gnb", "linreg"}));
    cmd->add_option("--folds", o.folds, "Number of folds")->check(CLI::Range(2, 1000));
    cmd->add_option("--seed", o.seed, "Fold and initialization seed")->required();
    cmd->add_option("--k", o.k, "kNN neighbours")->check(CLI::PositiveNumber);
    cmd->add_option("--metric", o.metric, "kNN distance")->check(CLI::IsMember({"euclidean", "cosine", "minkowski3"}));
    cmd->add_option("--class-mode", o.class_mode, "BMI class clustering space")
        ->check(CLI::IsMember({"bmi", "age_bmi", "weight_height"}));
    cmd->add_option("--threads", o.threads, "Fold worker threads (0 = hardware)");
    add_model_flags(cmd);
  };

  auto* ev = app.add_subcommand("eval", "Cross-validate a recipe");
  add_cv_flags(ev);
  ev->add_option("--report-out", o.report_out, "Report JSON path (CSV written alongside)")->required();

  auto* imp = app.add_subcommand("importance", "Drop-column feature importance");
  add_cv_flags(imp);
  imp->add_option("--out", o.out, "Importance JSON path")->required();

  auto* rep = app.add_subcommand("report", "Render an evaluation report");
  rep->add_option("--in", o.in, "Report JSON")->required()->check(CLI::ExistingFile);
  rep->add_option("--format", o.format, "csv or text")->check(CLI::IsMember({"csv", "text"}));
  rep->add_option("--out", o.out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "bedsense: error: " << one_line(e.what()) << "\n";
    return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
  }

  try {
    if (synth->parsed()) cmd_synth(o);
    else if (ingest->parsed()) cmd_ingest(o);
    else if (pre->parsed()) cmd_preprocess(o);
    else if (feat->parsed()) cmd_features(o);
    else if (train->parsed()) cmd_train(o);
    else if (ev->parsed()) cmd_eval(o);
    else if (imp->parsed()) cmd_importance(o);
    else if (rep->parsed()) cmd_report(o);
  } catch (const std::exception& e) {
    std::cerr << "bedsense: error: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}
