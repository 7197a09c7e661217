#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>

#include "postcheck/checkpoint.hpp"
#include "postcheck/common/error.hpp"
#include "postcheck/common/json_util.hpp"
#include "postcheck/cross_validate.hpp"
#include "postcheck/dataset/csv.hpp"
#include "postcheck/dataset/folds.hpp"
#include "postcheck/dataset/synth.hpp"
#include "postcheck/evaluation.hpp"
#include "postcheck/features.hpp"
#include "postcheck/pipeline.hpp"

namespace postcheck::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using pipeline::RunConfig;

struct Globals {
  std::string output_dir;
  std::string config;
  std::string preset = "full";
  std::optional<std::uint64_t> seed;
  std::string corpus;
};

struct Context {
  RunConfig cfg;
  fs::path root;
  std::ostream& out;
  std::ostream& err;
};

Context resolve(const Globals& g, std::ostream& out, std::ostream& err) {
  RunConfig base;
  if (g.preset == "benchmark") base = RunConfig::benchmark();
  else if (g.preset != "full") throw ConfigError("unknown preset '" + g.preset + "' (full or benchmark)");
  RunConfig cfg = g.config.empty() ? base : RunConfig::load(g.config, base);
  if (g.seed) cfg.seed = *g.seed;
  if (!g.corpus.empty()) cfg.paths.corpus = g.corpus;
  fs::path root = cfg.paths.output_dir;
  if (const char* env = std::getenv("POSTCHECK_OUTPUT_ROOT"); env && *env) root = env;
  if (!g.output_dir.empty()) root = g.output_dir;
  cfg.paths.output_dir = root;
  if (cfg.paths.corpus.empty()) cfg.paths.corpus = root / "corpus.csv";
  return {std::move(cfg), root, out, err};
}

fs::path run_dir(const Context& c, const std::string& name) {
  const fs::path d = c.root / name;
  fs::create_directories(d);
  return d;
}

void write_resolved(const fs::path& dir, const Context& c, const std::string& command, json extra = json::object()) {
  json j = {{"command", command}, {"seed", c.cfg.seed}, {"config", c.cfg.to_json()}};
  for (auto& [k, v] : extra.items()) j[k] = v;
  write_json_file(dir / "resolved_config.json", j);
}

std::vector<dataset::RawRecord> load_labeled(const Context& c, dataset::DropReport* report = nullptr) {
  auto [records, drops] = dataset::drop_invalid(dataset::load_corpus(c.cfg.paths.corpus, c.cfg.schema));
  if (report) *report = drops;
  std::vector<dataset::RawRecord> labeled;
  for (auto& r : records) {
    if (r.label) labeled.push_back(std::move(r));
  }
  if (labeled.size() != records.size()) {
    c.err << "warning: skipped " << records.size() - labeled.size() << " unlabeled rows\n";
  }
  if (labeled.empty()) throw SchemaError("no labeled rows in " + c.cfg.paths.corpus.string());
  return labeled;
}

double auc_of(const Eigen::VectorXd& scores, std::span<const int> labels) {
  return evaluation::roc_auc(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())), labels);
}

void write_predictions(const Context& c, const fs::path& dir, std::span<const std::string> ids,
                       const Eigen::VectorXd& scores, std::span<const int> labels) {
  {
    std::ofstream p(dir / "predictions.csv");
    dataset::write_csv_row(p, {"id", "score"});
    for (std::size_t i = 0; i < ids.size(); ++i) {
      std::ostringstream s;
      s.precision(17);
      s << scores(static_cast<Eigen::Index>(i));
      dataset::write_csv_row(p, {ids[i], s.str()});
    }
  }
  {
    std::ofstream l(dir / "labels.csv");
    dataset::write_csv_row(l, {"id", "label"});
    for (std::size_t i = 0; i < ids.size(); ++i) dataset::write_csv_row(l, {ids[i], std::to_string(labels[i])});
  }
  write_json_file(c.root / "last_run.json",
                  {{"predictions", (dir / "predictions.csv").string()}, {"labels", (dir / "labels.csv").string()},
                   {"name", dir.filename().string()}});
}

struct PreparedSplit {
  training::CorpusCache corpus;
  pipeline::Split split;
  std::vector<std::string> test_ids;
};

PreparedSplit prepare_split(const Context& c) {
  training::CorpusCache corpus(load_labeled(c), pipeline::image_resolver(c.cfg));
  const auto [train_rows, test_rows] = pipeline::holdout_rows(corpus, c.cfg.holdout, c.cfg.seed);
  auto split = pipeline::make_split(corpus, train_rows, test_rows, c.cfg.backbone);
  std::vector<std::string> ids;
  for (const auto& s : split.test) ids.push_back(s.id);
  return {std::move(corpus), std::move(split), std::move(ids)};
}

json history_lines(const fs::path& dir, const training::TrainHistory& h) {
  std::ofstream(dir / "history.jsonl") << h.to_json_lines();
  return {{"best_epoch", h.best_epoch},
          {"best_val_auc", h.best_val_auc ? json(*h.best_val_auc) : json(nullptr)}};
}

// ---------------------------------------------------------------- commands

void cmd_synth(const Context& c, int n, double signal, const std::string& out_path) {
  dataset::SignalSpec spec;
  spec.signal = signal;
  const auto records = dataset::synthesize_corpus(n, c.cfg.seed, spec);
  const fs::path path = out_path.empty() ? c.cfg.paths.corpus : fs::path(out_path);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  dataset::write_corpus(path, records, c.cfg.schema);
  const auto dir = run_dir(c, "synth");
  int pos = 0;
  for (const auto& r : records) pos += r.label.value_or(0) == 1;
  write_resolved(dir, c, "synth", {{"n", n}, {"signal", signal}, {"corpus", path.string()}});
  write_json_file(dir / "summary.json", {{"rows", n}, {"unreliable", pos}, {"reliable", n - pos}});
  c.out << "wrote " << n << " rows (" << n - pos << " reliable, " << pos << " unreliable) to " << path.string()
        << "\n";
}

void cmd_preprocess(const Context& c, int folds) {
  auto [records, report] = dataset::drop_invalid(dataset::load_corpus(c.cfg.paths.corpus, c.cfg.schema));
  const auto dir = run_dir(c, "preprocess");
  // The whole file plays the training split here.
  const auto floor = dataset::min_timestamp(records);
  const auto clean = dataset::fill_missing(records, floor);
  std::vector<dataset::RawRecord> lifted;
  for (const auto& r : clean) lifted.push_back(dataset::to_raw(r));
  const fs::path clean_path = dir / ("clean" + c.cfg.paths.corpus.extension().string());
  dataset::write_corpus(clean_path, lifted, c.cfg.schema);
  write_json_file(dir / "drop_report.json", report.to_json());

  auto prepared = features::prepare_records(clean, pipeline::image_resolver(c.cfg));
  std::vector<dataset::CleanRecord> labeled;
  for (const auto& r : clean)
    if (r.label) labeled.push_back(r);
  const auto scores = features::UserScoreTable::build(labeled);
  write_json_file(dir / "user_scores.json", scores.to_json());
  features::write_feature_matrix(dir / "features", features::build_meta_matrix(prepared, scores));
  {
    std::ofstream t(dir / "normalized_text.csv");
    dataset::write_csv_row(t, {"id", "text"});
    for (const auto& p : prepared) dataset::write_csv_row(t, {p.record.id, p.text.text});
  }
  if (labeled.size() >= static_cast<std::size_t>(folds)) {
    write_json_file(dir / "fold_plan.json",
                    dataset::make_folds(labeled, folds, c.cfg.seed, c.cfg.stratified).to_json());
  }
  write_resolved(dir, c, "preprocess", {{"timestamp_floor", floor ? json(*floor) : json(nullptr)}, {"folds", folds}});
  c.out << "kept " << clean.size() << " rows, dropped " << report.dropped.size() << "; outputs in " << dir.string()
        << "\n";
}

std::unique_ptr<tabular::TabularModel> fit_tabular(const Context& c, const std::string& model,
                                                   const Eigen::MatrixXd& X, std::span<const int> y,
                                                   json& spec_out) {
  if (model == "stack" || model == "blend") {
    tabular::EnsembleConfig ec = c.cfg.ensemble;
    ec.mode = model == "stack" ? tabular::EnsembleMode::stacking : tabular::EnsembleMode::blending;
    ec.seed = c.cfg.seed;
    spec_out = ec.to_json();
    return model == "stack" ? std::unique_ptr<tabular::TabularModel>(tabular::train_stacking(ec, X, y))
                            : std::unique_ptr<tabular::TabularModel>(tabular::train_blending(ec, X, y));
  }
  tabular::BaseLearnerSpec spec{tabular::parse_learner_kind(model), c.cfg.tabular_hyperparameters, c.cfg.seed};
  spec_out = spec.to_json();
  return tabular::train_base(spec, X, y);
}

void cmd_train_tabular(const Context& c, const std::string& model_name) {
  auto ps = prepare_split(c);
  const auto& d = ps.split.data;
  json spec;
  const auto model = fit_tabular(c, model_name, d.train_meta.values, d.train_labels(), spec);
  const Eigen::VectorXd scores = model->predict_proba(d.test_meta.values);
  const auto y = d.test_labels();
  const double auc = auc_of(scores, y);
  const auto dir = run_dir(c, "train-tabular");
  write_predictions(c, dir, ps.test_ids, scores, y);
  const json metrics = {{"auc", auc}, {"n_test", y.size()}};
  tabular::save_model(dir / "model", *model, {{"spec", spec}, {"seed", c.cfg.seed}, {"metrics", metrics}});
  write_json_file(dir / "metrics.json", metrics);
  write_json_file(dir / "standardizer.json", d.train_meta.standardizer.to_json());
  write_resolved(dir, c, "train-tabular", {{"model", model_name}});
  c.out << model_name << " held-out AUC " << auc << "\n";
}

void cmd_train_meta(const Context& c) {
  auto ps = prepare_split(c);
  auto run = pipeline::train_meta(c.cfg, ps.split, c.cfg.seed);
  const auto y = ps.split.test_labels();
  const double auc = auc_of(run.test_scores, y);
  const auto dir = run_dir(c, "train-meta");
  const json metrics = {{"auc", auc}};
  pipeline::meta_checkpoint(*run.model, c.cfg, c.cfg.seed, run.history, metrics).save(dir / "checkpoint");
  write_predictions(c, dir, ps.test_ids, run.test_scores, y);
  write_json_file(dir / "metrics.json", {{"auc", auc}, {"history", history_lines(dir, run.history)}});
  write_resolved(dir, c, "train-meta");
  c.out << "meta MLP held-out AUC " << auc << "; checkpoint " << (dir / "checkpoint").string() << "\n";
}

void cmd_train_text(Context& c, const std::string& blocks, const std::string& backbone,
                    const std::string& backbone_ckpt, int epochs, bool plan_only) {
  if (!backbone.empty()) {
    if (backbone == "toy") c.cfg.backbone = textenc::BackboneConfig::toy();
    else if (backbone == "pretrained") c.cfg.backbone = textenc::BackboneConfig::pretrained_base();
    else throw ConfigError("--backbone must be toy or pretrained");
  }
  if (!backbone_ckpt.empty()) c.cfg.backbone.checkpoint = backbone_ckpt;
  if (!blocks.empty()) c.cfg.blocks = blocks;
  if (epochs > 0) c.cfg.optimizer.epochs = epochs;
  const auto sel = c.cfg.selection();
  const auto dir = run_dir(c, "train-text");
  const json manifest = {{"backbone", c.cfg.backbone.to_json()},
                         {"blocks", sel.to_string()},
                         {"selected_blocks", sel.blocks},
                         {"layers", c.cfg.backbone.layers},
                         {"hidden", c.cfg.backbone.hidden},
                         {"head_input_dim", textenc::head_input_dim(sel, c.cfg.backbone.hidden)},
                         {"head_hidden", textenc::kHeadHidden},
                         {"plan_only", plan_only},
                         {"seed", c.cfg.seed}};
  write_json_file(dir / "run_manifest.json", manifest);
  write_resolved(dir, c, "train-text", {{"plan_only", plan_only}});
  if (plan_only) {
    c.out << "head input dim " << manifest["head_input_dim"].get<int>() << " (" << sel.size() << " blocks x "
          << c.cfg.backbone.hidden << ")\n";
    return;
  }
  textenc::require_backbone_weights(c.cfg.backbone);
  auto ps = prepare_split(c);
  auto run = pipeline::train_text(c.cfg, ps.split, c.cfg.seed);
  const auto y = ps.split.test_labels();
  const double auc = auc_of(run.test_scores, y);
  const json metrics = {{"auc", auc}};
  pipeline::text_checkpoint(*run.model, c.cfg, c.cfg.seed, run.history, metrics).save(dir / "checkpoint");
  write_predictions(c, dir, ps.test_ids, run.test_scores, y);
  write_json_file(dir / "metrics.json", {{"auc", auc}, {"history", history_lines(dir, run.history)}});
  c.out << "text model (blocks " << sel.to_string() << ") held-out AUC " << auc << "\n";
}

void cmd_train_fusion(Context& c, const std::string& strategy, const std::string& combine,
                      const std::string& text_ckpt, const std::string& meta_ckpt, int epochs) {
  if (!strategy.empty()) c.cfg.strategy = strategy;
  if (!combine.empty()) c.cfg.combine = fusion::parse_combine_mode(combine);
  if (!text_ckpt.empty()) c.cfg.paths.text_checkpoint = text_ckpt;
  if (!meta_ckpt.empty()) c.cfg.paths.meta_checkpoint = meta_ckpt;
  if (epochs > 0) c.cfg.optimizer.epochs = epochs;
  auto opt_path = [](const fs::path& p) { return p.empty() ? std::nullopt : std::optional<fs::path>(p); };
  const auto plan = fusion::StrategyPlan::make(fusion::parse_strategy(c.cfg.strategy), c.cfg.seed,
                                               opt_path(c.cfg.paths.text_checkpoint),
                                               opt_path(c.cfg.paths.meta_checkpoint));
  // Assemble before loading data so plan errors surface first.
  fusion::assemble(plan, c.cfg.fusion_config());
  auto ps = prepare_split(c);
  auto run = pipeline::train_fusion(c.cfg, plan, ps.split);
  const auto y = ps.split.test_labels();
  const double auc = auc_of(run.test_scores, y);
  const auto dir = run_dir(c, "train-fusion");
  const json metrics = {{"auc", auc}};
  fusion::fusion_checkpoint(*run.model, plan,
                            {{"metrics", metrics},
                             {"step", run.history.epochs.empty() ? 0 : run.history.epochs.back().step},
                             {"run_config", c.cfg.to_json()}})
      .save(dir / "checkpoint");
  write_json_file(dir / "provenance.json", run.model->provenance());
  write_predictions(c, dir, ps.test_ids, run.test_scores, y);
  write_json_file(dir / "metrics.json", {{"auc", auc},
                                         {"strategy", fusion::to_string(plan.id)},
                                         {"fused_dim", run.model->head_input_dim()},
                                         {"history", history_lines(dir, run.history)}});
  write_resolved(dir, c, "train-fusion", {{"plan", plan.to_json()}});
  c.out << fusion::to_string(plan.id) << " (" << fusion::to_string(c.cfg.combine) << ") held-out AUC " << auc
        << "\n";
}

class TabularFoldPipeline final : public training::FoldPipeline {
 public:
  TabularFoldPipeline(const Context& c, std::string model) : c_(c), model_(std::move(model)) {}
  std::vector<double> fit_predict(const training::FoldData& fold) override {
    json spec;
    const auto m = fit_tabular(c_, model_, fold.train_meta.values, fold.train_labels(), spec);
    const Eigen::VectorXd s = m->predict_proba(fold.test_meta.values);
    return {s.data(), s.data() + s.size()};
  }
  json config() const override { return {{"model", model_}}; }

 private:
  const Context& c_;
  std::string model_;
};

void cmd_cv(Context& c, int folds, const std::string& model, bool no_stratify) {
  if (folds > 0) c.cfg.cv_folds = folds;
  if (no_stratify) c.cfg.stratified = false;
  training::CorpusCache corpus(load_labeled(c), pipeline::image_resolver(c.cfg));
  TabularFoldPipeline p(c, model);
  const auto report = training::cross_validate(p, corpus, c.cfg.cv_folds, c.cfg.seed, c.cfg.stratified);
  // Leakage audit: fitted artifacts never saw the held-out fold.
  bool clean = true;
  for (const auto& f : report.folds) {
    for (const auto& id : f.test_ids) {
      if (f.user_score_sources.count(id) || f.standardizer_sources.count(id)) clean = false;
    }
  }
  const auto dir = run_dir(c, "cv");
  json j = report.to_json();
  j["model"] = model;
  j["leakage_free"] = clean;
  write_json_file(dir / "cv_report.json", j);
  write_json_file(dir / "fold_plan.json", report.plan.to_json());
  write_resolved(dir, c, "cv", {{"model", model}});
  for (const auto& f : report.folds) {
    c.out << "fold " << f.fold << ": " << (f.auc ? std::to_string(*f.auc) : "skipped (" + f.warning + ")") << "\n";
  }
  c.out << model << " " << c.cfg.cv_folds << "-fold mean AUC " << report.mean_auc << " (std " << report.std_auc
        << ")\n";
}

std::map<std::string, std::string> read_id_column(const fs::path& path, const std::string& column) {
  const auto table = dataset::read_csv_file(path);
  const int id = table.column("id");
  const int val = table.column(column);
  if (id < 0 || val < 0) throw SchemaError(path.string() + " needs columns id and " + column);
  std::map<std::string, std::string> out;
  for (const auto& row : table.rows) {
    out[row.at(static_cast<std::size_t>(id))] = row.at(static_cast<std::size_t>(val));
  }
  return out;
}

std::pair<fs::path, fs::path> default_prediction_paths(const Context& c, std::string predictions,
                                                       std::string labels) {
  if (predictions.empty() || labels.empty()) {
    const fs::path last = c.root / "last_run.json";
    if (!fs::exists(last)) throw ConfigError("no --predictions/--labels given and no previous run in " + c.root.string());
    const json j = read_json_file(last);
    if (predictions.empty()) predictions = j.at("predictions").get<std::string>();
    if (labels.empty()) labels = j.at("labels").get<std::string>();
  }
  return {predictions, labels};
}

evaluation::ScoredPredictions join_predictions(const std::map<std::string, double>& scores,
                                               const std::map<std::string, std::string>& labels) {
  evaluation::ScoredPredictions p;
  for (const auto& [id, score] : scores) {
    auto it = labels.find(id);
    if (it == labels.end()) throw SchemaError("no label for id " + id);
    p.scores.push_back(score);
    p.labels.push_back(std::stoi(it->second));
  }
  return p;
}

std::map<std::string, double> read_scores(const fs::path& path) {
  std::map<std::string, double> out;
  for (const auto& [id, v] : read_id_column(path, "score")) {
    try {
      out[id] = std::stod(v);
    } catch (const std::exception&) {
      throw SchemaError("bad score '" + v + "' for id " + id + " in " + path.string());
    }
  }
  return out;
}

std::vector<evaluation::ReferenceRow> reference_table(const std::string& name) {
  if (name == "strategy") return evaluation::reference_strategy_rows();
  if (name == "zoo") return evaluation::reference_meta_zoo_rows();
  if (name == "blocks") return evaluation::reference_block_rows();
  if (name == "none") return {};
  throw ConfigError("--reference must be strategy, zoo, blocks or none");
}

void cmd_evaluate(const Context& c, const std::string& predictions, const std::string& labels, std::string name,
                  const std::string& reference) {
  const auto [pred_path, label_path] = default_prediction_paths(c, predictions, labels);
  const auto p = join_predictions(read_scores(pred_path), read_id_column(label_path, "label"));
  if (name.empty()) name = pred_path.parent_path().filename().string();
  const evaluation::NamedPredictions named{name, p, evaluation::config_fingerprint(c.cfg.to_json())};
  const auto rep = evaluation::report(std::span(&named, 1), reference_table(reference));
  const auto dir = run_dir(c, "evaluate");
  write_json_file(dir / "auc.json", {{"name", name}, {"auc", rep.rows.front().auc},
                                     {"predictions", pred_path.string()}, {"labels", label_path.string()}});
  write_json_file(dir / "report.json", rep.to_json());
  std::ofstream(dir / "report.txt") << rep.to_table();
  write_resolved(dir, c, "evaluate");
  c.out << rep.to_table();
}

void cmd_ensemble(const Context& c, const std::vector<std::string>& files, const std::string& labels) {
  if (files.size() < 2) throw ConfigError("ensemble needs at least two --predictions files");
  std::map<std::string, double> sum;
  for (std::size_t f = 0; f < files.size(); ++f) {
    const auto scores = read_scores(files[f]);
    if (f > 0 && scores.size() != sum.size()) throw SchemaError(files[f] + " scores a different set of ids");
    for (const auto& [id, s] : scores) {
      if (f > 0 && !sum.count(id)) throw SchemaError(files[f] + " has unexpected id " + id);
      sum[id] += s;
    }
  }
  const fs::path label_path = labels.empty() ? fs::path(files.front()).parent_path() / "labels.csv" : fs::path(labels);
  const auto label_map = read_id_column(label_path, "label");
  std::vector<std::string> ids;
  Eigen::VectorXd mean(static_cast<Eigen::Index>(sum.size()));
  std::vector<int> y;
  for (const auto& [id, s] : sum) {
    mean(static_cast<Eigen::Index>(ids.size())) = s / static_cast<double>(files.size());
    ids.push_back(id);
    auto it = label_map.find(id);
    if (it == label_map.end()) throw SchemaError("no label for id " + id);
    y.push_back(std::stoi(it->second));
  }
  const auto dir = run_dir(c, "ensemble");
  write_predictions(c, dir, ids, mean, y);
  const double auc = auc_of(mean, y);
  write_json_file(dir / "metrics.json", {{"auc", auc}, {"members", files}});
  write_resolved(dir, c, "ensemble", {{"members", files}});
  c.out << "ensemble of " << files.size() << " models AUC " << auc << "\n";
}

void cmd_tabular_report(const Context& c) {
  auto ps = prepare_split(c);
  const auto& d = ps.split.data;
  const auto y = d.test_labels();
  std::vector<evaluation::NamedPredictions> results;
  for (auto kind : tabular::kAllLearners) {
    const tabular::BaseLearnerSpec spec{kind, json::object(), c.cfg.seed};
    const auto m = tabular::train_base(spec, d.train_meta.values, d.train_labels());
    const Eigen::VectorXd s = m->predict_proba(d.test_meta.values);
    results.push_back({tabular::to_string(kind), {{s.data(), s.data() + s.size()}, y},
                       evaluation::config_fingerprint(spec.to_json())});
  }
  const auto rep = evaluation::report(results, evaluation::reference_meta_zoo_rows());
  const auto dir = run_dir(c, "tabular-report");
  write_json_file(dir / "report.json", rep.to_json());
  std::ofstream(dir / "report.txt") << rep.to_table();
  write_resolved(dir, c, "tabular-report");
  c.out << rep.to_table();
}

void cmd_fusion_inspect(const Context& c, const std::string& path) {
  const Checkpoint ckpt = Checkpoint::load(path);
  const json& m = ckpt.manifest;
  if (m.contains("plan")) c.out << "plan: " << m["plan"].dump() << "\n";
  if (!m.contains("provenance")) throw CheckpointError("checkpoint manifest has no provenance ledger");
  std::size_t width = 0;
  for (const auto& [name, origin] : m["provenance"].items()) width = std::max(width, name.size());
  for (const auto& [name, origin] : m["provenance"].items()) {
    c.out << name << std::string(width + 2 - name.size(), ' ') << origin.get<std::string>() << "\n";
  }
  c.out << ckpt.tensors.size() << " tensors\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reliability classification for social posts", "postcheck"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--output-dir", g.output_dir, "Output root (default: $POSTCHECK_OUTPUT_ROOT or runs)");
  app.add_option("--config", g.config, "Run config JSON; flags override it");
  app.add_option("--preset", g.preset, "Base settings: full or benchmark")->check(CLI::IsMember({"full", "benchmark"}));
  app.add_option("--seed", g.seed, "Global seed");
  app.add_option("--corpus", g.corpus, "Corpus CSV/TSV (default: <output root>/corpus.csv)");

  int synth_n = 1000;
  double synth_signal = 1.0;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled corpus");
  synth->add_option("--n", synth_n, "Row count")->check(CLI::PositiveNumber);
  synth->add_option("--signal", synth_signal, "Label signal strength in [0, 1]")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--out", synth_out, "Output path (default: the corpus path)");

  int prep_folds = 10;
  auto* preprocess = app.add_subcommand("preprocess", "Clean the corpus and build features and folds");
  preprocess->add_option("--folds", prep_folds, "Fold count for the emitted fold plan")->check(CLI::Range(2, 1000));

  std::string tab_model = "gradient_boosting";
  auto* train_tab = app.add_subcommand("train-tabular", "Train a metadata classifier on a stratified holdout split");
  train_tab->add_option("--model", tab_model, "Learner kind, stack or blend");
  double holdout = 0.0;
  train_tab->add_option("--holdout", holdout, "Test share")->check(CLI::Range(0.01, 0.99));

  auto* train_meta = app.add_subcommand("train-meta", "Pretrain the metadata MLP and save a checkpoint");

  std::string blocks, backbone, backbone_ckpt;
  int text_epochs = 0;
  bool plan_only = false;
  auto* train_text = app.add_subcommand("train-text", "Fine-tune the text model with a [CLS] block selection");
  train_text->add_option("--blocks", blocks, "Block spec, e.g. 1-12, 9,10,11,12 or all");
  train_text->add_option("--backbone", backbone, "toy or pretrained")->check(CLI::IsMember({"toy", "pretrained"}));
  train_text->add_option("--backbone-checkpoint", backbone_ckpt, "Checkpoint with pretrained backbone weights");
  train_text->add_option("--epochs", text_epochs, "Override the epoch count")->check(CLI::PositiveNumber);
  train_text->add_flag("--plan-only", plan_only, "Resolve dimensions and write the run manifest without training");

  std::string strategy, combine, text_ckpt, meta_ckpt;
  int fusion_epochs = 0;
  auto* train_fusion = app.add_subcommand("train-fusion", "Train the multi-input model under a strategy");
  train_fusion->add_option("--strategy", strategy, "s1, s2, s3 or s4");
  train_fusion->add_option("--combine", combine, "concat or add")->check(CLI::IsMember({"concat", "add"}));
  train_fusion->add_option("--text-checkpoint", text_ckpt, "Fine-tuned text checkpoint (S3, S4)");
  train_fusion->add_option("--meta-checkpoint", meta_ckpt, "Pretrained meta checkpoint (S2, S4)");
  train_fusion->add_option("--epochs", fusion_epochs, "Override the epoch count")->check(CLI::PositiveNumber);

  int cv_folds = 0;
  std::string cv_model = "gradient_boosting";
  bool no_stratify = false;
  auto* cv = app.add_subcommand("cv", "k-fold cross validation of a metadata learner");
  cv->add_option("--folds", cv_folds, "Fold count")->check(CLI::Range(2, 1000));
  cv->add_option("--model", cv_model, "Learner kind, stack or blend");
  cv->add_flag("--no-stratify", no_stratify, "Plain (unstratified) folds");

  std::string eval_pred, eval_labels, eval_name, eval_ref = "none";
  auto* evaluate = app.add_subcommand("evaluate", "ROC-AUC of a predictions CSV against a labels CSV");
  evaluate->add_option("--predictions", eval_pred, "CSV with id,score (default: last run)");
  evaluate->add_option("--labels", eval_labels, "CSV with id,label (default: last run)");
  evaluate->add_option("--name", eval_name, "Row name in the report");
  evaluate->add_option("--reference", eval_ref, "Reference rows: strategy, zoo, blocks or none");

  std::vector<std::string> ens_files;
  std::string ens_labels;
  auto* ensemble = app.add_subcommand("ensemble", "Average the probabilities of several prediction files");
  ensemble->add_option("--predictions", ens_files, "Prediction CSVs (id,score); repeat the flag")->required();
  ensemble->add_option("--labels", ens_labels, "Labels CSV (default: next to the first predictions file)");

  auto* tab_report = app.add_subcommand("tabular-report", "Train all eleven metadata learners and compare them");

  std::string inspect_path;
  auto* inspect = app.add_subcommand("fusion-inspect", "Print the parameter provenance ledger of a checkpoint");
  inspect->add_option("checkpoint", inspect_path, "Checkpoint directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << "run with --help for usage\n";
    return 2;
  }

  try {
    Context c = resolve(g, out, err);
    if (holdout > 0.0) c.cfg.holdout = holdout;
    if (*synth) cmd_synth(c, synth_n, synth_signal, synth_out);
    else if (*preprocess) cmd_preprocess(c, prep_folds);
    else if (*train_tab) cmd_train_tabular(c, tab_model);
    else if (*train_meta) cmd_train_meta(c);
    else if (*train_text) cmd_train_text(c, blocks, backbone, backbone_ckpt, text_epochs, plan_only);
    else if (*train_fusion) cmd_train_fusion(c, strategy, combine, text_ckpt, meta_ckpt, fusion_epochs);
    else if (*cv) cmd_cv(c, cv_folds, cv_model, no_stratify);
    else if (*evaluate) cmd_evaluate(c, eval_pred, eval_labels, eval_name, eval_ref);
    else if (*ensemble) cmd_ensemble(c, ens_files, ens_labels);
    else if (*tab_report) cmd_tabular_report(c);
    else if (*inspect) cmd_fusion_inspect(c, inspect_path);
    return 0;
  } catch (const Error& e) {
    err << "error[" << e.category() << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error[internal]: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace postcheck::cli
