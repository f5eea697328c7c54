// Command-line front end: one subcommand per stage plus serve and pipeline.
#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "triage/anonymizer.hpp"
#include "triage/augmenter.hpp"
#include "triage/baselines.hpp"
#include "triage/classifier.hpp"
#include "triage/corpus.hpp"
#include "triage/csv.hpp"
#include "triage/evaluator.hpp"
#include "triage/model_loader.hpp"
#include "triage/pipeline.hpp"
#include "triage/service.hpp"
#include "triage/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace triage;

namespace {

json read_json_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(p.string() + " is not valid JSON: " + e.what());
  }
}

void write_json_file(const fs::path& p, const json& j) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty() || out_path == "-") {
    std::cout << content;
    return;
  }
  const fs::path p(out_path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << content;
}

corpus::LabelPolicy load_policy(const std::string& path) {
  return path.empty() ? corpus::LabelPolicy{} : corpus::LabelPolicy::from_json(read_json_file(path));
}

anon::AnonymizerConfig load_anonymizer(const std::string& path) {
  return path.empty() ? anon::AnonymizerConfig{} : anon::AnonymizerConfig::from_json(read_json_file(path));
}

std::atomic<bool> g_stop{false};
extern "C" void on_signal(int) { g_stop = true; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hinglish cybercrime complaint triage"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  // ---------------------------------------------------------------- ingest
  auto* ingest = app.add_subcommand("ingest", "Read a raw CSV into the canonical complaint file");
  std::string in_path, out_path, report_path;
  corpus::IngestOptions iopts;
  ingest->add_option("--input", in_path, "Raw CSV")->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", out_path, "Canonical complaint CSV")->required();
  ingest->add_option("--text-column", iopts.text_column)->capture_default_str();
  ingest->add_option("--label-column", iopts.label_column)->capture_default_str();
  ingest->add_option("--id-column", iopts.id_column, "Empty: row-number ids");
  ingest->add_option("--id-prefix", iopts.id_prefix)->capture_default_str();
  ingest->add_option("--report", report_path, "Cleaning report JSON");

  // ----------------------------------------------------------------- clean
  auto* clean = app.add_subcommand("clean", "Standardize labels, drop blanks and duplicates");
  std::string policy_path, partition = "train";
  clean->add_option("--input", in_path)->required()->check(CLI::ExistingFile);
  clean->add_option("--out", out_path)->required();
  clean->add_option("--labels", policy_path, "Label policy JSON");
  clean->add_option("--partition", partition)->check(CLI::IsMember({"train", "test"}))->capture_default_str();
  clean->add_option("--report", report_path);

  // ------------------------------------------------------------- anonymize
  auto* anonymize = app.add_subcommand("anonymize", "Redact PII and normalize");
  std::string anon_config_path, audit_path;
  bool audit = false, keep_stopwords = false, no_lemma = false, no_normalize = false;
  std::size_t workers = 0;
  anonymize->add_option("--input", in_path)->required()->check(CLI::ExistingFile);
  anonymize->add_option("--out", out_path)->required();
  anonymize->add_option("--config", anon_config_path, "Anonymizer config JSON");
  anonymize->add_flag("--audit", audit, "Record spans and surface values");
  anonymize->add_option("--audit-out", audit_path, "Audit JSONL (with --audit)");
  anonymize->add_flag("--keep-stopwords", keep_stopwords);
  anonymize->add_flag("--no-lemma", no_lemma);
  anonymize->add_flag("--no-normalize", no_normalize);
  anonymize->add_option("--workers", workers);
  anonymize->add_option("--report", report_path);

  // ----------------------------------------------------------------- split
  auto* split = app.add_subcommand("split", "Stratified train/validation/test split");
  std::string test_path;
  double vfrac = 0.2, tfrac = 0.2;
  std::uint64_t seed = 13;
  split->add_option("--input", in_path)->required()->check(CLI::ExistingFile);
  split->add_option("--test", test_path, "Fixed test file; otherwise carved from input")->check(CLI::ExistingFile);
  split->add_option("--out", out_path, "Split directory")->required();
  split->add_option("--validation-fraction", vfrac)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  split->add_option("--test-fraction", tfrac)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  split->add_option("--seed", seed)->capture_default_str();

  // --------------------------------------------------------------- augment
  auto* augment = app.add_subcommand("augment", "Grow minority classes with generated paraphrases");
  std::string split_dir, targets_path, mode, generator = "stub", aug_config_path;
  double multiplier = 0, theta = -1;
  std::size_t cap = 1000000;
  augment->add_option("--split", split_dir)->required()->check(CLI::ExistingDirectory);
  augment->add_option("--out", out_path, "Augmented split directory")->required();
  auto* targets_opt = augment->add_option("--targets", targets_path, "Target distribution JSON");
  auto* mult_opt = augment->add_option("--multiplier", multiplier, "Scale every class by this factor");
  targets_opt->excludes(mult_opt);
  augment->add_option("--cap", cap, "Upper bound with --multiplier")->capture_default_str();
  augment->add_option("--theta", theta, "Similarity threshold")->check(CLI::Range(0.0, 1.0));
  augment->add_option("--mode", mode)->check(CLI::IsMember({"token_greedy_f1", "sentence_cosine"}));
  augment->add_option("--generator", generator, "stub or an http(s) base URL")->capture_default_str();
  augment->add_option("--config", aug_config_path, "Augmentation config JSON");

  // ------------------------------------------------------------ train/grid
  auto* train = app.add_subcommand("train", "Fine-tune one transformer classifier");
  std::string model_name, train_config_path, spec_path;
  train->add_option("--split", split_dir)->required()->check(CLI::ExistingDirectory);
  train->add_option("--model", model_name, "Registry name")->required();
  train->add_option("--config", train_config_path, "Training config JSON");
  train->add_option("--spec", spec_path, "Model spec overrides JSON");
  train->add_option("--out", out_path, "Checkpoint directory")->required();

  auto* grid = app.add_subcommand("grid", "Hyperparameter grid search");
  std::string grid_path;
  grid->add_option("--split", split_dir)->required()->check(CLI::ExistingDirectory);
  grid->add_option("--model", model_name)->required();
  grid->add_option("--grid", grid_path, "Grid JSON")->required()->check(CLI::ExistingFile);
  grid->add_option("--spec", spec_path);
  grid->add_option("--out", out_path, "Best checkpoint directory")->required();
  grid->add_option("--report", report_path, "Grid report JSON");

  // --------------------------------------------------------------- predict
  auto* predict = app.add_subcommand("predict", "Classify text (argument or stdin lines)");
  std::string model_dir, text_arg;
  predict->add_option("--model", model_dir)->required()->check(CLI::ExistingDirectory);
  predict->add_option("--text", text_arg, "Omit to read one complaint per stdin line");
  bool predict_raw = false;
  predict->add_flag("--no-anonymize", predict_raw, "Skip redaction and normalization");

  // -------------------------------------------------------------- baseline
  auto* baseline = app.add_subcommand("baseline", "Classical baselines");
  baseline->require_subcommand(1);
  auto* bfit = baseline->add_subcommand("fit", "Fit one baseline on a split's training partition");
  std::string kind_name, base_config_path;
  bfit->add_option("--kind", kind_name, "gradient_boosted_trees|random_forest|adaptive_boosting|k_nearest_neighbors")
      ->required();
  bfit->add_option("--split", split_dir)->required()->check(CLI::ExistingDirectory);
  bfit->add_option("--config", base_config_path);
  bfit->add_option("--out", out_path)->required();

  // -------------------------------------------------------------- evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a test file");
  std::string avg = "weighted", name, excluded_csv;
  evaluate->add_option("--model", model_dir)->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--test", test_path, "Canonical complaint CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--avg", avg)->check(CLI::IsMember({"macro", "weighted"}))->capture_default_str();
  evaluate->add_option("--name", name, "Model name in the report");
  evaluate->add_option("--labels", policy_path, "Label policy JSON (test-only classes are excluded)");
  evaluate->add_option("--out", out_path, "Report JSON; stdout when omitted");

  // --------------------------------------------------------------- compare
  auto* compare = app.add_subcommand("compare", "Comparison table from evaluation reports");
  std::vector<std::string> report_paths;
  std::string format = "markdown";
  int decimals = 4;
  compare->add_option("reports", report_paths, "Evaluation report JSON files")->required()->check(CLI::ExistingFile);
  compare->add_option("--format", format)->check(CLI::IsMember({"markdown", "csv", "json"}))->capture_default_str();
  compare->add_option("--decimals", decimals)->check(CLI::Range(0, 12))->capture_default_str();
  compare->add_option("--out", out_path);

  // ----------------------------------------------------------------- serve
  auto* serve = app.add_subcommand("serve", "Run the classification HTTP service");
  std::string serve_config_path, store_path, host;
  int port = -1;
  bool no_privacy = false;
  std::vector<std::string> tokens;
  serve->add_option("--config", serve_config_path, "Service config JSON")->envname("TRIAGE_SERVICE_CONFIG");
  serve->add_option("--model", model_dir, "Checkpoint directory")->envname("TRIAGE_MODEL");
  serve->add_option("--host", host)->envname("TRIAGE_HOST");
  serve->add_option("--port", port)->check(CLI::Range(0, 65535))->envname("TRIAGE_PORT");
  serve->add_flag("--no-privacy-mode", no_privacy, "Keep raw text and expose spans")->envname("TRIAGE_NO_PRIVACY_MODE");
  serve->add_option("--token", tokens, "Bearer token, optionally suffixed :audit")
      ->delimiter(',')
      ->envname("TRIAGE_TOKENS");
  serve->add_option("--store", store_path, "Submission JSONL file")->envname("TRIAGE_STORE");

  // -------------------------------------------------------------- pipeline
  auto* pipeline = app.add_subcommand("pipeline", "End-to-end runs");
  pipeline->require_subcommand(1);
  auto* prun = pipeline->add_subcommand("run", "Run every stage, skipping unchanged ones");
  std::string pipeline_config;
  bool force = false;
  prun->add_option("--config", pipeline_config)->required()->check(CLI::ExistingFile);
  prun->add_flag("--force", force, "Rerun every stage");
  auto* pcheck = pipeline->add_subcommand("check", "Validate a pipeline config and exit");
  pcheck->add_option("--config", pipeline_config)->required()->check(CLI::ExistingFile);

  // ----------------------------------------------------------------- synth
  auto* synth_cmd = app.add_subcommand("synth", "Synthetic data");
  synth_cmd->require_subcommand(1);
  auto* ssmoke = synth_cmd->add_subcommand("smoke", "Write the raw smoke dataset");
  ssmoke->add_option("--out", out_path, "Directory for train.csv and test.csv")->required();
  ssmoke->add_option("--seed", seed)->capture_default_str();

  auto* version = app.add_subcommand("version", "Library and toolchain versions");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
  spdlog::set_pattern("[%H:%M:%S] [%l] %v");

  try {
    if (ingest->parsed()) {
      auto r = corpus::ingest_file(in_path, iopts);
      corpus::write_complaints(out_path, r.complaints);
      if (!report_path.empty()) write_json_file(report_path, r.report.to_json());
      spdlog::info("ingested {} complaints ({} dropped)", r.complaints.size(), r.report.total_removed());
    } else if (clean->parsed()) {
      const auto part = partition == "test" ? corpus::Partition::Test : corpus::Partition::Train;
      auto s = corpus::standardize_labels(corpus::read_complaints(in_path), load_policy(policy_path), part);
      auto c = corpus::clean(std::move(s.complaints));
      s.report.then(c.report);
      corpus::write_complaints(out_path, c.complaints);
      if (!report_path.empty()) write_json_file(report_path, s.report.to_json());
      spdlog::info("kept {} of {} complaints", s.report.output_count, s.report.input_count);
    } else if (anonymize->parsed()) {
      auto cfg = load_anonymizer(anon_config_path);
      if (audit) cfg.audit_mode = true;
      if (keep_stopwords) cfg.normalization.remove_stopwords = false;
      if (no_lemma) cfg.normalization.lemmatize = false;
      if (no_normalize) cfg.normalize = false;
      if (workers) cfg.workers = workers;
      auto r = anon::anonymize_corpus(corpus::read_complaints(in_path), cfg);
      corpus::write_complaints(out_path, r.complaints);
      if (cfg.audit_mode && !audit_path.empty()) {
        std::ofstream a(audit_path, std::ios::binary);
        for (const auto& rec : r.audit_records) a << rec.dump() << '\n';
      }
      if (!report_path.empty()) write_json_file(report_path, r.stats.to_json());
      for (const auto& e : r.stats.errors) spdlog::error("{}: {}", e.complaint_id, e.message);
      spdlog::info("anonymized {} complaints, {} failed", r.complaints.size(), r.stats.errors.size());
      if (!r.stats.errors.empty()) return 1;
    } else if (split->parsed()) {
      const auto pool = corpus::read_complaints(in_path);
      corpus::DatasetSplit s;
      if (!test_path.empty()) {
        s = corpus::split(pool, vfrac, seed, corpus::read_complaints(test_path));
      } else {
        if (vfrac + tfrac >= 1.0) throw ConfigError("fractions must sum to less than 1");
        const auto outer = corpus::split(pool, tfrac, seed);
        s = corpus::split(outer.train, vfrac / (1.0 - tfrac), seed + 1, outer.validation);
      }
      corpus::write_split(out_path, s);
      spdlog::info("train {} / validation {} / test {}", s.train.size(), s.validation.size(), s.test.size());
    } else if (augment->parsed()) {
      if (targets_path.empty() && multiplier == 0) throw ConfigError("one of --targets or --multiplier is required");
      auto cfg = aug_config_path.empty() ? aug::AugmentConfig{} : aug::AugmentConfig::from_json(read_json_file(aug_config_path));
      if (theta >= 0) cfg.gate.theta = theta;
      if (!mode.empty()) cfg.gate.mode = aug::parse_mode(mode);
      cfg.gate.validate();
      auto s = corpus::read_split(split_dir);
      const auto targets = targets_path.empty()
                               ? aug::TargetDistribution::from_multiplier(aug::count_classes(s.train), multiplier, cap)
                               : aug::TargetDistribution::load(targets_path);
      pipe::GeneratorConfig gen;
      if (generator != "stub") {
        gen.kind = "http";
        gen.http.base_url = generator;
      }
      auto client = pipe::make_generator(gen);
      const auto r = aug::augment_corpus(s, targets, *client, cfg);
      s.train.insert(s.train.end(), r.additions.begin(), r.additions.end());
      corpus::write_split(out_path, s);
      corpus::write_complaints(fs::path(out_path) / "additions.csv", r.additions);
      write_json_file(fs::path(out_path) / "augmentation_report.json", r.report.to_json());
      write_json_file(fs::path(out_path) / "augmentation_run.json", r.report.run_metadata());
      spdlog::info("added {} complaints", r.additions.size());
    } else if (train->parsed() || grid->parsed()) {
      json spec_json = spec_path.empty() ? json::object() : read_json_file(spec_path);
      spec_json["model_id"] = model_name;
      const auto spec = clf::ModelSpec::from_json(spec_json);
      const auto s = corpus::read_split(split_dir);
      if (train->parsed()) {
        auto cfg = train_config_path.empty() ? clf::TrainingConfig{}
                                             : clf::TrainingConfig::from_json(read_json_file(train_config_path));
        cfg.validate(spec.pretrained());
        auto r = clf::train(s, spec, cfg);
        r.model->save(out_path);
        spdlog::info("best epoch {} metric {:.4f}; saved {}", r.history.best_epoch, r.history.best_metric, out_path);
      } else {
        const auto g = clf::grid_search(s, spec, clf::GridSpec::from_json(read_json_file(grid_path)));
        g.best_model->save(out_path);
        if (!report_path.empty()) write_json_file(report_path, g.to_json());
        spdlog::info("best of {} points: {:.4f}", g.results.size(), g.results.at(g.best_index).metric);
      }
    } else if (predict->parsed()) {
      const auto model = load_classifier(model_dir);
      anon::AnonymizerConfig acfg;
      anon::Redactor redactor(anon::make_recognizer_factory(acfg)());
      auto classify = [&](const std::string& text) {
        const std::string input =
            predict_raw ? text : anon::normalize(redactor.redact(text).text, acfg.normalization);
        std::cout << model->predict(input).to_json().dump() << '\n';
      };
      if (!text_arg.empty()) {
        classify(text_arg);
      } else {
        for (std::string line; std::getline(std::cin, line);) {
          if (!line.empty()) classify(line);
        }
      }
    } else if (bfit->parsed()) {
      const auto cfg = base_config_path.empty() ? base::BaselineConfig{}
                                                : base::BaselineConfig::from_json(read_json_file(base_config_path));
      const auto s = corpus::read_split(split_dir);
      auto m = base::fit(s.train, base::parse_kind(kind_name), cfg);
      m->save(out_path);
      spdlog::info("saved {} to {}", base::display_name(m->baseline_kind()), out_path);
    } else if (evaluate->parsed()) {
      const auto model = load_classifier(model_dir);
      const auto policy = load_policy(policy_path);
      const auto report = pipe::evaluate_model(*model, corpus::read_complaints(test_path), eval::parse_averaging(avg),
                                               name.empty() ? fs::path(model_dir).filename().string() : name,
                                               policy.test_only);
      emit(out_path, report.to_json().dump(2) + "\n");
    } else if (compare->parsed()) {
      std::vector<eval::EvaluationReport> reports;
      for (const auto& p : report_paths) reports.push_back(eval::EvaluationReport::from_json(read_json_file(p)));
      const auto table = eval::compare(reports);
      emit(out_path, format == "csv"    ? table.csv(decimals)
                     : format == "json" ? table.to_json().dump(2) + "\n"
                                        : table.markdown(decimals));
    } else if (serve->parsed()) {
      svc::ServiceConfig cfg =
          serve_config_path.empty() ? svc::ServiceConfig{} : svc::ServiceConfig::from_json(read_json_file(serve_config_path));
      if (!model_dir.empty()) cfg.model_dir = model_dir;
      if (!host.empty()) cfg.host = host;
      if (port >= 0) cfg.port = port;
      if (no_privacy) cfg.privacy_mode = false;
      for (const auto& t : tokens) cfg.tokens.push_back(svc::AuthToken::parse(t));
      if (!store_path.empty()) cfg.storage_path = store_path;
      svc::Service service(cfg);
      service.load_model_async();
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      const int bound = service.start();
      spdlog::info("listening on {}:{}", cfg.host, bound);
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
      spdlog::info("shutting down");
      service.stop();
    } else if (prun->parsed()) {
      const auto cfg = pipe::PipelineConfig::load(pipeline_config);
      pipe::RunOptions opts;
      opts.force = force;
      const auto r = pipe::run(cfg, opts);
      for (const auto& st : r.stages) {
        std::cout << fmt::format("{:<10} {:<8} {}\n", st.name, st.skipped ? "skipped" : "ran",
                                 st.output_fingerprint.substr(0, 16));
      }
      const fs::path table = r.run_dir / "08_evaluate" / "comparison.md";
      if (fs::exists(table)) std::cout << '\n' << std::ifstream(table).rdbuf();
    } else if (pcheck->parsed()) {
      const auto cfg = pipe::PipelineConfig::load(pipeline_config);
      std::cout << "ok: model " << cfg.model << ", run_dir " << cfg.run_dir.string() << '\n';
    } else if (ssmoke->parsed()) {
      const auto d = synth::raw_smoke_dataset(seed);
      fs::create_directories(out_path);
      csv::write_file(fs::path(out_path) / "train.csv", d.train);
      csv::write_file(fs::path(out_path) / "test.csv", d.test);
      spdlog::info("wrote {} train and {} test rows to {}", d.train.rows.size(), d.test.rows.size(), out_path);
    } else if (version->parsed()) {
      std::cout << pipe::version_info().dump(2) << '\n';
    }
  } catch (const pipe::StageError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const ConfigError& e) {
    spdlog::error("configuration: {}", e.what());
    return 2;
  } catch (const UnknownLabelError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
