#include "triage/pipeline.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>
#include <spdlog/version.h>

#include "triage/hashing.hpp"
#include "triage/model_loader.hpp"

namespace triage::pipe {

namespace fs = std::filesystem;
using nlohmann::json;

// ------------------------------------------------------------------- config

namespace {

void check_keys(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(path + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw ConfigError("unknown key " + path + "." + k);
    }
  }
}

template <class F>
auto at_path(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  } catch (const UnknownLabelError& e) {
    throw ConfigError(path + ": " + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string req_string(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError(path + "." + key + " is required");
  if (!j.at(key).is_string() || j.at(key).get<std::string>().empty()) {
    throw ConfigError(path + "." + key + " must be a non-empty string");
  }
  return j.at(key).get<std::string>();
}

double fraction(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path + " must be a number");
  const double f = v.get<double>();
  if (!(f > 0.0 && f < 1.0)) throw ConfigError(path + " must lie in (0, 1)");
  return f;
}

}  // namespace

GeneratorConfig GeneratorConfig::from_json(const json& j) {
  check_keys(j, "augment.generator",
             {"kind", "base_url", "path", "model_id", "seed", "max_tokens", "parallelism", "attempts",
              "timeout_ms", "backoff_ms"});
  GeneratorConfig g;
  g.kind = j.value("kind", "stub");
  if (g.kind != "stub" && g.kind != "http") throw ConfigError("augment.generator.kind must be stub or http");
  auto& h = g.http;
  if (j.contains("base_url")) h.base_url = j.at("base_url").get<std::string>();
  if (j.contains("path")) h.path = j.at("path").get<std::string>();
  if (j.contains("model_id")) h.model_id = j.at("model_id").get<std::string>();
  if (j.contains("seed")) h.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("max_tokens")) h.max_tokens = j.at("max_tokens").get<std::size_t>();
  if (j.contains("parallelism")) h.parallelism = j.at("parallelism").get<std::size_t>();
  if (j.contains("attempts")) h.retry.attempts = j.at("attempts").get<std::size_t>();
  if (j.contains("timeout_ms")) h.retry.timeout = std::chrono::milliseconds(j.at("timeout_ms").get<long>());
  if (j.contains("backoff_ms")) h.retry.backoff = std::chrono::milliseconds(j.at("backoff_ms").get<long>());
  if (h.parallelism == 0 || h.retry.attempts == 0) {
    throw ConfigError("augment.generator parallelism and attempts must be >= 1");
  }
  return g;
}

json GeneratorConfig::to_json() const {
  if (kind == "stub") return {{"kind", kind}};
  json j = {{"kind", kind},
            {"base_url", http.base_url},
            {"path", http.path},
            {"model_id", http.model_id},
            {"max_tokens", http.max_tokens},
            {"parallelism", http.parallelism},
            {"attempts", http.retry.attempts},
            {"timeout_ms", http.retry.timeout.count()},
            {"backoff_ms", http.retry.backoff.count()}};
  if (http.seed) j["seed"] = *http.seed;
  return j;
}

std::unique_ptr<aug::GeneratorClient> make_generator(const GeneratorConfig& config) {
  if (config.kind == "http") return std::make_unique<aug::HttpGeneratorClient>(config.http);
  return std::make_unique<aug::StubGenerator>();
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  check_keys(j, "config",
             {"run_dir", "seed", "data", "labels", "anonymizer", "split", "augment", "train", "baselines",
              "evaluate"});
  PipelineConfig c;
  c.source = j;
  if (j.contains("run_dir")) c.run_dir = j.at("run_dir").get<std::string>();
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer() || j.at("seed").get<long long>() < 0) throw ConfigError("config.seed must be a non-negative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }

  if (!j.contains("data")) throw ConfigError("config.data is required");
  const json& d = j.at("data");
  check_keys(d, "data", {"train", "test", "text_column", "label_column", "id_column", "id_prefix"});
  c.train_file = req_string(d, "train", "data");
  if (d.contains("test")) c.test_file = fs::path(req_string(d, "test", "data"));
  at_path("data", [&] {
    c.ingest.text_column = d.value("text_column", c.ingest.text_column);
    c.ingest.label_column = d.value("label_column", c.ingest.label_column);
    c.ingest.id_column = d.value("id_column", c.ingest.id_column);
    c.ingest.id_prefix = d.value("id_prefix", c.ingest.id_prefix);
    return 0;
  });

  if (j.contains("labels")) check_keys(j.at("labels"), "labels", {"rare_drop", "test_only", "min_samples_per_class", "aliases"});
  if (j.contains("labels")) c.labels = at_path("labels", [&] { return corpus::LabelPolicy::from_json(j.at("labels")); });
  if (j.contains("anonymizer")) {
    c.anonymizer = at_path("anonymizer", [&] { return anon::AnonymizerConfig::from_json(j.at("anonymizer")); });
  }

  if (j.contains("split")) {
    const json& s = j.at("split");
    check_keys(s, "split", {"validation_fraction", "test_fraction"});
    if (s.contains("validation_fraction")) c.validation_fraction = fraction(s.at("validation_fraction"), "split.validation_fraction");
    if (s.contains("test_fraction")) c.test_fraction = fraction(s.at("test_fraction"), "split.test_fraction");
    if (c.validation_fraction + c.test_fraction >= 1.0 && !c.test_file) {
      throw ConfigError("split fractions must sum to less than 1");
    }
  }

  if (j.contains("augment")) {
    const json& a = j.at("augment");
    check_keys(a, "augment", {"enabled", "targets", "multiplier", "cap", "generator", "config"});
    c.augment = a.value("enabled", true);
    if (a.contains("targets")) c.targets_file = fs::path(req_string(a, "targets", "augment"));
    if (a.contains("multiplier")) {
      if (!a.at("multiplier").is_number() || a.at("multiplier").get<double>() < 1.0) {
        throw ConfigError("augment.multiplier must be a number >= 1");
      }
      c.target_multiplier = a.at("multiplier").get<double>();
      c.target_cap = at_path("augment.cap", [&] { return a.value("cap", std::size_t{1000000}); });
    }
    if (c.augment && !c.targets_file && !c.target_multiplier) {
      throw ConfigError("augment needs either augment.targets or augment.multiplier");
    }
    if (c.targets_file && c.target_multiplier) {
      throw ConfigError("augment.targets and augment.multiplier are mutually exclusive");
    }
    if (a.contains("generator")) c.generator = GeneratorConfig::from_json(a.at("generator"));
    if (a.contains("config")) {
      c.augment_config = at_path("augment.config", [&] { return aug::AugmentConfig::from_json(a.at("config")); });
    }
    c.augment_config.anonymizer = c.anonymizer;
  }

  if (!j.contains("train")) throw ConfigError("config.train is required");
  const json& t = j.at("train");
  check_keys(t, "train", {"model", "spec", "config", "grid"});
  c.model = req_string(t, "model", "train");
  if (t.contains("spec")) {
    check_keys(t.at("spec"), "train.spec",
               {"encoder_id", "max_sequence_length", "num_labels", "lowercase", "hinglish_normalize", "d_model",
                "heads", "ffn", "layers", "pooling", "pretrained_dir"});
    c.spec_overrides = t.at("spec");
  }
  if (t.contains("config")) {
    c.training = at_path("train.config", [&] { return clf::TrainingConfig::from_json(t.at("config")); });
  }
  if (t.contains("grid")) c.grid = at_path("train.grid", [&] { return clf::GridSpec::from_json(t.at("grid")); });
  const auto spec = at_path("train", [&] { return c.model_spec(); });
  at_path("train.config", [&] {
    if (c.grid) {
      for (double lr : c.grid->learning_rates) {
        auto probe = c.grid->base;
        probe.learning_rate = lr;
        probe.validate(!spec.pretrained_dir.empty());
      }
    } else {
      c.training.validate(!spec.pretrained_dir.empty());
    }
    return 0;
  });

  if (j.contains("baselines")) {
    const json& b = j.at("baselines");
    check_keys(b, "baselines", {"kinds", "config"});
    if (b.contains("kinds")) {
      if (!b.at("kinds").is_array()) throw ConfigError("baselines.kinds must be an array");
      for (const auto& k : b.at("kinds")) {
        c.baselines.push_back(at_path("baselines.kinds", [&] { return base::parse_kind(k.get<std::string>()); }));
      }
    }
    if (b.contains("config")) {
      c.baseline_config = at_path("baselines.config", [&] { return base::BaselineConfig::from_json(b.at("config")); });
    }
  }

  if (j.contains("evaluate")) {
    const json& e = j.at("evaluate");
    check_keys(e, "evaluate", {"averaging", "decimals"});
    if (e.contains("averaging")) {
      c.averaging = at_path("evaluate.averaging", [&] { return eval::parse_averaging(e.at("averaging").get<std::string>()); });
    }
    if (e.contains("decimals")) c.decimals = e.at("decimals").get<int>();
    if (c.decimals < 0 || c.decimals > 12) throw ConfigError("evaluate.decimals must lie in [0, 12]");
  }
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

clf::ModelSpec PipelineConfig::model_spec() const {
  json j = spec_overrides.is_object() ? spec_overrides : json::object();
  j["model_id"] = model;
  auto spec = clf::ModelSpec::from_json(j);
  spec.validate();
  return spec;
}

// ----------------------------------------------------------------- helpers

std::string hash_directory(const fs::path& dir, const std::set<std::string>& skip) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && !skip.count(e.path().filename().string())) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  Sha256 h;
  for (const auto& f : files) {
    h.field(fs::relative(f, dir).generic_string());
    h.field(sha256_file(f));
  }
  return h.hex();
}

eval::EvaluationReport evaluate_model(const Classifier& model, const Complaints& test,
                                      eval::Averaging averaging, const std::string& name,
                                      const std::set<std::string>& excluded) {
  std::vector<eval::RawPrediction> preds;
  preds.reserve(test.size());
  for (const auto& c : test) {
    const std::string gold = c.category ? std::string(to_string(*c.category)) : c.raw_category.value_or("");
    preds.push_back({gold, model.predict(c.text)});
  }
  return eval::evaluate(preds, averaging, name, excluded);
}

json version_info() {
  return {{"triage", kVersion},
          {"compiler", __VERSION__},
          {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
          {"nlohmann_json", fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR, NLOHMANN_JSON_VERSION_MINOR,
                                        NLOHMANN_JSON_VERSION_PATCH)},
          {"fmt", FMT_VERSION},
          {"spdlog", fmt::format("{}.{}.{}", SPDLOG_VER_MAJOR, SPDLOG_VER_MINOR, SPDLOG_VER_PATCH)}};
}

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> kNames = {"ingest", "clean",     "anonymize", "split",
                                                  "augment", "train",    "baselines", "evaluate"};
  return kNames;
}

json StageRecord::to_json() const {
  return {{"name", name},
          {"dir", dir.generic_string()},
          {"input_fingerprint", input_fingerprint},
          {"output_fingerprint", output_fingerprint},
          {"skipped", skipped},
          {"seconds", seconds},
          {"report", report}};
}

namespace {

// Files whose content carries wall-clock timings; excluded from output hashes.
const std::set<std::string> kVolatile = {"stage.json", "history.json", "grid_report.json"};

void write_json(const fs::path& p, const json& j) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw MissingArtifactError("missing " + p.string());
  return json::parse(in);
}

std::string file_hash_or_empty(const std::optional<fs::path>& p) {
  return p ? sha256_file(*p) : std::string();
}

struct StageContext {
  const PipelineConfig& config;
  const RunOptions& options;
  fs::path run_dir;
  std::vector<StageRecord> records;

  const StageRecord& last() const { return records.back(); }

  fs::path stage_dir(const std::string& name) const {
    const auto& names = stage_names();
    const auto idx = std::find(names.begin(), names.end(), name) - names.begin();
    return run_dir / fmt::format("{:02d}_{}", idx + 1, name);
  }

  // Runs `body` into a scratch directory and swaps it in on success.
  void stage(const std::string& name, const json& stage_config, const std::function<json(const fs::path&)>& body) {
    StageRecord rec;
    rec.name = name;
    rec.dir = stage_dir(name);
    json input = {{"stage", name},
                  {"version", kVersion},
                  {"config", stage_config},
                  {"upstream", records.empty() ? std::string() : records.back().output_fingerprint}};
    rec.input_fingerprint = sha256_hex(input.dump());

    const fs::path marker = rec.dir / "stage.json";
    if (!options.force && fs::exists(marker)) {
      try {
        const json prev = read_json(marker);
        if (prev.at("input_fingerprint") == rec.input_fingerprint &&
            prev.at("output_fingerprint") == hash_directory(rec.dir, kVolatile)) {
          rec.output_fingerprint = prev.at("output_fingerprint").get<std::string>();
          rec.report = prev.value("report", json::object());
          rec.skipped = true;
          spdlog::info("pipeline: {} unchanged, skipped", name);
          records.push_back(std::move(rec));
          return;
        }
      } catch (const std::exception& e) {
        spdlog::warn("pipeline: {} marker unreadable ({}), rerunning", name, e.what());
      }
    }

    spdlog::info("pipeline: running {}", name);
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path scratch = rec.dir.string() + ".partial";
    fs::remove_all(scratch);
    fs::create_directories(scratch);
    try {
      rec.report = body(scratch);
    } catch (const std::exception& e) {
      fs::remove_all(scratch);
      throw StageError(name, e.what());
    }
    rec.output_fingerprint = hash_directory(scratch, kVolatile);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_json(scratch / "stage.json", {{"stage", name},
                                        {"input_fingerprint", rec.input_fingerprint},
                                        {"output_fingerprint", rec.output_fingerprint},
                                        {"seconds", rec.seconds},
                                        {"report", rec.report}});
    fs::remove_all(rec.dir);
    fs::rename(scratch, rec.dir);
    records.push_back(std::move(rec));
  }
};

Complaints read_part(const fs::path& dir, const std::string& name) { return corpus::read_complaints(dir / name); }

}  // namespace

// --------------------------------------------------------------------- run

RunResult run(const PipelineConfig& config, const RunOptions& options) {
  fs::create_directories(config.run_dir);
  StageContext ctx{config, options, config.run_dir, {}};
  const bool has_test = config.test_file.has_value();
  const auto started = std::chrono::system_clock::now();

  json manifest = {{"config", config.source},
                   {"config_sha256", sha256_hex(config.source.dump())},
                   {"versions", version_info()},
                   {"status", "running"}};
  auto write_manifest = [&] {
    json stages = json::array();
    for (const auto& r : ctx.records) stages.push_back(r.to_json());
    manifest["stages"] = stages;
    write_json(config.run_dir / "manifest.json", manifest);
  };

  try {
    // ingest
    ctx.stage("ingest",
              {{"train_sha256", sha256_file(config.train_file)},
               {"test_sha256", file_hash_or_empty(config.test_file)},
               {"text_column", config.ingest.text_column},
               {"label_column", config.ingest.label_column},
               {"id_column", config.ingest.id_column},
               {"id_prefix", config.ingest.id_prefix}},
              [&](const fs::path& out) {
                json report;
                auto train = corpus::ingest_file(config.train_file, config.ingest);
                corpus::write_complaints(out / "train.csv", train.complaints);
                report["train"] = train.report.to_json();
                if (has_test) {
                  auto opts = config.ingest;
                  opts.id_prefix = "t" + opts.id_prefix;
                  auto test = corpus::ingest_file(*config.test_file, opts);
                  corpus::write_complaints(out / "test.csv", test.complaints);
                  report["test"] = test.report.to_json();
                }
                write_json(out / "report.json", report);
                return report;
              });

    // clean: label standardization then dedup / blank removal
    ctx.stage("clean", {{"labels", config.labels.to_json()}}, [&](const fs::path& out) {
      const fs::path in = ctx.stage_dir("ingest");
      json report;
      auto do_part = [&](const std::string& file, corpus::Partition part) {
        auto std_result = corpus::standardize_labels(read_part(in, file), config.labels, part);
        auto cleaned = corpus::clean(std::move(std_result.complaints));
        std_result.report.then(cleaned.report);
        corpus::write_complaints(out / file, cleaned.complaints);
        return std_result.report.to_json();
      };
      report["train"] = do_part("train.csv", corpus::Partition::Train);
      if (has_test) report["test"] = do_part("test.csv", corpus::Partition::Test);
      write_json(out / "report.json", report);
      return report;
    });

    ctx.stage("anonymize", {{"anonymizer", config.anonymizer.to_json()}}, [&](const fs::path& out) {
      const fs::path in = ctx.stage_dir("clean");
      json report;
      auto do_part = [&](const std::string& file) {
        auto r = anon::anonymize_corpus(read_part(in, file), config.anonymizer);
        if (!r.stats.errors.empty()) {
          throw Error(fmt::format("{} complaints failed anonymization in {} (first: {}: {})", r.stats.errors.size(),
                                  file, r.stats.errors.front().complaint_id, r.stats.errors.front().message));
        }
        corpus::write_complaints(out / file, r.complaints);
        return r.stats.to_json();
      };
      report["train"] = do_part("train.csv");
      if (has_test) report["test"] = do_part("test.csv");
      write_json(out / "report.json", report);
      return report;
    });

    ctx.stage("split",
              {{"validation_fraction", config.validation_fraction},
               {"test_fraction", has_test ? json() : json(config.test_fraction)},
               {"seed", config.seed}},
              [&](const fs::path& out) {
                const fs::path in = ctx.stage_dir("anonymize");
                auto pool = read_part(in, "train.csv");
                corpus::DatasetSplit s;
                if (has_test) {
                  s = corpus::split(pool, config.validation_fraction, config.seed, read_part(in, "test.csv"));
                } else {
                  const auto outer = corpus::split(pool, config.test_fraction, config.seed);
                  const double inner = config.validation_fraction / (1.0 - config.test_fraction);
                  s = corpus::split(outer.train, inner, config.seed + 1, outer.validation);
                }
                corpus::write_split(out, s);
                return json{{"train", s.train.size()}, {"validation", s.validation.size()}, {"test", s.test.size()}};
              });

    json augment_cfg = {{"enabled", config.augment}};
    if (config.augment) {
      augment_cfg["targets_sha256"] = file_hash_or_empty(config.targets_file);
      augment_cfg["multiplier"] = config.target_multiplier ? json(*config.target_multiplier) : json();
      augment_cfg["cap"] = config.target_cap;
      augment_cfg["generator"] = options.generator_factory ? json("injected") : config.generator.to_json();
      augment_cfg["config"] = config.augment_config.to_json();
    }
    ctx.stage("augment", augment_cfg, [&](const fs::path& out) {
      auto s = corpus::read_split(ctx.stage_dir("split"));
      if (!config.augment) {
        corpus::write_split(out, s);
        return json{{"enabled", false}};
      }
      aug::TargetDistribution targets;
      if (config.targets_file) targets = aug::TargetDistribution::load(*config.targets_file);
      else targets = aug::TargetDistribution::from_multiplier(aug::count_classes(s.train), *config.target_multiplier, config.target_cap);
      auto client = options.generator_factory ? options.generator_factory() : make_generator(config.generator);
      const auto r = aug::augment_corpus(s, targets, *client, config.augment_config);
      corpus::write_complaints(out / "additions.csv", r.additions);
      write_json(out / "augmentation_report.json", r.report.to_json());
      write_json(out / "augmentation_run.json", r.report.run_metadata());
      s.train.insert(s.train.end(), r.additions.begin(), r.additions.end());
      corpus::write_split(out, s);
      return json{{"enabled", true}, {"additions", r.additions.size()}, {"classes", r.report.to_json()}};
    });

    const auto spec = config.model_spec();
    json train_cfg = {{"spec", spec.to_json()}, {"training", config.training.to_json()}};
    if (config.grid) train_cfg["grid"] = config.grid->to_json();
    ctx.stage("train", train_cfg, [&](const fs::path& out) {
      const auto s = corpus::read_split(ctx.stage_dir("augment"));
      json report;
      if (config.grid) {
        auto g = clf::grid_search(s, spec, *config.grid);
        g.best_model->save(out / "model");
        write_json(out / "grid_report.json", g.to_json());
        report = {{"best", g.results.at(g.best_index).metric},
                  {"best_config", g.best_config.to_json()},
                  {"points", g.results.size()}};
      } else {
        auto r = clf::train(s, spec, config.training);
        r.model->save(out / "model");
        report = {{"best_epoch", r.history.best_epoch},
                  {"best_metric", r.history.best_metric},
                  {"epochs_run", r.history.epochs.size()},
                  {"stopped_early", r.history.stopped_early},
                  {"fingerprint", r.model->fingerprint()}};
      }
      return report;
    });

    json base_cfg = {{"kinds", json::array()}, {"config", config.baseline_config.to_json()}};
    for (auto k : config.baselines) base_cfg["kinds"].push_back(base::to_string(k));
    ctx.stage("baselines", base_cfg, [&](const fs::path& out) {
      const auto s = corpus::read_split(ctx.stage_dir("augment"));
      json report = json::object();
      for (auto k : config.baselines) {
        auto m = base::fit(s.train, k, config.baseline_config);
        m->save(out / std::string(base::short_name(k)));
        report[std::string(base::short_name(k))] = m->fingerprint();
      }
      return report;
    });

    ctx.stage("evaluate", {{"averaging", eval::to_string(config.averaging)}, {"decimals", config.decimals}},
              [&](const fs::path& out) {
                const auto s = corpus::read_split(ctx.stage_dir("augment"));
                std::vector<eval::EvaluationReport> reports;
                auto score = [&](const fs::path& dir, const std::string& name) {
                  const auto model = load_classifier(dir);
                  reports.push_back(evaluate_model(*model, s.test, config.averaging, name, config.labels.test_only));
                  write_json(out / "reports" / (name + ".json"), reports.back().to_json());
                };
                score(ctx.stage_dir("train") / "model", spec.model_id);
                for (auto k : config.baselines) {
                  score(ctx.stage_dir("baselines") / std::string(base::short_name(k)), std::string(base::display_name(k)));
                }
                const auto table = eval::compare(reports);
                std::ofstream(out / "comparison.md", std::ios::binary) << table.markdown(config.decimals);
                std::ofstream(out / "comparison.csv", std::ios::binary) << table.csv(config.decimals);
                write_json(out / "comparison.json", table.to_json());
                json summary = json::object();
                for (const auto& r : reports) {
                  summary[r.model_name] = {{"accuracy", r.aggregate.accuracy}, {"f1", r.aggregate.f1}};
                }
                return summary;
              });
    manifest["status"] = "complete";
  } catch (const StageError& e) {
    manifest["status"] = "failed";
    manifest["failed_stage"] = e.stage();
    manifest["error"] = e.what();
    write_manifest();
    throw;
  }

  // data hashes of the final split
  const auto final_split = corpus::read_split(ctx.stage_dir("augment"));
  manifest["data_hashes"] = {{"train", corpus::data_hash(final_split.train)},
                             {"validation", corpus::data_hash(final_split.validation)},
                             {"test", corpus::data_hash(final_split.test)}};
  manifest["finished_at"] = fmt::format("{:%Y-%m-%dT%H:%M:%SZ}",
                                        std::chrono::time_point_cast<std::chrono::seconds>(started));
  write_manifest();
  return {config.run_dir, ctx.records, manifest};
}

}  // namespace triage::pipe
