#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "triage/anonymizer.hpp"
#include "triage/labels.hpp"
#include "triage/prediction.hpp"

namespace triage::svc {

enum class SubmissionStatus { AutoClassified, Reviewed };
std::string_view to_string(SubmissionStatus s);

struct Submission {
  std::string id;
  std::string received_at;  // ISO-8601 UTC
  std::string updated_at;
  std::string anonymized_text;
  std::optional<std::string> raw_text;  // only kept with privacy mode off
  PredictionResult prediction;
  std::optional<CategoryLabel> operator_feedback;
  SubmissionStatus status = SubmissionStatus::AutoClassified;

  nlohmann::json to_json() const;
  static Submission from_json(const nlohmann::json& j);
};

// Implementations are thread-safe.
class SubmissionStore {
 public:
  virtual ~SubmissionStore() = default;
  virtual std::string next_id() = 0;  // "sub-000001", ...
  // Insert or replace by id.
  virtual void put(const Submission& s) = 0;
  virtual std::optional<Submission> get(const std::string& id) const = 0;
  // Insertion order.
  virtual std::vector<Submission> list(std::size_t offset, std::size_t limit) const = 0;
  virtual std::size_t size() const = 0;
};

class MemoryStore : public SubmissionStore {
 public:
  std::string next_id() override;
  void put(const Submission& s) override;
  std::optional<Submission> get(const std::string& id) const override;
  std::vector<Submission> list(std::size_t offset, std::size_t limit) const override;
  std::size_t size() const override;

 protected:
  void put_locked(const Submission& s);

  mutable std::mutex mutex_;
  std::vector<Submission> items_;
  std::size_t counter_ = 0;
};

// Append-only JSON-lines log replayed on open; the last line for an id wins.
class JsonlStore final : public MemoryStore {
 public:
  explicit JsonlStore(std::filesystem::path path);
  void put(const Submission& s) override;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

struct AuthToken {
  std::string value;
  bool audit = false;

  // "secret" or "secret:audit".
  static AuthToken parse(std::string_view spec);
};

struct ServiceConfig {
  std::filesystem::path model_dir;    // empty: no model, health degraded
  std::filesystem::path models_root;  // listing root; defaults to model_dir's parent
  anon::AnonymizerConfig anonymizer;
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::size_t max_body_bytes = 64 * 1024;
  bool privacy_mode = true;
  std::vector<AuthToken> tokens;  // empty: no auth
  std::filesystem::path storage_path;  // empty: in-memory store
  bool persist = true;
  std::size_t inference_workers = 1;
  std::size_t http_threads = 8;

  // Keys: model_dir, models_root, anonymizer, host, port, max_body_bytes,
  // privacy_mode, tokens, storage_path, persist, inference_workers, http_threads.
  static ServiceConfig from_json(const nlohmann::json& j);
};

enum class ModelState { Loading, Ready, Failed, Absent };

class Service {
 public:
  explicit Service(ServiceConfig config, std::unique_ptr<SubmissionStore> store = nullptr);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Loads config.model_dir on a background thread.
  void load_model_async();
  // Installs an already-loaded model (tests, embedding).
  void set_model(std::shared_ptr<const Classifier> model);
  ModelState model_state() const;
  bool wait_until_loaded(std::chrono::milliseconds timeout) const;

  // Binds and serves on a background thread; returns the bound port.
  int start();
  // Binds and blocks until stop() is called from another thread.
  void run();
  void stop();

  SubmissionStore& store();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace triage::svc
