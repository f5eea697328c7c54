#include "triage/service.hpp"

#include <atomic>
#include <condition_variable>
#include <fstream>
#include <semaphore>
#include <sstream>
#include <thread>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "triage/csv.hpp"
#include "triage/errors.hpp"
#include "triage/model_loader.hpp"
#include "triage/text.hpp"

namespace triage::svc {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(SubmissionStatus s) {
  return s == SubmissionStatus::Reviewed ? "reviewed" : "auto_classified";
}

namespace {

SubmissionStatus parse_status(std::string_view s) {
  if (s == "reviewed") return SubmissionStatus::Reviewed;
  if (s == "auto_classified") return SubmissionStatus::AutoClassified;
  throw IntegrityError("unknown submission status: " + std::string(s));
}

std::string now_iso() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  return fmt::format("{:%Y-%m-%dT%H:%M:%S}.{:03d}Z",
                     std::chrono::time_point_cast<std::chrono::seconds>(now), ms);
}

}  // namespace

json Submission::to_json() const {
  json j = {{"id", id},
            {"received_at", received_at},
            {"updated_at", updated_at},
            {"anonymized_text", anonymized_text},
            {"prediction", prediction.to_json()},
            {"status", to_string(status)}};
  if (raw_text) j["raw_text"] = *raw_text;
  j["operator_feedback"] = operator_feedback ? json(std::string(triage::to_string(*operator_feedback))) : json();
  return j;
}

Submission Submission::from_json(const json& j) {
  Submission s;
  s.id = j.at("id").get<std::string>();
  s.received_at = j.at("received_at").get<std::string>();
  s.updated_at = j.value("updated_at", s.received_at);
  s.anonymized_text = j.at("anonymized_text").get<std::string>();
  if (j.contains("raw_text")) s.raw_text = j.at("raw_text").get<std::string>();
  s.prediction = PredictionResult::from_json(j.at("prediction"));
  if (j.contains("operator_feedback") && !j.at("operator_feedback").is_null()) {
    s.operator_feedback = require_category(j.at("operator_feedback").get<std::string>());
  }
  s.status = parse_status(j.at("status").get<std::string>());
  return s;
}

// -------------------------------------------------------------------- stores

std::string MemoryStore::next_id() {
  std::lock_guard lock(mutex_);
  return fmt::format("sub-{:06d}", ++counter_);
}

void MemoryStore::put_locked(const Submission& s) {
  for (auto& x : items_) {
    if (x.id == s.id) {
      x = s;
      return;
    }
  }
  items_.push_back(s);
  // keep ids unique if records arrive from an older log
  if (text::starts_with(s.id, "sub-")) {
    try {
      counter_ = std::max<std::size_t>(counter_, std::stoull(s.id.substr(4)));
    } catch (const std::exception&) {
    }
  }
}

void MemoryStore::put(const Submission& s) {
  std::lock_guard lock(mutex_);
  put_locked(s);
}

std::optional<Submission> MemoryStore::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  for (const auto& x : items_) {
    if (x.id == id) return x;
  }
  return std::nullopt;
}

std::vector<Submission> MemoryStore::list(std::size_t offset, std::size_t limit) const {
  std::lock_guard lock(mutex_);
  std::vector<Submission> out;
  for (std::size_t i = offset; i < items_.size() && out.size() < limit; ++i) out.push_back(items_[i]);
  return out;
}

std::size_t MemoryStore::size() const {
  std::lock_guard lock(mutex_);
  return items_.size();
}

JsonlStore::JsonlStore(fs::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
  std::ifstream in(path_);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::is_blank(line)) continue;
    try {
      put_locked(Submission::from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw IntegrityError(fmt::format("{}:{}: {}", path_.string(), n, e.what()));
    }
  }
}

void JsonlStore::put(const Submission& s) {
  std::lock_guard lock(mutex_);
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw Error("cannot append to " + path_.string());
  out << s.to_json().dump() << '\n';
  out.flush();
  if (!out) throw Error("write failed for " + path_.string());
  put_locked(s);
}

// -------------------------------------------------------------------- config

AuthToken AuthToken::parse(std::string_view spec) {
  AuthToken t;
  const auto colon = spec.rfind(':');
  if (colon != std::string_view::npos && spec.substr(colon + 1) == "audit") {
    t.value = std::string(spec.substr(0, colon));
    t.audit = true;
  } else {
    t.value = std::string(spec);
  }
  if (t.value.empty()) throw ConfigError("empty auth token");
  return t;
}

ServiceConfig ServiceConfig::from_json(const json& j) {
  ServiceConfig c;
  for (const auto& [k, v] : j.items()) {
    if (k == "model_dir") c.model_dir = v.get<std::string>();
    else if (k == "models_root") c.models_root = v.get<std::string>();
    else if (k == "anonymizer") c.anonymizer = anon::AnonymizerConfig::from_json(v);
    else if (k == "host") c.host = v.get<std::string>();
    else if (k == "port") c.port = v.get<int>();
    else if (k == "max_body_bytes") c.max_body_bytes = v.get<std::size_t>();
    else if (k == "privacy_mode") c.privacy_mode = v.get<bool>();
    else if (k == "tokens") {
      for (const auto& t : v) c.tokens.push_back(AuthToken::parse(t.get<std::string>()));
    } else if (k == "storage_path") c.storage_path = v.get<std::string>();
    else if (k == "persist") c.persist = v.get<bool>();
    else if (k == "inference_workers") c.inference_workers = v.get<std::size_t>();
    else if (k == "http_threads") c.http_threads = v.get<std::size_t>();
    else throw ConfigError("unknown service key: " + k);
  }
  if (c.port < 0 || c.port > 65535) throw ConfigError("port out of range");
  if (c.inference_workers == 0 || c.http_threads == 0) throw ConfigError("worker counts must be >= 1");
  if (c.max_body_bytes == 0) throw ConfigError("max_body_bytes must be >= 1");
  return c;
}

// ------------------------------------------------------------------- service

namespace {

constexpr std::ptrdiff_t kMaxInferenceWorkers = 64;

struct HttpError {
  int status;
  std::string code;
  std::string message;
  std::optional<std::string> detail;
};

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const HttpError& e) {
  json body = {{"code", e.code}, {"message", e.message}};
  if (e.detail) body["detail"] = *e.detail;
  send_json(res, e.status, body);
}

std::string_view default_code(int status) {
  switch (status) {
    case 400: return "bad_request";
    case 401: return "unauthorized";
    case 404: return "not_found";
    case 405: return "method_not_allowed";
    case 413: return "payload_too_large";
    case 422: return "unprocessable";
    case 503: return "unavailable";
    default: return status >= 500 ? "internal_error" : "error";
  }
}

}  // namespace

struct Service::Impl {
  ServiceConfig config;
  std::unique_ptr<SubmissionStore> store;
  httplib::Server server;
  std::thread server_thread;
  std::thread loader;
  std::counting_semaphore<kMaxInferenceWorkers> slots;
  const std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  mutable std::mutex model_mutex;
  mutable std::condition_variable model_cv;
  std::shared_ptr<const Classifier> model;
  ModelState state = ModelState::Absent;
  std::string load_error;
  std::mutex review_mutex;

  Impl(ServiceConfig c, std::unique_ptr<SubmissionStore> s)
      : config(std::move(c)),
        store(std::move(s)),
        slots(static_cast<std::ptrdiff_t>(std::min<std::size_t>(config.inference_workers, kMaxInferenceWorkers))) {
    if (!store) {
      if (config.storage_path.empty()) store = std::make_unique<MemoryStore>();
      else store = std::make_unique<JsonlStore>(config.storage_path);
    }
    if (config.models_root.empty() && !config.model_dir.empty()) {
      config.models_root = config.model_dir.parent_path().empty() ? fs::path(".") : config.model_dir.parent_path();
    }
    if (config.tokens.empty()) spdlog::warn("service: no auth tokens configured; API is open");
    routes();
  }

  std::shared_ptr<const Classifier> current() const {
    std::lock_guard lock(model_mutex);
    return model;
  }

  // -- request helpers

  std::optional<AuthToken> authenticate(const httplib::Request& req) const {
    if (config.tokens.empty()) return AuthToken{"", false};
    const std::string h = req.get_header_value("Authorization");
    static constexpr std::string_view kBearer = "Bearer ";
    if (!text::starts_with(h, kBearer)) return std::nullopt;
    const std::string presented = h.substr(kBearer.size());
    for (const auto& t : config.tokens) {
      if (t.value == presented) return t;
    }
    return std::nullopt;
  }

  AuthToken require_auth(const httplib::Request& req) const {
    auto t = authenticate(req);
    if (!t) throw HttpError{401, "unauthorized", "missing or invalid bearer token", std::nullopt};
    return *t;
  }

  json parse_body(const httplib::Request& req) const {
    if (req.body.size() > config.max_body_bytes) {
      throw HttpError{413, "payload_too_large", "request body exceeds the configured limit",
                      fmt::format("{} > {} bytes", req.body.size(), config.max_body_bytes)};
    }
    try {
      json j = json::parse(req.body);
      if (!j.is_object()) throw HttpError{400, "invalid_request", "body must be a JSON object", std::nullopt};
      return j;
    } catch (const json::parse_error& e) {
      throw HttpError{400, "invalid_json", "request body is not valid JSON", e.what()};
    }
  }

  std::string required_text(const json& body) const {
    if (!body.contains("text") || !body.at("text").is_string()) {
      throw HttpError{400, "invalid_request", "field \"text\" must be a string", std::nullopt};
    }
    std::string t = body.at("text").get<std::string>();
    if (text::is_blank(t)) throw HttpError{400, "empty_text", "text must not be empty", std::nullopt};
    return t;
  }

  anon::RedactionResult redact(const std::string& text, bool audit) const {
    anon::Redactor redactor(anon::make_recognizer_factory(config.anonymizer)(),
                            config.anonymizer.on_recognizer_failure);
    try {
      return redactor.redact(text, audit);
    } catch (const RecognizerUnavailable& e) {
      throw HttpError{503, "recognizer_unavailable", "entity recognizer is unreachable", e.what()};
    }
  }

  template <class F>
  void guarded(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const HttpError& e) {
      send_error(res, e);
    } catch (const PreconditionError& e) {
      send_error(res, {400, "bad_request", e.what(), std::nullopt});
    } catch (const std::exception& e) {
      spdlog::error("service: {}", e.what());
      send_error(res, {500, "internal_error", "unexpected server error", e.what()});
    }
  }

  static std::size_t query_size(const httplib::Request& req, const char* key, std::size_t def,
                                std::size_t max) {
    if (!req.has_param(key)) return def;
    const std::string v = req.get_param_value(key);
    std::size_t pos = 0;
    unsigned long long n = 0;
    try {
      n = std::stoull(v, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != v.size() || v.front() == '-') {
      throw HttpError{400, "invalid_query", fmt::format("{} must be a non-negative integer", key), v};
    }
    return std::min<std::size_t>(n, max);
  }

  // -- routes

  void routes() {
    server.new_task_queue = [n = config.http_threads] { return new httplib::ThreadPool(n); };
    server.set_payload_max_length(config.max_body_bytes * 2 + 4096);
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) {
        send_json(res, res.status,
                  {{"code", default_code(res.status)}, {"message", httplib::status_message(res.status)}});
      }
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
      send_error(res, {500, "internal_error", "unexpected server error", std::nullopt});
    });

    server.Get("/api/v1/health", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { health(res); });
    });
    server.Get("/api/v1/models", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        require_auth(req);
        models(res);
      });
    });
    server.Post("/api/v1/classify", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { classify(req, res); });
    });
    server.Post("/api/v1/anonymize", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { anonymize(req, res); });
    });
    server.Get("/api/v1/submissions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        require_auth(req);
        const auto limit = query_size(req, "limit", 50, 500);
        const auto offset = query_size(req, "offset", 0, std::numeric_limits<std::size_t>::max());
        json items = json::array();
        for (const auto& s : store->list(offset, limit)) items.push_back(s.to_json());
        send_json(res, 200, {{"items", items}, {"total", store->size()}, {"limit", limit}, {"offset", offset}});
      });
    });
    server.Get(R"(/api/v1/submissions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        require_auth(req);
        const auto s = store->get(req.matches[1]);
        if (!s) throw HttpError{404, "not_found", "unknown submission id", std::string(req.matches[1])};
        send_json(res, 200, s->to_json());
      });
    });
    server.Post(R"(/api/v1/submissions/([^/]+)/review)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  guarded(res, [&] { review(req, res); });
                });
    server.Get("/api/v1/export", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        require_auth(req);
        std::ostringstream out;
        csv::write_row(out, {"id", "text", "label"});
        for (const auto& s : store->list(0, std::numeric_limits<std::size_t>::max())) {
          if (s.status != SubmissionStatus::Reviewed || !s.operator_feedback) continue;
          csv::write_row(out, {s.id, s.anonymized_text, std::string(triage::to_string(*s.operator_feedback))});
        }
        res.status = 200;
        res.set_content(out.str(), "text/csv");
      });
    });
  }

  void health(httplib::Response& res) const {
    std::string fp;
    ModelState st;
    std::string err;
    {
      std::lock_guard lock(model_mutex);
      st = state;
      err = load_error;
      if (model) fp = model->fingerprint();
    }
    const char* status = st == ModelState::Ready ? "ok" : st == ModelState::Loading ? "loading" : "degraded";
    json body = {{"status", status},
                 {"model_fingerprint", fp.empty() ? json() : json(fp)},
                 {"uptime_seconds",
                  std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count()},
                 {"privacy_mode", config.privacy_mode}};
    if (!err.empty()) body["detail"] = err;
    send_json(res, st == ModelState::Ready ? 200 : 503, body);
  }

  void models(httplib::Response& res) const {
    json list = json::array();
    for (const auto& c : list_checkpoints(config.models_root)) list.push_back(c.to_json());
    json labels = json::array();
    const auto m = current();
    if (m) {
      for (auto c : m->label_order()) labels.push_back(triage::to_string(c));
    } else {
      for (auto c : all_categories()) labels.push_back(triage::to_string(c));
    }
    send_json(res, 200,
              {{"models", list},
               {"active", m ? json({{"fingerprint", m->fingerprint()}, {"kind", m->kind()}}) : json()},
               {"labels", labels}});
  }

  void classify(const httplib::Request& req, httplib::Response& res) {
    require_auth(req);
    const json body = parse_body(req);
    const std::string raw = required_text(body);
    const auto m = current();
    if (!m) throw HttpError{503, "model_not_loaded", "the classification model is not loaded yet", std::nullopt};

    const auto red = redact(raw, false);
    std::string model_input = red.text;
    if (config.anonymizer.normalize) {
      model_input = anon::normalize(red.text, config.anonymizer.normalization);
      if (text::is_blank(model_input)) model_input = red.text;
    }
    slots.acquire();
    PredictionResult prediction;
    try {
      prediction = m->predict(model_input);
    } catch (...) {
      slots.release();
      throw;
    }
    slots.release();

    json out = {{"prediction", prediction.to_json()},
                {"anonymized_text", red.text},
                {"model_fingerprint", m->fingerprint()}};
    if (config.persist) {
      Submission s;
      s.id = store->next_id();
      s.received_at = now_iso();
      s.updated_at = s.received_at;
      s.anonymized_text = red.text;
      if (!config.privacy_mode) s.raw_text = raw;
      s.prediction = prediction;
      store->put(s);
      out["submission_id"] = s.id;
    }
    send_json(res, 200, out);
  }

  void anonymize(const httplib::Request& req, httplib::Response& res) const {
    const AuthToken who = require_auth(req);
    const json body = parse_body(req);
    const std::string raw = required_text(body);
    const bool audit_requested = body.value("audit", false);
    const bool may_see_spans = !config.privacy_mode || who.audit;
    const auto red = redact(raw, audit_requested && who.audit);
    json out = {{"anonymized_text", red.text}};
    if (may_see_spans) out["spans"] = red.spans_json();
    if (red.degraded) out["degraded"] = true;
    send_json(res, 200, out);
  }

  void review(const httplib::Request& req, httplib::Response& res) {
    require_auth(req);
    const json body = parse_body(req);
    const std::string id = req.matches[1];
    if (!body.contains("corrected_label") || !body.at("corrected_label").is_string()) {
      throw HttpError{422, "invalid_label", "corrected_label must be a category name", std::nullopt};
    }
    const std::string name = body.at("corrected_label").get<std::string>();
    const auto label = parse_category(name);
    std::lock_guard lock(review_mutex);
    auto s = store->get(id);
    if (!s) throw HttpError{404, "not_found", "unknown submission id", id};
    if (!label) throw HttpError{422, "invalid_label", "label is not a known category", name};
    s->operator_feedback = *label;
    s->status = SubmissionStatus::Reviewed;
    s->updated_at = std::max(now_iso(), s->updated_at);
    store->put(*s);
    send_json(res, 200, s->to_json());
  }
};

Service::Service(ServiceConfig config, std::unique_ptr<SubmissionStore> store)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(store))) {}

Service::~Service() {
  stop();
  if (impl_->loader.joinable()) impl_->loader.join();
}

void Service::load_model_async() {
  const fs::path dir = impl_->config.model_dir;
  {
    std::lock_guard lock(impl_->model_mutex);
    if (dir.empty()) {
      impl_->state = ModelState::Absent;
      impl_->load_error = "no model directory configured";
      spdlog::warn("service: {}", impl_->load_error);
      return;
    }
    impl_->state = ModelState::Loading;
  }
  if (impl_->loader.joinable()) impl_->loader.join();
  impl_->loader = std::thread([this, dir] {
    try {
      std::shared_ptr<const Classifier> m = load_classifier(dir);
      spdlog::info("service: loaded {} model from {} fingerprint {}", m->kind(), dir.string(), m->fingerprint());
      std::lock_guard lock(impl_->model_mutex);
      impl_->model = std::move(m);
      impl_->state = ModelState::Ready;
      impl_->load_error.clear();
    } catch (const std::exception& e) {
      spdlog::error("service: model load failed: {}", e.what());
      std::lock_guard lock(impl_->model_mutex);
      impl_->state = ModelState::Failed;
      impl_->load_error = e.what();
    }
    impl_->model_cv.notify_all();
  });
}

void Service::set_model(std::shared_ptr<const Classifier> model) {
  {
    std::lock_guard lock(impl_->model_mutex);
    impl_->model = std::move(model);
    impl_->state = impl_->model ? ModelState::Ready : ModelState::Absent;
    if (impl_->model) spdlog::info("service: model fingerprint {}", impl_->model->fingerprint());
  }
  impl_->model_cv.notify_all();
}

ModelState Service::model_state() const {
  std::lock_guard lock(impl_->model_mutex);
  return impl_->state;
}

bool Service::wait_until_loaded(std::chrono::milliseconds timeout) const {
  std::unique_lock lock(impl_->model_mutex);
  impl_->model_cv.wait_for(lock, timeout, [&] { return impl_->state != ModelState::Loading; });
  return impl_->state == ModelState::Ready;
}

int Service::start() {
  auto& cfg = impl_->config;
  int port = cfg.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(cfg.host);
  } else if (!impl_->server.bind_to_port(cfg.host, port)) {
    port = -1;
  }
  if (port < 0) throw ConfigError(fmt::format("cannot bind {}:{}", cfg.host, cfg.port));
  impl_->server_thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  spdlog::info("service: listening on {}:{} (privacy_mode={})", cfg.host, port, cfg.privacy_mode);
  return port;
}

void Service::run() {
  auto& cfg = impl_->config;
  spdlog::info("service: listening on {}:{} (privacy_mode={})", cfg.host, cfg.port, cfg.privacy_mode);
  if (!impl_->server.listen(cfg.host, cfg.port)) {
    throw ConfigError(fmt::format("cannot listen on {}:{}", cfg.host, cfg.port));
  }
}

void Service::stop() {
  impl_->server.stop();
  if (impl_->server_thread.joinable()) impl_->server_thread.join();
}

SubmissionStore& Service::store() { return *impl_->store; }

}  // namespace triage::svc
