#include "sockscope/service.hpp"

#include "httplib.h"
#include "json.hpp"
#include "sockscope/analysis.hpp"
#include "sockscope/trace_io.hpp"

namespace sockscope {

using nlohmann::json;

struct IngestService::Http {
  httplib::Server server;
};

namespace {

void send_json(httplib::Response& res, int status, const std::string& body) {
  res.status = status;
  res.set_content(body, "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, json{{"error", message}}.dump() + "\n");
}

json summary_json(const StoredTrace& t) {
  return {{"trace_id", t.trace_id},
          {"app", t.meta.app_name},
          {"received_at", t.received_at},
          {"event_count", t.event_count},
          {"byte_size", t.byte_size},
          {"meta", json::parse(meta_to_json(t.meta))}};
}

bool is_trace_id(const std::string& s) {
  return s.size() == 64 && std::all_of(s.begin(), s.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

}  // namespace

IngestService::IngestService(ServiceConfig config)
    : store_(config.data_dir, config.max_upload), http_(std::make_unique<Http>()) {
  http_->server.set_payload_max_length(config.max_upload);
  routes();
}

IngestService::~IngestService() { stop(); }

int IngestService::bind(const std::string& host, int port) {
  if (port == 0) {
    int p = http_->server.bind_to_any_port(host);
    if (p < 0) throw Error("cannot bind " + host);
    return p;
  }
  if (!http_->server.bind_to_port(host, port)) {
    throw Error("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void IngestService::serve() { http_->server.listen_after_bind(); }

void IngestService::stop() {
  if (http_) http_->server.stop();
}

std::optional<std::string> IngestService::report(const ReportScope& scope) {
  std::string key;
  std::vector<std::string> ids;
  switch (scope.kind) {
    case ReportScope::Kind::trace:
      if (!store_.find(scope.key)) return std::nullopt;
      key = "trace:" + scope.key;
      ids.push_back(scope.key);
      break;
    case ReportScope::Kind::app:
      key = "app:" + scope.key;
      for (const auto& t : store_.list(scope.key)) ids.push_back(t.trace_id);
      if (ids.empty()) return std::nullopt;
      break;
    case ReportScope::Kind::corpus:
      key = "corpus";
      for (const auto& t : store_.list()) ids.push_back(t.trace_id);
      break;
  }
  const auto version = store_.version();
  {
    std::lock_guard lock(cache_mu_);
    auto it = cache_.find(key);
    if (it != cache_.end() && it->second.first == version) return it->second.second;
  }
  // Traces join in id order so the report does not depend on upload order.
  std::sort(ids.begin(), ids.end());
  Corpus corpus;
  for (const auto& id : ids) corpus.add(store_.load(id));
  auto body = report_to_json(compute_report(corpus));
  std::lock_guard lock(cache_mu_);
  cache_[key] = {version, body};
  return body;
}

void IngestService::routes() {
  auto& s = http_->server;

  s.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, "{\"status\":\"ok\"}\n");
  });

  s.Post("/api/traces", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      auto r = store_.put(req.body);
      send_json(res, r.created ? 201 : 200, json{{"trace_id", r.trace_id}}.dump() + "\n");
    } catch (const UploadRejected& e) {
      send_error(res, 400, e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  });

  s.Get("/api/traces", [this](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::string> app;
    if (req.has_param("app")) app = req.get_param_value("app");
    auto traces = store_.list(app);
    std::size_t start = 0;
    if (req.has_param("after")) {
      auto after = req.get_param_value("after");
      auto it = std::find_if(traces.begin(), traces.end(), [&](const auto& t) { return t.trace_id == after; });
      if (it == traces.end()) return send_error(res, 400, "unknown cursor");
      start = static_cast<std::size_t>(it - traces.begin()) + 1;
    }
    std::size_t limit = traces.size();
    if (req.has_param("limit")) {
      try {
        limit = std::stoul(req.get_param_value("limit"));
      } catch (const std::exception&) {
        return send_error(res, 400, "limit must be a non-negative integer");
      }
    }
    json arr = json::array();
    for (std::size_t i = start; i < traces.size() && arr.size() < limit; ++i) arr.push_back(summary_json(traces[i]));
    json body = {{"traces", arr}};
    if (start + arr.size() < traces.size() && !arr.empty()) body["next"] = arr.back()["trace_id"];
    send_json(res, 200, body.dump(2) + "\n");
  });

  s.Get(R"(/api/traces/([0-9a-f]+)/report)", [this](const httplib::Request& req, httplib::Response& res) {
    auto id = req.matches[1].str();
    try {
      auto body = is_trace_id(id) ? report({ReportScope::Kind::trace, id}) : std::nullopt;
      if (!body) return send_error(res, 404, "unknown trace");
      send_json(res, 200, *body);
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  });

  s.Get(R"(/api/traces/([0-9a-f]+)/archive)", [this](const httplib::Request& req, httplib::Response& res) {
    auto id = req.matches[1].str();
    if (!is_trace_id(id) || !store_.find(id)) return send_error(res, 404, "unknown trace");
    try {
      res.set_content(store_.archive(id), "application/gzip");
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  });

  s.Get(R"(/api/apps/([^/]+)/report)", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      auto body = report({ReportScope::Kind::app, httplib::detail::decode_url(req.matches[1].str(), false)});
      if (!body) return send_error(res, 404, "unknown app");
      send_json(res, 200, *body);
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  });

  s.Get("/api/corpus/report", [this](const httplib::Request&, httplib::Response& res) {
    try {
      send_json(res, 200, *report({ReportScope::Kind::corpus, {}}));
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  });
}

}  // namespace sockscope
