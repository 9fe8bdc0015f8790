#pragma once

// HTTP front for AnnotationStore.
//
//   GET  /api/tasks/next?annotator=ID   next unrated item, or {"done": true}
//   POST /api/ratings                   {"item_id", "annotator_id", "dimension", "rating"}
//   GET  /api/progress?annotator=ID
//   GET  /api/export?unblind=true|false Authorization: Bearer <admin token>
//   GET  /api/rubric                    rubric document, when configured
//
// Static files (the annotation frontend bundle) are served from `static_dir`
// when one is given.

#include <filesystem>
#include <optional>
#include <string>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "nlgkit/annotation.hpp"
#include "nlgkit/io.hpp"

namespace nlgkit::annotation {

struct ServerOptions {
  std::optional<std::filesystem::path> static_dir;
  std::optional<std::filesystem::path> rubric_path;
};

class AnnotationServer {
public:
  explicit AnnotationServer(AnnotationStore& store, ServerOptions options = {})
      : store_(store), options_(std::move(options)) {
    routes();
  }

  /// Binds to an OS-chosen port; returns it (or -1).
  int bind_any_port(const std::string& host = "127.0.0.1") { return server_.bind_to_any_port(host); }
  bool bind(const std::string& host, int port) { return server_.bind_to_port(host, port); }

  /// Blocks until stop() is called.
  bool serve() { return server_.listen_after_bind(); }
  bool listen(const std::string& host, int port) { return server_.listen(host, port); }

  void stop() { server_.stop(); }
  void wait_until_ready() const { server_.wait_until_ready(); }

private:
  static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void error(httplib::Response& res, int status, const std::string& message) {
    reply(res, status, nlohmann::json{{"error", message}});
  }

  static std::string bearer_token(const httplib::Request& req) {
    const auto header = req.get_header_value("Authorization");
    constexpr std::string_view prefix = "Bearer ";
    if (header.compare(0, prefix.size(), prefix) != 0) return {};
    return header.substr(prefix.size());
  }

  void routes() {
    server_.Get("/api/tasks/next", [this](const httplib::Request& req, httplib::Response& res) {
      const auto annotator = req.get_param_value("annotator");
      if (annotator.empty()) return error(res, 400, "missing 'annotator' parameter");
      if (auto item = store_.next_task(annotator)) {
        return reply(res, 200, nlohmann::json{{"done", false}, {"task", client_payload(*item)}});
      }
      const auto p = store_.progress(annotator);
      reply(res, 200, nlohmann::json{{"done", true}, {"completed_items", p.completed_items}});
    });

    server_.Post("/api/ratings", [this](const httplib::Request& req, httplib::Response& res) {
      nlohmann::json body;
      try {
        body = nlohmann::json::parse(req.body);
      } catch (const nlohmann::json::parse_error&) {
        return error(res, 400, "request body is not valid JSON");
      }
      try {
        const auto stored = store_.submit(record_from_json(body));
        reply(res, 201, to_json(stored));
      } catch (const AnnotationError& e) {
        error(res, e.kind() == AnnotationError::Kind::dangling_item ? 404
                   : e.kind() == AnnotationError::Kind::log_failure  ? 500
                                                                     : 400,
              e.what());
      }
    });

    server_.Get("/api/progress", [this](const httplib::Request& req, httplib::Response& res) {
      const auto annotator = req.get_param_value("annotator");
      if (annotator.empty()) return error(res, 400, "missing 'annotator' parameter");
      reply(res, 200, to_json(store_.progress(annotator)));
    });

    server_.Get("/api/export", [this](const httplib::Request& req, httplib::Response& res) {
      const auto flag = req.get_param_value("unblind");
      if (!flag.empty() && flag != "true" && flag != "false") {
        return error(res, 400, "'unblind' must be true or false");
      }
      try {
        res.set_content(store_.export_jsonl(flag == "true", bearer_token(req)), "application/x-ndjson");
        res.status = 200;
      } catch (const AnnotationError& e) {
        error(res, e.kind() == AnnotationError::Kind::unauthorized ? 403 : 500, e.what());
      }
    });

    server_.Get("/api/rubric", [this](const httplib::Request&, httplib::Response& res) {
      if (!options_.rubric_path) return error(res, 404, "no rubric configured");
      try {
        res.set_content(io::read_file(*options_.rubric_path), "text/markdown; charset=utf-8");
        res.status = 200;
      } catch (const IoError& e) {
        error(res, 500, e.what());
      }
    });

    if (options_.static_dir) server_.set_mount_point("/", options_.static_dir->string());
  }

  AnnotationStore& store_;
  ServerOptions options_;
  httplib::Server server_;
};

}  // namespace nlgkit::annotation
