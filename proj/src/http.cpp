// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfg/http.hpp"

#include <sstream>

#include <httplib.h>

#include "lfg/error.hpp"
#include "lfg/zip.hpp"

namespace lfg::service {

namespace {

using nlohmann::json;

template <typename J>
void send_json(httplib::Response& res, const J& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message, const std::string& field) {
  json body = {{"code", std::string(to_string(code))}, {"message", message}};
  if (!field.empty()) body["field"] = field;
  send_json(res, body, http_status(code));
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "request body must be a JSON object", "body");
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed JSON body: ") + e.what(), "body");
  }
}

int parse_generation(const std::string& s) {
  try {
    std::size_t used = 0;
    const int n = std::stoi(s, &used);
    if (used == s.size()) return n;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kInvalidArgument, "generation must be an integer", "generation");
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what(), e.field());
    } catch (const std::exception& e) {
      send_error(res, ErrorCode::kIo, e.what(), "");
    }
  };
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kConflict: return 409;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kShapeMismatch:
    case ErrorCode::kDomain:
    case ErrorCode::kNonFinite: return 422;
    case ErrorCode::kIo:
    case ErrorCode::kCorrupt: return 500;
  }
  return 500;
}

HttpServer::HttpServer(Service& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;
  Service& svc = service_;

  s.Get("/styles", guarded([&svc](const httplib::Request&, httplib::Response& res) {
          json list = json::array();
          for (const auto& e : svc.list_styles()) list.push_back(e.to_json());
          send_json(res, json{{"styles", list}});
        }));

  s.Get(R"(/styles/([^/]+)/glyphs/([^/]+?)(?:\.png)?)",
        guarded([&svc](const httplib::Request& req, httplib::Response& res) {
          res.set_content(svc.glyph_png(req.matches[1], req.matches[2]), "image/png");
        }));

  s.Get("/runs", guarded([&svc](const httplib::Request&, httplib::Response& res) {
          nlohmann::ordered_json list = nlohmann::ordered_json::array();
          for (const auto& r : svc.list_runs()) list.push_back(r.to_json());
          send_json(res, nlohmann::ordered_json{{"runs", list}});
        }));

  s.Post("/runs", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
           const json body = parse_body(req);
           if (!body.contains("style") || !body.at("style").is_string()) {
             throw Error(ErrorCode::kInvalidArgument, "\"style\" (string) is required", "style");
           }
           const json config = body.value("config", json::object());
           const std::string id = svc.create_run(body.at("style").get<std::string>(), config);
           send_json(res, svc.run_status(id).to_json(), 202);
         }));

  s.Get(R"(/runs/([^/]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
          send_json(res, svc.run_status(req.matches[1]).to_json());
        }));

  s.Get(R"(/runs/([^/]+)/gen/([^/]+)/samples)",
        guarded([&svc](const httplib::Request& req, httplib::Response& res) {
          const auto samples = svc.get_samples(req.matches[1], parse_generation(req.matches[2]),
                                               split_csv(req.get_param_value("contents")));
          std::vector<zip::Entry> entries;
          for (const auto& smp : samples) entries.emplace_back(smp.content.key() + ".png", smp.png);
          res.set_content(zip::write(entries), "application/zip");
        }));

  s.Get(R"(/runs/([^/]+)/gen/([^/]+)/samples/([^/]+?)(?:\.png)?)",
        guarded([&svc](const httplib::Request& req, httplib::Response& res) {
          const auto samples = svc.get_samples(req.matches[1], parse_generation(req.matches[2]), {req.matches[3]});
          res.set_content(samples.front().png, "image/png");
        }));

  s.Post(R"(/runs/([^/]+)/gen/([^/]+)/export)",
         guarded([&svc](const httplib::Request& req, httplib::Response& res) {
           const int gen = parse_generation(req.matches[2]);
           const auto files = svc.export_selection(req.matches[1], gen);
           const std::string stem = "gen-" + std::to_string(gen) + ".atlas";
           res.set_header("Content-Disposition", "attachment; filename=\"" + stem + ".zip\"");
           res.set_content(zip::write({{stem + ".png", files.png_bytes}, {stem + ".json", files.manifest_text}}),
                           "application/zip");
         }));

  s.Post(R"(/runs/([^/]+)/extend)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
           const json body = parse_body(req);
           if (!body.contains("extra_generations") || !body.at("extra_generations").is_number_integer()) {
             throw Error(ErrorCode::kInvalidArgument, "\"extra_generations\" (integer) is required",
                         "extra_generations");
           }
           send_json(res, svc.extend_run(req.matches[1], body.at("extra_generations").get<int>()).to_json(), 202);
         }));

  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.status == 404 && res.body.empty()) send_error(res, ErrorCode::kNotFound, "no such endpoint", "");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  return server_->bind_to_port(host, port) ? port : -1;
}

int HttpServer::bind_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool HttpServer::listen() { return server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_->is_running()) server_->stop();
}

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace lfg::service
