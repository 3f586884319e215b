// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0
//
// JSON/PNG/ZIP HTTP surface over Service:
//
//   GET  /styles                              {"styles": [StyleEntry...]}
//   GET  /styles/{style}/glyphs/{content}     image/png
//   GET  /runs                                {"runs": [RunStatus...]}
//   POST /runs  {"style", "config"?}          202 RunStatus
//   GET  /runs/{id}                           RunStatus
//   GET  /runs/{id}/gen/{n}/samples?contents=k1,k2   application/zip of <key>.png
//   GET  /runs/{id}/gen/{n}/samples/{content}        image/png
//   POST /runs/{id}/gen/{n}/export            application/zip: atlas.png, atlas.json
//   POST /runs/{id}/extend {"extra_generations"}     202 RunStatus
//
// Errors are {"code", "message", "field"?} with 404 (not found), 409
// (conflict), 422 (invalid input) or 500.

#pragma once

#include <memory>
#include <string>

#include "lfg/service.hpp"

namespace httplib {
class Server;
}

namespace lfg::service {

int http_status(ErrorCode code);

class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();

  // Returns the bound port, or -1.
  int bind(const std::string& host, int port);
  int bind_any_port(const std::string& host = "127.0.0.1");
  // Blocks until stop().
  bool listen();
  void stop();
  void wait_until_ready() const;

 private:
  Service& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace lfg::service
