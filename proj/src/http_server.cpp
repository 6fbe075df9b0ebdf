#include <chrono>
#include <iostream>

#include "spanel/http.hpp"
#include "spanel/service.hpp"

namespace spanel {

struct HttpServer::Impl {
  Service& service;
  bool log_requests;
  httplib::Server server;

  Impl(Service& s, bool log) : service(s), log_requests(log) {
    auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
      std::map<std::string, std::string> query;
      for (const auto& [k, v] : req.params) query.emplace(k, v);
      const auto start = std::chrono::steady_clock::now();
      const HttpResponse out = service.handle(req.method, req.path, query, req.body);
      res.status = out.status;
      res.set_content(out.body, out.content_type);
      if (!log_requests) return;
      const auto us = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start);
      nlohmann::ordered_json line = {{"method", req.method},
                                     {"path", req.path},
                                     {"status", out.status},
                                     {"micros", us.count()}};
      std::clog << line.dump() << '\n';
    };
    server.Get(".*", dispatch);
    server.Post(".*", dispatch);
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  }
};

HttpServer::HttpServer(Service& service, bool log_requests)
    : impl_(std::make_unique<Impl>(service, log_requests)) {}
HttpServer::~HttpServer() = default;

bool HttpServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }
int HttpServer::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }
bool HttpServer::listen_bound() { return impl_->server.listen_after_bind(); }
void HttpServer::stop() { impl_->server.stop(); }

}  // namespace spanel
