#include <algorithm>
#include <cstdlib>

#include <httplib.h>

#include "adaptest/service.hpp"

namespace adaptest {

void parse_listen_address(std::string_view address, ServiceConfig& config) {
  const auto colon = address.rfind(':');
  if (colon == std::string_view::npos)
    throw StructuralError("listen address must look like host:port, got \"" + std::string(address) + "\"");
  const std::string port(address.substr(colon + 1));
  char* end = nullptr;
  const long p = std::strtol(port.c_str(), &end, 10);
  if (port.empty() || *end != '\0' || p < 0 || p > 65535)
    throw StructuralError("invalid port in listen address \"" + std::string(address) + "\"");
  if (colon > 0) config.host = std::string(address.substr(0, colon));
  config.port = static_cast<int>(p);
}

ServiceConfig service_config_from_env(ServiceConfig base) {
  if (const char* listen = std::getenv("ADAPTEST_LISTEN")) parse_listen_address(listen, base);
  if (const char* store = std::getenv("ADAPTEST_STORE")) base.store_path = store;
  if (const char* cors = std::getenv("ADAPTEST_CORS_ORIGINS")) {
    base.cors_origins.clear();
    std::string_view rest(cors);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      auto item = rest.substr(0, comma);
      if (!item.empty()) base.cors_origins.emplace_back(item);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
  }
  return base;
}

struct HttpServer::Impl {
  SurveyService& service;
  ServiceConfig config;
  httplib::Server server;
  bool bound = false;

  Impl(SurveyService& s, ServiceConfig c) : service(s), config(std::move(c)) {}

  void allow_origin(const httplib::Request& req, httplib::Response& res) const {
    const auto origin = req.get_header_value("Origin");
    if (origin.empty()) return;
    const auto& list = config.cors_origins;
    const bool any = std::find(list.begin(), list.end(), "*") != list.end();
    if (any || std::find(list.begin(), list.end(), origin) != list.end()) {
      res.set_header("Access-Control-Allow-Origin", any ? "*" : origin);
      res.set_header("Vary", "Origin");
    }
  }

  void install() {
    auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
      const ApiResponse r = service.handle(req.method, req.path, req.body);
      res.status = r.status;
      if (!r.body.is_null()) res.set_content(r.body.dump(), "application/json");
      allow_origin(req, res);
    };
    server.Get(".*", dispatch);
    server.Post(".*", dispatch);
    server.Put(".*", dispatch);
    server.Delete(".*", dispatch);
    server.Options(".*", [this](const httplib::Request& req, httplib::Response& res) {
      res.status = 204;
      allow_origin(req, res);
      res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, DELETE, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
    });
  }
};

HttpServer::HttpServer(SurveyService& service, ServiceConfig config)
    : impl_(std::make_unique<Impl>(service, std::move(config))) {
  impl_->install();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  auto& c = impl_->config;
  if (c.port == 0) {
    const int port = impl_->server.bind_to_any_port(c.host);
    if (port < 0) throw Error("cannot bind " + c.host);
    c.port = port;
  } else if (!impl_->server.bind_to_port(c.host, c.port)) {
    throw Error("cannot bind " + c.host + ":" + std::to_string(c.port));
  }
  impl_->bound = true;
  return c.port;
}

void HttpServer::serve() {
  if (!impl_->bound) throw StateError("HttpServer::serve called before bind");
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace adaptest
