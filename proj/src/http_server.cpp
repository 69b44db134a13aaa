#include <algorithm>
#include <cctype>

#include "adaptpara/api.hpp"
#include "adaptpara/error.hpp"
#include "httplib.h"

namespace adaptpara {

struct HttpServer::Impl {
  explicit Impl(Service& s) : service(s) {}
  Service& service;
  httplib::Server server;
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    HttpRequest request{req.method, req.path, req.body, {}};
    for (const auto& [name, value] : req.headers) {
      std::string key = name;
      std::transform(key.begin(), key.end(), key.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      request.headers[key] = value;
    }
    const HttpResponse response = impl_->service.Handle(request);
    res.status = response.status;
    std::string content_type = "application/json";
    for (const auto& [name, value] : response.headers) {
      if (name == "Content-Type") {
        content_type = value;
      } else {
        res.set_header(name, value);
      }
    }
    if (!response.body.empty()) res.set_content(response.body, content_type);
  };
  auto& s = impl_->server;
  s.Get(".*", handler);
  s.Post(".*", handler);
  s.Put(".*", handler);
  s.Delete(".*", handler);
  s.Options(".*", handler);
  s.set_payload_max_length(64 * 1024 * 1024);
}

HttpServer::~HttpServer() { Stop(); }

int HttpServer::Bind(const std::string& host, int port) {
  auto& s = impl_->server;
  if (port == 0) {
    const int bound = s.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::kIoFailure, "cannot bind " + host);
    return bound;
  }
  if (!s.bind_to_port(host, port)) {
    throw Error(ErrorCode::kIoFailure, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::Listen() { impl_->server.listen_after_bind(); }

void HttpServer::Stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace adaptpara
