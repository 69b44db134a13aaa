#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "adaptpara/adapt_loop.hpp"
#include "adaptpara/assets.hpp"
#include "adaptpara/config.hpp"
#include "adaptpara/error.hpp"
#include "adaptpara/store.hpp"

namespace adaptpara {

inline constexpr int kApiSchemaVersion = 1;

struct HttpRequest {
  std::string method;
  std::string path;
  std::string body;
  std::map<std::string, std::string> headers;  // keys lower-cased
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
};

struct ServiceOptions {
  bool test_mode = false;
  std::string admin_token;  // empty: admin routes always answer 401
  std::string cors_allow_origin;
  double target_threshold = 0.0;
  std::size_t max_remembered_requests = 100000;
};

// HTTP status for an error code (400, 401, 404, 409, 413, 503 or 500).
int HttpStatusFor(ErrorCode code);

// Route handlers, independent of any HTTP library. Safe to call from many
// threads at once.
class Service {
 public:
  Service(const Assets& assets, AdaptLoop& loop, EventLog& log, DocumentStore& documents,
          ServiceOptions options);

  HttpResponse Handle(const HttpRequest& request);

 private:
  struct ShownTarget {
    Span span;
    std::string surface;
    std::vector<std::string> displayed;
  };
  struct RequestRecord {
    std::string doc_id;  // snapshot id
    std::string session_id;
    ModelVersionPair versions;
    std::vector<ShownTarget> targets;
  };

  HttpResponse Paraphrase(const std::string& body);
  HttpResponse Feedback(const std::string& body);
  HttpResponse Status();
  HttpResponse Retrain(const HttpRequest& request);

  std::string NextRequestId();
  void Remember(const std::string& id, RequestRecord record);
  std::shared_ptr<const RequestRecord> Recall(const std::string& id) const;
  void AddCommonHeaders(HttpResponse& response) const;

  const Assets& assets_;
  AdaptLoop& loop_;
  EventLog& log_;
  DocumentStore& documents_;
  ServiceOptions options_;

  mutable std::mutex requests_mu_;
  std::uint64_t request_counter_ = 0;
  std::map<std::string, std::shared_ptr<const RequestRecord>> requests_;
  std::deque<std::string> request_order_;
};

// Everything one server process owns, wired from a Config. With an empty
// data_dir the log, documents and models stay in memory.
class Backend {
 public:
  explicit Backend(const Config& config, std::function<void(const std::string&)> log = {});
  Backend(const Config& config, Assets assets, std::function<void(const std::string&)> log = {});

  Service& service() { return service_; }
  AdaptLoop& loop() { return loop_; }
  EventLog& events() { return events_; }
  DocumentStore& documents() { return documents_; }
  const Assets& assets() const { return assets_; }
  const Config& config() const { return config_; }

  // Stops accepting writes; reads keep working.
  void CloseStores();

 private:
  Config config_;
  Assets assets_;
  EventLog events_;
  DocumentStore documents_;
  ModelRepository models_;
  AdaptLoop loop_;
  Service service_;
};

LoopOptions LoopOptionsFrom(const Config& config);

// Blocking HTTP/1.1 front end over a Service.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();

  // Binds; port 0 picks a free port. Returns the bound port. Throws
  // Error(kIoFailure) when binding fails.
  int Bind(const std::string& host, int port);
  // Serves until Stop(); call after Bind.
  void Listen();
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace adaptpara
