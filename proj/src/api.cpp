#include "adaptpara/api.hpp"

#include <chrono>
#include <cstdio>
#include <random>

#include "adaptpara/error.hpp"
#include "adaptpara/ranker.hpp"
#include "adaptpara/target_id.hpp"
#include "json.hpp"

namespace adaptpara {

namespace {

using Json = nlohmann::ordered_json;

// Error with the `detail` object of the response body.
struct ApiError {
  ErrorCode code;
  std::string message;
  Json detail = Json::object();
};

[[noreturn]] void Schema(const std::string& field, const std::string& what) {
  throw ApiError{ErrorCode::kSchemaError, field + ": " + what, Json{{"field", field}}};
}

Json ParseBody(const std::string& body) {
  Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded()) throw ApiError{ErrorCode::kMalformedJson, "request body is not JSON"};
  if (!j.is_object()) Schema("$", "expected an object");
  if (j.contains("v") && j["v"] != kApiSchemaVersion) Schema("v", "unsupported schema version");
  return j;
}

std::string RequiredString(const Json& j, const std::string& key, bool allow_empty = false) {
  if (!j.contains(key)) Schema(key, "required");
  if (!j[key].is_string()) Schema(key, "expected a string");
  auto s = j[key].get<std::string>();
  if (s.empty() && !allow_empty) Schema(key, "must not be empty");
  return s;
}

std::optional<std::string> OptionalString(const Json& j, const std::string& key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_string()) Schema(key, "expected a string");
  return j[key].get<std::string>();
}

std::uint64_t RequiredIndex(const Json& j, const std::string& key) {
  if (!j.contains(key)) Schema(key, "required");
  if (!j[key].is_number_unsigned()) Schema(key, "expected a non-negative integer");
  return j[key].get<std::uint64_t>();
}

Span RequiredSpan(const Json& j) {
  if (!j.contains("span")) Schema("span", "required");
  const auto& s = j["span"];
  if (!s.is_array() || s.size() != 2 || !s[0].is_number_unsigned() ||
      !s[1].is_number_unsigned()) {
    Schema("span", "expected [start, end] with non-negative integers");
  }
  return Span{s[0].get<std::size_t>(), s[1].get<std::size_t>()};
}

Json SpanJson(const Span& span) { return Json::array({span.start, span.end}); }

Json VersionsJson(const ModelVersionPair& v) {
  return Json{{"target", v.target}, {"ranker", v.ranker}};
}

HttpResponse JsonResponse(int status, const Json& body) {
  HttpResponse r;
  r.status = status;
  r.body = body.dump();
  return r;
}

HttpResponse ErrorResponse(const ApiError& e) {
  return JsonResponse(HttpStatusFor(e.code), Json{{"code", ErrorCodeName(e.code)},
                                                  {"message", e.message},
                                                  {"detail", e.detail}});
}

}  // namespace

int HttpStatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedJson:
    case ErrorCode::kSchemaError:
    case ErrorCode::kEmptyText:
    case ErrorCode::kSpanMisaligned:
    case ErrorCode::kSpanOutOfRange:
    case ErrorCode::kInvalidEvent:
    case ErrorCode::kUnknownUndoTarget:
      return 400;
    case ErrorCode::kUnauthorized: return 401;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kUnknownRequestId:
    case ErrorCode::kNothingToTrain:
    case ErrorCode::kOutOfOrderRetrain:
      return 409;
    case ErrorCode::kTextTooLarge: return 413;
    case ErrorCode::kStoreUnavailable:
    case ErrorCode::kIoFailure:
      return 503;
    default: return 500;
  }
}

Service::Service(const Assets& assets, AdaptLoop& loop, EventLog& log, DocumentStore& documents,
                 ServiceOptions options)
    : assets_(assets), loop_(loop), log_(log), documents_(documents), options_(std::move(options)) {}

HttpResponse Service::Handle(const HttpRequest& request) {
  HttpResponse response;
  try {
    const auto& m = request.method;
    const auto& p = request.path;
    if (m == "OPTIONS") {
      response.status = 204;
    } else if (m == "POST" && p == "/paraphrase") {
      response = Paraphrase(request.body);
    } else if (m == "POST" && p == "/feedback") {
      response = Feedback(request.body);
    } else if (m == "GET" && p == "/model/status") {
      response = Status();
    } else if (m == "POST" && p == "/admin/retrain") {
      response = Retrain(request);
    } else {
      throw ApiError{ErrorCode::kNotFound, "no route for " + m + " " + p};
    }
  } catch (const ApiError& e) {
    response = ErrorResponse(e);
  } catch (const Error& e) {
    response = ErrorResponse({e.code(), e.what()});
  } catch (const std::exception& e) {
    response = JsonResponse(500, Json{{"code", "INTERNAL"}, {"message", e.what()},
                                      {"detail", Json::object()}});
  }
  AddCommonHeaders(response);
  return response;
}

void Service::AddCommonHeaders(HttpResponse& response) const {
  if (!response.body.empty()) response.headers.emplace_back("Content-Type", "application/json");
  std::string origin = options_.cors_allow_origin;
  if (origin.empty() && options_.test_mode) origin = "*";
  if (origin.empty()) return;
  response.headers.emplace_back("Access-Control-Allow-Origin", origin);
  if (response.status == 204) {
    response.headers.emplace_back("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    response.headers.emplace_back("Access-Control-Allow-Headers", "Content-Type, X-Admin-Token");
  }
}

std::string Service::NextRequestId() {
  std::lock_guard lock(requests_mu_);
  ++request_counter_;
  char buf[32];
  if (options_.test_mode) {
    std::snprintf(buf, sizeof buf, "req-%06llu", static_cast<unsigned long long>(request_counter_));
    return buf;
  }
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  std::snprintf(buf, sizeof buf, "req-%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

void Service::Remember(const std::string& id, RequestRecord record) {
  std::lock_guard lock(requests_mu_);
  requests_[id] = std::make_shared<const RequestRecord>(std::move(record));
  request_order_.push_back(id);
  while (request_order_.size() > options_.max_remembered_requests) {
    requests_.erase(request_order_.front());
    request_order_.pop_front();
  }
}

std::shared_ptr<const Service::RequestRecord> Service::Recall(const std::string& id) const {
  std::lock_guard lock(requests_mu_);
  const auto it = requests_.find(id);
  return it == requests_.end() ? nullptr : it->second;
}

HttpResponse Service::Paraphrase(const std::string& body) {
  const Json req = ParseBody(body);
  const std::string doc_id = RequiredString(req, "doc_id");
  const std::string text = RequiredString(req, "text", true);
  const std::string session_id = RequiredString(req, "session_id");
  const std::string mode = RequiredString(req, "mode");
  if (mode != "AUTO_HIGHLIGHT" && mode != "CANDIDATES_FOR_SPAN") {
    Schema("mode", "expected AUTO_HIGHLIGHT or CANDIDATES_FOR_SPAN");
  }
  const bool for_span = mode == "CANDIDATES_FOR_SPAN";
  const std::optional<Span> span = for_span ? std::optional(RequiredSpan(req)) : std::nullopt;

  AnnotatedText annotated = assets_.SegmentText(text, doc_id);
  std::vector<TargetUnit> targets;
  if (span) targets.push_back(MakeTargetUnit(annotated, *span, assets_, TargetProvenance::kUser));

  annotated.doc_id = documents_.Put(doc_id, text);
  const auto snap = loop_.ActiveModels();
  const ModelVersionPair versions = snap->versions();

  if (span) {
    UsageEvent e;
    e.session_id = session_id;
    e.doc_id = annotated.doc_id;
    e.kind = EventKind::kHighlight;
    e.span = *span;
    e.target_surface = targets.front().surface;
    e.model_versions = versions;
    loop_.RecordEvent(std::move(e));
  } else if (snap->target) {
    targets = PredictTargets(annotated, *snap->target, assets_, options_.target_threshold);
  } else {
    targets = SeedTargets(annotated, assets_);
  }

  RequestRecord record;
  record.doc_id = annotated.doc_id;
  record.session_id = session_id;
  record.versions = versions;
  Json out_targets = Json::array();
  for (const auto& t : targets) {
    const CandidateSet cands = CandidatesFor(t.lemma, t.pos, assets_.providers, assets_.k_embed);
    const auto ranked = snap->ranker ? Rank(t, cands, *snap->ranker, annotated, assets_)
                                     : BaselineRank(t, cands, annotated, assets_);
    ShownTarget shown{t.span, t.surface, {}};
    Json candidates = Json::array();
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      shown.displayed.push_back(ranked[i].text);
      candidates.push_back(Json{{"text", ranked[i].text}, {"rank", i + 1}});
    }
    out_targets.push_back(Json{{"span", SpanJson(t.span)},
                               {"target_surface", t.surface},
                               {"provenance", ProvenanceName(t.provenance)},
                               {"candidates", std::move(candidates)}});
    record.targets.push_back(std::move(shown));
  }

  // Impressions are durable before the response leaves.
  for (const auto& shown : record.targets) {
    if (shown.displayed.empty()) continue;
    UsageEvent e;
    e.session_id = session_id;
    e.doc_id = annotated.doc_id;
    e.kind = EventKind::kAutoHighlightShown;
    e.span = shown.span;
    e.target_surface = shown.surface;
    e.displayed_candidates = shown.displayed;
    e.model_versions = versions;
    loop_.RecordEvent(std::move(e));
  }

  const std::string request_id = NextRequestId();
  Remember(request_id, std::move(record));
  return JsonResponse(200, Json{{"v", kApiSchemaVersion},
                                {"request_id", request_id},
                                {"doc_id", annotated.doc_id},
                                {"targets", std::move(out_targets)},
                                {"model_versions", VersionsJson(versions)}});
}

HttpResponse Service::Feedback(const std::string& body) {
  const Json req = ParseBody(body);
  const std::string kind_name = RequiredString(req, "kind");
  const auto kind = ParseEventKind(kind_name);
  if (!kind || *kind == EventKind::kAutoHighlightShown) {
    Schema("kind", "expected HIGHLIGHT, REPLACE, REJECT or UNDO");
  }

  UsageEvent e;
  e.session_id = RequiredString(req, "session_id");
  e.kind = *kind;
  e.selected_candidate = OptionalString(req, "selected_candidate");
  const auto request_id = OptionalString(req, "request_id");

  switch (*kind) {
    case EventKind::kReplace:
    case EventKind::kReject: {
      if (!request_id) Schema("request_id", "required for " + kind_name);
      const auto record = Recall(*request_id);
      if (!record) {
        throw ApiError{ErrorCode::kUnknownRequestId, "unknown request_id " + *request_id,
                       Json{{"request_id", *request_id}}};
      }
      e.span = RequiredSpan(req);
      const ShownTarget* shown = nullptr;
      for (const auto& t : record->targets) {
        if (t.span == e.span) shown = &t;
      }
      if (shown == nullptr) {
        throw ApiError{ErrorCode::kInvalidEvent,
                       "span was not a target of request " + *request_id,
                       Json{{"request_id", *request_id}}};
      }
      e.doc_id = record->doc_id;
      e.target_surface = shown->surface;
      e.displayed_candidates = shown->displayed;
      e.model_versions = record->versions;
      break;
    }
    case EventKind::kHighlight: {
      e.span = RequiredSpan(req);
      std::string text;
      if (request_id) {
        const auto record = Recall(*request_id);
        if (!record) {
          throw ApiError{ErrorCode::kUnknownRequestId, "unknown request_id " + *request_id,
                         Json{{"request_id", *request_id}}};
        }
        e.doc_id = record->doc_id;
        text = documents_.Get(record->doc_id).value_or("");
      } else {
        text = RequiredString(req, "text", true);
        e.doc_id = RequiredString(req, "doc_id");
      }
      AnnotatedText annotated = assets_.SegmentText(text, e.doc_id);
      e.target_surface = MakeTargetUnit(annotated, e.span, assets_, TargetProvenance::kUser).surface;
      if (!request_id) e.doc_id = documents_.Put(e.doc_id, text);
      e.model_versions = loop_.ActiveModels()->versions();
      break;
    }
    case EventKind::kUndo: {
      const std::uint64_t of = RequiredIndex(req, "undo_of");
      const auto target = log_.Find(of);
      if (!target) {
        throw ApiError{ErrorCode::kUnknownUndoTarget, "no event with seq " + std::to_string(of),
                       Json{{"undo_of", of}}};
      }
      e.undo_of = of;
      e.doc_id = target->doc_id;
      e.span = target->span;
      e.target_surface = target->target_surface;
      e.model_versions = loop_.ActiveModels()->versions();
      break;
    }
    case EventKind::kAutoHighlightShown:
      break;
  }

  const RecordResult result = loop_.RecordEvent(std::move(e));
  return JsonResponse(200, Json{{"v", kApiSchemaVersion},
                                {"seq", result.event.seq},
                                {"iteration", result.iteration}});
}

HttpResponse Service::Status() {
  const Json state = loop_.StateJson();
  Json j{{"v", kApiSchemaVersion}};
  for (auto it = state.begin(); it != state.end(); ++it) j[it.key()] = it.value();
  return JsonResponse(200, j);
}

HttpResponse Service::Retrain(const HttpRequest& request) {
  const auto token = request.headers.find("x-admin-token");
  if (options_.admin_token.empty() || token == request.headers.end() ||
      token->second != options_.admin_token) {
    throw ApiError{ErrorCode::kUnauthorized, "missing or wrong X-Admin-Token"};
  }
  const TrainingReport report = loop_.CloseAndRetrain();
  const auto snap = loop_.ActiveModels();
  auto describe = [](const std::optional<ModelVersionInfo>& published,
                     const ModelVersionInfo& active, const std::string& error) {
    const ModelVersionInfo& v = published ? *published : active;
    Json j{{"published", published.has_value()},
           {"id", v.id},
           {"trained_after_iteration", v.trained_after_iteration},
           {"checksum", v.checksum}};
    if (!published) j["error"] = error;
    return j;
  };
  return JsonResponse(200, Json{{"v", kApiSchemaVersion},
                                {"iteration", report.iteration},
                                {"target_examples", report.target_examples},
                                {"ranker_pairs", report.ranker_pairs},
                                {"target", describe(report.target, snap->target_info,
                                                    report.target_error)},
                                {"ranker", describe(report.ranker, snap->ranker_info,
                                                    report.ranker_error)}});
}

LoopOptions LoopOptionsFrom(const Config& config) {
  LoopOptions o;
  o.batch_size = config.batch_size;
  o.adaboost_rounds = config.adaboost_rounds;
  o.ranker.epochs = config.ranker_epochs;
  o.ranker.lr = config.ranker_lr;
  o.ranker.l2 = config.ranker_l2;
  o.ranker.seed = config.seed;
  o.seed = config.seed;
  o.async = config.async_retrain;
  return o;
}

namespace {

std::filesystem::path DataFile(const Config& config, const char* name) {
  if (config.data_dir.empty()) return {};
  return std::filesystem::path(config.data_dir) / name;
}

EventLog::Clock ClockFor(const Config& config) {
  if (config.test_mode) return {};  // timestamps recorded as 0
  return [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
}

LoopOptions WithLog(LoopOptions o, std::function<void(const std::string&)> log) {
  o.log = std::move(log);
  return o;
}

}  // namespace

Backend::Backend(const Config& config, std::function<void(const std::string&)> log)
    : Backend(config, Assets::Load(config), std::move(log)) {}

Backend::Backend(const Config& config, Assets assets, std::function<void(const std::string&)> log)
    : config_(config),
      assets_(std::move(assets)),
      events_(DataFile(config, "events.jsonl"), ClockFor(config)),
      documents_(DataFile(config, "documents.jsonl")),
      models_(config.data_dir),
      loop_(assets_, events_, documents_, models_, WithLog(LoopOptionsFrom(config), std::move(log))),
      service_(assets_, loop_, events_, documents_,
               ServiceOptions{config.test_mode, config.admin_token, config.cors_allow_origin,
                              config.target_threshold}) {}

void Backend::CloseStores() {
  loop_.WaitIdle();
  events_.Close();
  documents_.Close();
}

}  // namespace adaptpara
