#include "adaptpara/store.hpp"

#include <charconv>

#include "adaptpara/checksum.hpp"
#include "adaptpara/error.hpp"
#include "json.hpp"

namespace adaptpara {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void Bad(const std::string& what) { throw Error(ErrorCode::kParseError, what); }

Json EventToJson(const UsageEvent& e) {
  Json j;
  j["v"] = kLogSchemaVersion;
  j["seq"] = e.seq;
  j["ts"] = e.timestamp_ms;
  j["session_id"] = e.session_id;
  j["doc_id"] = e.doc_id;
  j["kind"] = EventKindName(e.kind);
  j["span"] = {e.span.start, e.span.end};
  j["target_surface"] = e.target_surface;
  j["displayed"] = e.displayed_candidates;
  j["selected"] = e.selected_candidate ? Json(*e.selected_candidate) : Json(nullptr);
  j["undo_of"] = e.undo_of ? Json(*e.undo_of) : Json(nullptr);
  j["model_versions"] = {{"target", e.model_versions.target}, {"ranker", e.model_versions.ranker}};
  return j;
}

UsageEvent EventFromJson(const Json& j) {
  UsageEvent e;
  e.seq = j.at("seq").get<std::uint64_t>();
  e.timestamp_ms = j.at("ts").get<std::int64_t>();
  e.session_id = j.at("session_id").get<std::string>();
  e.doc_id = j.at("doc_id").get<std::string>();
  const auto kind = ParseEventKind(j.at("kind").get<std::string>());
  if (!kind) Bad("unknown event kind " + j.at("kind").dump());
  e.kind = *kind;
  const auto& span = j.at("span");
  if (!span.is_array() || span.size() != 2) Bad("span must be [start, end]");
  e.span = {span[0].get<std::size_t>(), span[1].get<std::size_t>()};
  e.target_surface = j.at("target_surface").get<std::string>();
  e.displayed_candidates = j.at("displayed").get<std::vector<std::string>>();
  if (!j.at("selected").is_null()) e.selected_candidate = j.at("selected").get<std::string>();
  if (!j.at("undo_of").is_null()) e.undo_of = j.at("undo_of").get<std::uint64_t>();
  const auto& mv = j.at("model_versions");
  e.model_versions = {mv.at("target").get<std::string>(), mv.at("ranker").get<std::string>()};
  return e;
}

std::ofstream OpenAppend(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string() + " for append");
  return out;
}

// Calls fn(line_number, line) for each line; a missing file has no lines.
template <typename Fn>
void ForEachLine(const std::filesystem::path& path, Fn fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    fn(number, line);
  }
}

}  // namespace

std::string SerializeRecord(const LogRecord& record) {
  if (const auto* e = std::get_if<UsageEvent>(&record)) return EventToJson(*e).dump();
  const auto& c = std::get<IterationCloseRecord>(record);
  Json j;
  j["v"] = kLogSchemaVersion;
  j["record"] = "iteration_close";
  j["iteration"] = c.iteration;
  j["last_seq"] = c.last_seq;
  return j.dump();
}

LogRecord ParseRecord(std::string_view line) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::parse_error& e) {
    Bad(std::string("not JSON: ") + e.what());
  }
  try {
    if (!j.is_object()) Bad("line is not an object");
    if (!j.contains("v") || j["v"] != kLogSchemaVersion) Bad("missing or unsupported v");
    if (j.contains("record")) {
      if (j["record"] != "iteration_close") Bad("unknown record " + j["record"].dump());
      return IterationCloseRecord{j.at("iteration").get<int>(), j.at("last_seq").get<std::uint64_t>()};
    }
    return EventFromJson(j);
  } catch (const Json::exception& e) {
    Bad(e.what());
  }
}

EventLog::EventLog(std::filesystem::path path, Clock clock)
    : path_(std::move(path)), clock_(std::move(clock)) {
  if (path_.empty()) return;
  ForEachLine(path_, [&](std::size_t number, const std::string& line) {
    auto fail = [&](const std::string& why) {
      throw Error(ErrorCode::kCorruptLine,
                  path_.string() + " line " + std::to_string(number) + ": " + why);
    };
    LogRecord record;
    try {
      record = ParseRecord(line);
    } catch (const Error& e) {
      fail(e.what());
    }
    if (auto* e = std::get_if<UsageEvent>(&record)) {
      if (e->seq != last_seq_ + 1) fail("seq " + std::to_string(e->seq) + " out of order");
      try {
        ValidateEventShape(*e);
        CheckAgainstHistory(*e);
      } catch (const Error& err) {
        fail(err.what());
      }
      last_seq_ = e->seq;
      by_seq_[e->seq] = records_.size();
    }
    records_.push_back(std::move(record));
  });
  out_ = OpenAppend(path_);
}

void EventLog::CheckAgainstHistory(const UsageEvent& event) const {
  if (event.kind != EventKind::kUndo) return;
  const auto it = by_seq_.find(*event.undo_of);
  if (it == by_seq_.end()) {
    throw Error(ErrorCode::kUnknownUndoTarget,
                "undo_of " + std::to_string(*event.undo_of) + " is not a logged event");
  }
  const auto& target = std::get<UsageEvent>(records_[it->second]);
  if (target.kind != EventKind::kReplace && target.kind != EventKind::kHighlight) {
    throw Error(ErrorCode::kUnknownUndoTarget,
                "undo_of " + std::to_string(*event.undo_of) + " is not a REPLACE or HIGHLIGHT");
  }
  for (const auto& r : records_) {
    const auto* e = std::get_if<UsageEvent>(&r);
    if (e && e->kind == EventKind::kUndo && e->undo_of == event.undo_of) {
      throw Error(ErrorCode::kInvalidEvent,
                  "event " + std::to_string(*event.undo_of) + " was already undone");
    }
  }
}

void EventLog::Close() {
  std::lock_guard lock(mu_);
  closed_ = true;
  if (out_.is_open()) out_.close();
}

void EventLog::Write(const LogRecord& record) {
  if (closed_) throw Error(ErrorCode::kStoreUnavailable, "event log is closed");
  if (path_.empty()) return;
  out_ << SerializeRecord(record) << '\n';
  out_.flush();
  if (!out_) throw Error(ErrorCode::kStoreUnavailable, "write to " + path_.string() + " failed");
}

UsageEvent EventLog::Append(UsageEvent event) {
  ValidateEventShape(event);
  std::lock_guard lock(mu_);
  CheckAgainstHistory(event);
  event.seq = last_seq_ + 1;
  event.timestamp_ms = clock_ ? clock_() : 0;
  Write(event);
  last_seq_ = event.seq;
  by_seq_[event.seq] = records_.size();
  records_.emplace_back(event);
  return event;
}

void EventLog::AppendClose(const IterationCloseRecord& record) {
  std::lock_guard lock(mu_);
  Write(record);
  records_.emplace_back(record);
}

std::vector<LogRecord> EventLog::Records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::vector<UsageEvent> EventLog::Events() const {
  std::lock_guard lock(mu_);
  std::vector<UsageEvent> out;
  out.reserve(by_seq_.size());
  for (const auto& r : records_) {
    if (const auto* e = std::get_if<UsageEvent>(&r)) out.push_back(*e);
  }
  return out;
}

std::optional<UsageEvent> EventLog::Find(std::uint64_t seq) const {
  std::lock_guard lock(mu_);
  const auto it = by_seq_.find(seq);
  if (it == by_seq_.end()) return std::nullopt;
  return std::get<UsageEvent>(records_[it->second]);
}

std::uint64_t EventLog::last_seq() const {
  std::lock_guard lock(mu_);
  return last_seq_;
}

std::vector<LogRecord> ReadLog(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kFileNotFound, "no event log at " + path.string());
  }
  std::vector<LogRecord> out;
  ForEachLine(path, [&](std::size_t number, const std::string& line) {
    try {
      out.push_back(ParseRecord(line));
    } catch (const Error& e) {
      throw Error(ErrorCode::kCorruptLine,
                  path.string() + " line " + std::to_string(number) + ": " + e.what());
    }
  });
  return out;
}

DocumentStore::DocumentStore(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.empty()) return;
  ForEachLine(path_, [&](std::size_t number, const std::string& line) {
    try {
      const auto j = Json::parse(line);
      if (j.at("v") != kLogSchemaVersion) Bad("unsupported v");
      const auto id = j.at("doc_id").get<std::string>();
      texts_[id] = j.at("text").get<std::string>();
      snapshots_[j.at("client_doc_id").get<std::string>()].push_back(id);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kCorruptLine,
                  path_.string() + " line " + std::to_string(number) + ": " + e.what());
    }
  });
  out_ = OpenAppend(path_);
}

void DocumentStore::Close() {
  std::lock_guard lock(mu_);
  closed_ = true;
  if (out_.is_open()) out_.close();
}

std::string DocumentStore::Put(const std::string& doc_id, const std::string& text) {
  std::lock_guard lock(mu_);
  return PutLocked(doc_id, text, true);
}

std::string DocumentStore::PutLocked(const std::string& doc_id, const std::string& text,
                                     bool write) {
  auto& ids = snapshots_[doc_id];
  for (const auto& id : ids) {
    if (texts_.at(id) == text) return id;
  }
  const std::string id = ids.empty() ? doc_id : doc_id + "@" + std::to_string(ids.size() + 1);
  if (closed_) throw Error(ErrorCode::kStoreUnavailable, "document store is closed");
  if (write && !path_.empty()) {
    Json j;
    j["v"] = kLogSchemaVersion;
    j["doc_id"] = id;
    j["client_doc_id"] = doc_id;
    j["text"] = text;
    out_ << j.dump() << '\n';
    out_.flush();
    if (!out_) throw Error(ErrorCode::kStoreUnavailable, "write to " + path_.string() + " failed");
  }
  ids.push_back(id);
  texts_[id] = text;
  return id;
}

std::optional<std::string> DocumentStore::Get(const std::string& snapshot_id) const {
  std::lock_guard lock(mu_);
  const auto it = texts_.find(snapshot_id);
  if (it == texts_.end()) return std::nullopt;
  return it->second;
}

std::map<std::string, std::string> DocumentStore::All() const {
  std::lock_guard lock(mu_);
  return texts_;
}

ModelRepository::ModelRepository(std::filesystem::path root) : root_(std::move(root)) {}

void ModelRepository::Save(std::string_view kind, std::string_view version,
                           std::string_view body) const {
  if (root_.empty()) return;
  const auto dir = root_ / "models" / std::string(kind);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto final_path = dir / (std::string(version) + ".json");
  const auto tmp = dir / (std::string(version) + ".json.tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << body;
    out.flush();
    if (!out) throw Error(ErrorCode::kStoreUnavailable, "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, final_path, ec);
  if (ec) throw Error(ErrorCode::kStoreUnavailable, "cannot rename " + tmp.string());
}

std::optional<std::string> ModelRepository::Load(std::string_view kind,
                                                 std::string_view version) const {
  if (root_.empty()) return std::nullopt;
  std::ifstream in(root_ / "models" / std::string(kind) / (std::string(version) + ".json"),
                   std::ios::binary);
  if (!in) return std::nullopt;
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::string MakeVersionId(std::string_view kind, int iteration, std::string_view body) {
  return std::string(kind) + "-it" + std::to_string(iteration) + "-" + Hex64(Fnv1a64(body));
}

std::optional<int> VersionIteration(std::string_view version_id) {
  if (version_id == kSeedTargetMarker || version_id == kBaselineRankerMarker) return 0;
  const auto at = version_id.find("-it");
  if (at == std::string_view::npos) return std::nullopt;
  const auto rest = version_id.substr(at + 3);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), value);
  if (ec != std::errc() || ptr == rest.data() || ptr == rest.data() + rest.size() || *ptr != '-') {
    return std::nullopt;
  }
  return value;
}

}  // namespace adaptpara
