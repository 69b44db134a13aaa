#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "adaptpara/events.hpp"

namespace adaptpara {

inline constexpr int kLogSchemaVersion = 1;

// Control record written when an iteration is closed by force (admin
// retrain) so that replay closes it at the same point.
struct IterationCloseRecord {
  int iteration = 0;
  std::uint64_t last_seq = 0;
  friend bool operator==(const IterationCloseRecord&, const IterationCloseRecord&) = default;
};

using LogRecord = std::variant<UsageEvent, IterationCloseRecord>;

// One JSON line without the trailing newline.
std::string SerializeRecord(const LogRecord& record);
// Throws Error(kParseError) describing the first problem.
LogRecord ParseRecord(std::string_view line);

// Append-only event log, one JSON object per line. The file is optional:
// an empty path keeps everything in memory.
class EventLog {
 public:
  using Clock = std::function<std::int64_t()>;

  // Loads existing lines, then opens for append. Throws Error(kCorruptLine)
  // with the 1-based line number when any line fails to parse or breaks the
  // seq / undo invariants, and Error(kIoFailure) when the file cannot be
  // opened for writing.
  explicit EventLog(std::filesystem::path path = {}, Clock clock = {});

  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  // Validates, assigns seq = last + 1 and a timestamp, writes and flushes.
  // Throws Error(kInvalidEvent), Error(kUnknownUndoTarget) or
  // Error(kStoreUnavailable).
  UsageEvent Append(UsageEvent event);
  void AppendClose(const IterationCloseRecord& record);
  // Shutdown: later writes throw Error(kStoreUnavailable).
  void Close();

  std::vector<LogRecord> Records() const;
  std::vector<UsageEvent> Events() const;
  std::optional<UsageEvent> Find(std::uint64_t seq) const;
  std::uint64_t last_seq() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  void CheckAgainstHistory(const UsageEvent& event) const;
  void Write(const LogRecord& record);

  std::filesystem::path path_;
  Clock clock_;
  mutable std::mutex mu_;
  std::ofstream out_;
  std::vector<LogRecord> records_;
  std::map<std::uint64_t, std::size_t> by_seq_;  // seq -> index in records_
  std::uint64_t last_seq_ = 0;
  bool closed_ = false;
};

// Reads a log without opening it for writing (replay-check, tooling).
std::vector<LogRecord> ReadLog(const std::filesystem::path& path);

// Text snapshots that events point at. The first text under a client
// doc_id keeps that id; a different text under the same doc_id gets
// "doc_id@2", "doc_id@3", ... Identical text reuses its snapshot id.
class DocumentStore {
 public:
  explicit DocumentStore(std::filesystem::path path = {});

  DocumentStore(const DocumentStore&) = delete;
  DocumentStore& operator=(const DocumentStore&) = delete;

  std::string Put(const std::string& doc_id, const std::string& text);
  std::optional<std::string> Get(const std::string& snapshot_id) const;
  std::map<std::string, std::string> All() const;
  // Later Puts that need a write throw Error(kStoreUnavailable).
  void Close();

 private:
  std::string PutLocked(const std::string& doc_id, const std::string& text, bool write);

  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::ofstream out_;
  std::map<std::string, std::string> texts_;
  std::map<std::string, std::vector<std::string>> snapshots_;  // client id -> snapshot ids
  bool closed_ = false;
};

// models/<kind>/<version-id>.json under a root directory. Files are written
// to a temporary name and renamed into place.
class ModelRepository {
 public:
  explicit ModelRepository(std::filesystem::path root = {});

  void Save(std::string_view kind, std::string_view version, std::string_view body) const;
  std::optional<std::string> Load(std::string_view kind, std::string_view version) const;
  bool persistent() const { return !root_.empty(); }

 private:
  std::filesystem::path root_;
};

// "<kind>-it<iteration>-<fnv1a64 hex of body>".
std::string MakeVersionId(std::string_view kind, int iteration, std::string_view body);
// Iteration encoded in a version id; 0 for the baseline markers, nullopt
// when the id has another shape.
std::optional<int> VersionIteration(std::string_view version_id);

inline constexpr std::string_view kSeedTargetMarker = "target-seed";
inline constexpr std::string_view kBaselineRankerMarker = "ranker-baseline";

}  // namespace adaptpara
