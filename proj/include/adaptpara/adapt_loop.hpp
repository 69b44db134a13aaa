#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "adaptpara/assets.hpp"
#include "adaptpara/ranker.hpp"
#include "adaptpara/store.hpp"
#include "adaptpara/target_id.hpp"
#include "json.hpp"

namespace adaptpara {

enum class IterationStatus { kOpen, kClosed, kTrained };
std::string_view IterationStatusName(IterationStatus s);

struct Iteration {
  int index = 1;
  IterationStatus status = IterationStatus::kOpen;
  std::uint64_t first_seq = 0;  // 0 while empty
  std::uint64_t last_seq = 0;
  std::size_t event_count = 0;
  friend bool operator==(const Iteration&, const Iteration&) = default;
};

// Assignment of events to batches. A pure function of the arrival order,
// batch_size and the forced closes.
class IterationTable {
 public:
  explicit IterationTable(std::size_t batch_size);

  // Puts `seq` into the OPEN iteration and returns its index. The iteration
  // closes as soon as it holds batch_size events; the next one opens at once.
  int Add(std::uint64_t seq);
  // Closes the OPEN iteration early. Throws Error(kNothingToTrain) when it
  // has no events.
  const Iteration& ForceClose();
  void MarkTrained(int index);

  // Rebuilds a table from a log: events in order, close records honoured.
  static IterationTable Replay(const std::vector<LogRecord>& records, std::size_t batch_size);

  const std::vector<Iteration>& iterations() const { return iterations_; }
  const Iteration& open() const { return iterations_.back(); }
  const Iteration& at(int index) const { return iterations_.at(static_cast<std::size_t>(index - 1)); }
  // Iteration holding `seq`, or nullopt.
  std::optional<int> IterationOf(std::uint64_t seq) const;
  std::size_t batch_size() const { return batch_size_; }

 private:
  void Close();
  std::size_t batch_size_;
  std::vector<Iteration> iterations_;
};

struct ModelVersionInfo {
  std::string id;
  std::string kind;  // "target" or "ranker"
  int trained_after_iteration = 0;
  std::string checksum;  // fnv1a64 hex of the body serialized with an empty version
  friend bool operator==(const ModelVersionInfo&, const ModelVersionInfo&) = default;
};

// What serving reads. A null target model means "use the seed lexicon"; a
// null ranker means "LM baseline".
struct ModelSnapshot {
  std::shared_ptr<const StumpEnsemble> target;
  std::shared_ptr<const RankingModel> ranker;
  ModelVersionInfo target_info;
  ModelVersionInfo ranker_info;

  ModelVersionPair versions() const { return {target_info.id, ranker_info.id}; }
};

struct TrainingReport {
  int iteration = 0;
  std::size_t target_examples = 0;
  std::size_t ranker_pairs = 0;
  std::optional<ModelVersionInfo> target;  // set when a new version was published
  std::optional<ModelVersionInfo> ranker;
  std::string target_error;  // ErrorCodeName + message when training failed
  std::string ranker_error;
};

struct LoopOptions {
  std::size_t batch_size = 100;
  int adaboost_rounds = 50;
  RankerOptions ranker;
  std::uint64_t seed = 42;
  bool async = true;
  // false: closing an iteration only marks it CLOSED; Retrain is manual.
  bool auto_retrain = true;
  std::function<void(const std::string&)> log;  // training failures etc.
};

struct RecordResult {
  UsageEvent event;
  int iteration = 1;
};

// The adaptive cycle: events go into the OPEN iteration; a full iteration is
// closed and retrained on everything up to it; new versions are published
// by swapping one snapshot pointer.
class AdaptLoop {
 public:
  // Rebuilds the iteration table from `log` and retrains every closed
  // iteration before returning, so a restarted process serves the same
  // models it served before.
  AdaptLoop(const Assets& assets, EventLog& log, DocumentStore& documents,
            const ModelRepository& models, LoopOptions options);
  ~AdaptLoop();

  AdaptLoop(const AdaptLoop&) = delete;
  AdaptLoop& operator=(const AdaptLoop&) = delete;

  // Appends through the store and assigns an iteration. Errors from the
  // store propagate unchanged.
  RecordResult RecordEvent(UsageEvent event);

  // Trains iteration `index` synchronously. Throws Error(kOutOfOrderRetrain)
  // unless it is CLOSED and every earlier iteration is TRAINED.
  TrainingReport Retrain(int index);

  // Admin path: waits for queued training, force-closes the OPEN iteration
  // (logging a close record) and retrains it. Throws Error(kNothingToTrain)
  // when the OPEN iteration is empty.
  TrainingReport CloseAndRetrain();

  std::shared_ptr<const ModelSnapshot> ActiveModels() const;
  std::vector<Iteration> Iterations() const;
  std::vector<TrainingReport> Reports() const;
  std::size_t batch_size() const { return options_.batch_size; }

  // Blocks until the background trainer has nothing queued.
  void WaitIdle();

  // Canonical JSON of the iteration table and active versions; equal for a
  // live process and a replay of its log.
  std::string StateDump() const;
  nlohmann::ordered_json StateJson() const;

 private:
  void Publish(std::shared_ptr<const ModelSnapshot> next);
  void Enqueue(int index);
  void WorkerMain();
  DocumentMap DocumentsFor(const std::vector<UsageEvent>& events);
  void Log(const std::string& line) const;

  const Assets& assets_;
  EventLog& log_;
  DocumentStore& documents_;
  const ModelRepository& models_;
  LoopOptions options_;

  // Orders events and guards the iteration table.
  mutable std::mutex seq_mu_;
  IterationTable table_;

  // One training at a time; also guards reports_ and the text cache.
  mutable std::mutex train_mu_;
  std::vector<TrainingReport> reports_;
  std::map<std::string, AnnotatedText> text_cache_;

  mutable std::mutex snap_mu_;
  std::shared_ptr<const ModelSnapshot> snapshot_;

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::condition_variable idle_cv_;
  std::deque<int> queue_;
  bool busy_ = false;
  bool stop_ = false;
  std::thread worker_;
};

// Serving-hygiene check: every event whose recorded model versions were
// trained after an iteration >= the event's own iteration is returned.
struct HygieneViolation {
  std::uint64_t seq = 0;
  int event_iteration = 0;
  std::string version;
  int version_iteration = 0;
};
std::vector<HygieneViolation> CheckServingHygiene(const std::vector<LogRecord>& records,
                                                  std::size_t batch_size);

}  // namespace adaptpara
