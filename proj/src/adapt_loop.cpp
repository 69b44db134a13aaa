#include "adaptpara/adapt_loop.hpp"

#include "adaptpara/checksum.hpp"
#include "adaptpara/error.hpp"
#include "json.hpp"

namespace adaptpara {

std::string_view IterationStatusName(IterationStatus s) {
  switch (s) {
    case IterationStatus::kOpen: return "OPEN";
    case IterationStatus::kClosed: return "CLOSED";
    case IterationStatus::kTrained: return "TRAINED";
  }
  return "?";
}

IterationTable::IterationTable(std::size_t batch_size) : batch_size_(batch_size) {
  if (batch_size_ == 0) throw Error(ErrorCode::kConfigError, "batch_size must be >= 1");
  iterations_.push_back(Iteration{});
}

void IterationTable::Close() {
  iterations_.back().status = IterationStatus::kClosed;
  Iteration next;
  next.index = iterations_.back().index + 1;
  iterations_.push_back(next);
}

int IterationTable::Add(std::uint64_t seq) {
  Iteration& it = iterations_.back();
  if (it.event_count == 0) it.first_seq = seq;
  it.last_seq = seq;
  ++it.event_count;
  const int index = it.index;
  if (it.event_count >= batch_size_) Close();
  return index;
}

const Iteration& IterationTable::ForceClose() {
  if (iterations_.back().event_count == 0) {
    throw Error(ErrorCode::kNothingToTrain,
                "iteration " + std::to_string(iterations_.back().index) + " has no events");
  }
  Close();
  return iterations_[iterations_.size() - 2];
}

void IterationTable::MarkTrained(int index) {
  iterations_.at(static_cast<std::size_t>(index - 1)).status = IterationStatus::kTrained;
}

IterationTable IterationTable::Replay(const std::vector<LogRecord>& records,
                                      std::size_t batch_size) {
  IterationTable table(batch_size);
  for (const auto& r : records) {
    if (const auto* e = std::get_if<UsageEvent>(&r)) {
      table.Add(e->seq);
      continue;
    }
    const auto& close = std::get<IterationCloseRecord>(r);
    // A close record for an iteration that already filled up on its own is
    // a no-op; the batch size may have shrunk between runs.
    if (close.iteration == table.open().index && table.open().event_count > 0) table.ForceClose();
  }
  return table;
}

std::optional<int> IterationTable::IterationOf(std::uint64_t seq) const {
  for (const auto& it : iterations_) {
    if (it.event_count > 0 && seq >= it.first_seq && seq <= it.last_seq) return it.index;
  }
  return std::nullopt;
}

AdaptLoop::AdaptLoop(const Assets& assets, EventLog& log, DocumentStore& documents,
                     const ModelRepository& models, LoopOptions options)
    : assets_(assets),
      log_(log),
      documents_(documents),
      models_(models),
      options_(std::move(options)),
      table_(IterationTable::Replay(log.Records(), options_.batch_size)) {
  auto initial = std::make_shared<ModelSnapshot>();
  initial->target_info = {std::string(kSeedTargetMarker), "target", 0, ""};
  initial->ranker_info = {std::string(kBaselineRankerMarker), "ranker", 0, ""};
  snapshot_ = std::move(initial);

  std::vector<int> closed;
  for (const auto& it : table_.iterations()) {
    if (it.status == IterationStatus::kClosed) closed.push_back(it.index);
  }
  if (options_.auto_retrain) {
    for (int index : closed) Retrain(index);
  }
  if (options_.async) worker_ = std::thread([this] { WorkerMain(); });
}

AdaptLoop::~AdaptLoop() {
  {
    std::lock_guard lock(queue_mu_);
    stop_ = true;
  }
  queue_cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

void AdaptLoop::Log(const std::string& line) const {
  if (options_.log) options_.log(line);
}

RecordResult AdaptLoop::RecordEvent(UsageEvent event) {
  RecordResult result;
  std::optional<int> closed;
  {
    std::lock_guard lock(seq_mu_);
    result.event = log_.Append(std::move(event));
    const int before = table_.open().index;
    result.iteration = table_.Add(result.event.seq);
    if (table_.open().index != before) closed = before;
  }
  if (closed && options_.auto_retrain) {
    if (options_.async) {
      Enqueue(*closed);
    } else {
      Retrain(*closed);
    }
  }
  return result;
}

DocumentMap AdaptLoop::DocumentsFor(const std::vector<UsageEvent>& events) {
  DocumentMap docs;
  for (const auto& e : events) {
    if (docs.contains(e.doc_id)) continue;
    auto cached = text_cache_.find(e.doc_id);
    if (cached == text_cache_.end()) {
      const auto text = documents_.Get(e.doc_id);
      if (!text) continue;
      cached = text_cache_.emplace(e.doc_id, assets_.SegmentText(*text, e.doc_id)).first;
    }
    docs.emplace(e.doc_id, cached->second);
  }
  return docs;
}

TrainingReport AdaptLoop::Retrain(int index) {
  std::lock_guard train_lock(train_mu_);
  std::uint64_t last_seq = 0;
  {
    std::lock_guard lock(seq_mu_);
    const auto& its = table_.iterations();
    if (index < 1 || static_cast<std::size_t>(index) > its.size() ||
        its[static_cast<std::size_t>(index - 1)].status != IterationStatus::kClosed) {
      throw Error(ErrorCode::kOutOfOrderRetrain,
                  "iteration " + std::to_string(index) + " is not CLOSED");
    }
    for (int i = 1; i < index; ++i) {
      if (table_.at(i).status != IterationStatus::kTrained) {
        throw Error(ErrorCode::kOutOfOrderRetrain, "iteration " + std::to_string(i) +
                                                       " must be trained before " +
                                                       std::to_string(index));
      }
    }
    last_seq = table_.at(index).last_seq;
  }

  std::vector<UsageEvent> events = log_.Events();
  std::erase_if(events, [&](const UsageEvent& e) { return e.seq > last_seq; });
  const DocumentMap docs = DocumentsFor(events);

  TrainingReport report;
  report.iteration = index;
  auto next = std::make_shared<ModelSnapshot>(*ActiveModels());

  try {
    const auto examples = AssembleTrainingSet(events, docs, assets_, options_.seed);
    report.target_examples = examples.size();
    if (examples.empty()) throw Error(ErrorCode::kNoExamples, "no highlighted or replaced targets");
    StumpEnsemble model = TrainAdaBoost(examples, {options_.adaboost_rounds});
    model.trained_after_iteration = index;
    const std::string body = SerializeEnsemble(model);
    model.version = MakeVersionId("target", index, body);
    models_.Save("target", model.version, SerializeEnsemble(model));
    next->target_info = {model.version, "target", index, Hex64(Fnv1a64(body))};
    next->target = std::make_shared<const StumpEnsemble>(std::move(model));
    report.target = next->target_info;
  } catch (const Error& e) {
    report.target_error = std::string(ErrorCodeName(e.code())) + ": " + e.what();
    Log("iteration " + std::to_string(index) + ": target model kept, " + report.target_error);
  }

  try {
    const auto pairs = PairsFromEvents(events, docs, assets_);
    report.ranker_pairs = pairs.size();
    RankingModel model = TrainRanker(pairs, options_.ranker);
    model.trained_on_iterations.clear();
    for (int i = 1; i <= index; ++i) model.trained_on_iterations.push_back(i);
    const std::string body = SerializeRankingModel(model);
    model.version = MakeVersionId("ranker", index, body);
    models_.Save("ranker", model.version, SerializeRankingModel(model));
    next->ranker_info = {model.version, "ranker", index, Hex64(Fnv1a64(body))};
    next->ranker = std::make_shared<const RankingModel>(std::move(model));
    report.ranker = next->ranker_info;
  } catch (const Error& e) {
    report.ranker_error = std::string(ErrorCodeName(e.code())) + ": " + e.what();
    Log("iteration " + std::to_string(index) + ": ranker kept, " + report.ranker_error);
  }

  Publish(std::move(next));
  {
    std::lock_guard lock(seq_mu_);
    table_.MarkTrained(index);
  }
  reports_.push_back(report);
  return report;
}

TrainingReport AdaptLoop::CloseAndRetrain() {
  WaitIdle();
  int index = 0;
  {
    std::lock_guard lock(seq_mu_);
    const Iteration& closed = table_.ForceClose();
    index = closed.index;
    log_.AppendClose({closed.index, closed.last_seq});
  }
  WaitIdle();
  return Retrain(index);
}

void AdaptLoop::Publish(std::shared_ptr<const ModelSnapshot> next) {
  std::lock_guard lock(snap_mu_);
  snapshot_ = std::move(next);
}

std::shared_ptr<const ModelSnapshot> AdaptLoop::ActiveModels() const {
  std::lock_guard lock(snap_mu_);
  return snapshot_;
}

std::vector<Iteration> AdaptLoop::Iterations() const {
  std::lock_guard lock(seq_mu_);
  return table_.iterations();
}

std::vector<TrainingReport> AdaptLoop::Reports() const {
  std::lock_guard lock(train_mu_);
  return reports_;
}

void AdaptLoop::Enqueue(int index) {
  {
    std::lock_guard lock(queue_mu_);
    queue_.push_back(index);
  }
  queue_cv_.notify_one();
}

void AdaptLoop::WorkerMain() {
  std::unique_lock lock(queue_mu_);
  while (true) {
    queue_cv_.wait(lock, [&] { return stop_ || !queue_.empty(); });
    if (queue_.empty()) return;  // stop requested, nothing left
    const int index = queue_.front();
    queue_.pop_front();
    busy_ = true;
    lock.unlock();
    try {
      Retrain(index);
    } catch (const std::exception& e) {
      Log("background retrain of iteration " + std::to_string(index) + " failed: " + e.what());
    }
    lock.lock();
    busy_ = false;
    if (queue_.empty()) idle_cv_.notify_all();
  }
}

void AdaptLoop::WaitIdle() {
  if (!worker_.joinable()) return;
  std::unique_lock lock(queue_mu_);
  idle_cv_.wait(lock, [&] { return queue_.empty() && !busy_; });
}

std::string AdaptLoop::StateDump() const { return StateJson().dump(2); }

nlohmann::ordered_json AdaptLoop::StateJson() const {
  nlohmann::ordered_json j;
  j["batch_size"] = options_.batch_size;
  auto& its = j["iterations"] = nlohmann::ordered_json::array();
  for (const auto& it : Iterations()) {
    its.push_back({{"index", it.index},
                   {"status", IterationStatusName(it.status)},
                   {"first_seq", it.first_seq},
                   {"last_seq", it.last_seq},
                   {"events", it.event_count}});
  }
  const auto snap = ActiveModels();
  auto info = [](const ModelVersionInfo& v) {
    return nlohmann::ordered_json{{"id", v.id},
                                  {"trained_after_iteration", v.trained_after_iteration},
                                  {"checksum", v.checksum}};
  };
  j["active"] = {{"target", info(snap->target_info)}, {"ranker", info(snap->ranker_info)}};
  auto& history = j["trainings"] = nlohmann::ordered_json::array();
  for (const auto& r : Reports()) {
    history.push_back({{"iteration", r.iteration},
                       {"target", r.target ? r.target->id : r.target_error},
                       {"ranker", r.ranker ? r.ranker->id : r.ranker_error},
                       {"target_examples", r.target_examples},
                       {"ranker_pairs", r.ranker_pairs}});
  }
  return j;
}

std::vector<HygieneViolation> CheckServingHygiene(const std::vector<LogRecord>& records,
                                                  std::size_t batch_size) {
  const auto table = IterationTable::Replay(records, batch_size);
  std::vector<HygieneViolation> out;
  for (const auto& r : records) {
    const auto* e = std::get_if<UsageEvent>(&r);
    if (e == nullptr) continue;
    const int it = table.IterationOf(e->seq).value_or(0);
    for (const auto& version : {e->model_versions.target, e->model_versions.ranker}) {
      if (version.empty()) continue;
      const auto vi = VersionIteration(version);
      if (!vi || *vi >= it) out.push_back({e->seq, it, version, vi.value_or(-1)});
    }
  }
  return out;
}

}  // namespace adaptpara
