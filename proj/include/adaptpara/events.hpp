#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "adaptpara/text.hpp"

namespace adaptpara {

enum class EventKind { kHighlight, kReplace, kReject, kUndo, kAutoHighlightShown };

std::string_view EventKindName(EventKind kind);
std::optional<EventKind> ParseEventKind(std::string_view name);

struct ModelVersionPair {
  std::string target;
  std::string ranker;

  friend bool operator==(const ModelVersionPair&, const ModelVersionPair&) = default;
};

// One user or simulator interaction; the unit of training signal.
struct UsageEvent {
  std::uint64_t seq = 0;  // assigned by the store
  std::int64_t timestamp_ms = 0;
  std::string session_id;
  std::string doc_id;
  EventKind kind = EventKind::kHighlight;
  Span span;
  std::string target_surface;
  std::vector<std::string> displayed_candidates;
  std::optional<std::string> selected_candidate;
  std::optional<std::uint64_t> undo_of;
  ModelVersionPair model_versions;

  friend bool operator==(const UsageEvent&, const UsageEvent&) = default;
};

// Checks the invariants that do not depend on other events. Throws
// Error(kInvalidEvent) naming the failed invariant.
void ValidateEventShape(const UsageEvent& event);

// Seqs cancelled by UNDO events in the list.
std::unordered_set<std::uint64_t> UndoneSeqs(const std::vector<UsageEvent>& events);

}  // namespace adaptpara
