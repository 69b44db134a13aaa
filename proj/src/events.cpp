#include "adaptpara/events.hpp"

#include <algorithm>
#include <array>

#include "adaptpara/error.hpp"

namespace adaptpara {

namespace {

constexpr std::array<std::string_view, 5> kKindNames = {
    "HIGHLIGHT", "REPLACE", "REJECT", "UNDO", "AUTO_HIGHLIGHT_SHOWN"};

[[noreturn]] void Invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidEvent, what);
}

}  // namespace

std::string_view EventKindName(EventKind kind) {
  return kKindNames[static_cast<std::size_t>(kind)];
}

std::optional<EventKind> ParseEventKind(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<EventKind>(i);
  }
  return std::nullopt;
}

void ValidateEventShape(const UsageEvent& event) {
  if (event.session_id.empty()) Invalid("session_id is empty");
  if (event.doc_id.empty()) Invalid("doc_id is empty");
  if (event.kind == EventKind::kUndo) {
    if (!event.undo_of) Invalid("UNDO requires undo_of");
    return;
  }
  if (event.undo_of) Invalid("undo_of is only allowed on UNDO");
  if (event.span.start >= event.span.end) Invalid("span must satisfy start < end");
  switch (event.kind) {
    case EventKind::kHighlight:
      if (!event.displayed_candidates.empty()) Invalid("HIGHLIGHT carries no candidates");
      if (event.selected_candidate) Invalid("HIGHLIGHT carries no selection");
      break;
    case EventKind::kReplace: {
      if (!event.selected_candidate) Invalid("REPLACE requires selected_candidate");
      const auto& shown = event.displayed_candidates;
      if (std::find(shown.begin(), shown.end(), *event.selected_candidate) == shown.end()) {
        Invalid("selected_candidate was not displayed");
      }
      break;
    }
    case EventKind::kReject:
    case EventKind::kAutoHighlightShown:
      if (event.displayed_candidates.empty()) Invalid("displayed_candidates is empty");
      if (event.selected_candidate) Invalid("selection only allowed on REPLACE");
      break;
    case EventKind::kUndo:
      break;
  }
}

std::unordered_set<std::uint64_t> UndoneSeqs(const std::vector<UsageEvent>& events) {
  std::unordered_set<std::uint64_t> out;
  for (const auto& e : events) {
    if (e.kind == EventKind::kUndo && e.undo_of) out.insert(*e.undo_of);
  }
  return out;
}

}  // namespace adaptpara
