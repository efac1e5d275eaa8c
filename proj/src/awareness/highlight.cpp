#include "visrooms/awareness/awareness.hpp"

namespace visrooms {

std::vector<Highlight> selectionHighlight(const GraphState& state,
                                          const std::vector<SelectionView>& sessions,
                                          const UserId& viewer) {
  std::vector<Highlight> out;
  for (const auto& s : sessions) {
    if (s.user == viewer || !s.selectedNode) continue;
    if (state.findNode(*s.selectedNode) == nullptr) continue;
    out.push_back({*s.selectedNode, s.color, s.user});
  }
  return out;
}

}  // namespace visrooms
