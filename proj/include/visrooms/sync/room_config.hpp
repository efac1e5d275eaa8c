#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "visrooms/graph/graph_state.hpp"
#include "visrooms/layout/layout.hpp"

namespace visrooms {

struct Document {
  DocumentId id;
  std::string title;
  std::string body;
  /// Whitespace-separated tokens in body, computed at load.
  std::size_t wordCount = 0;

  friend bool operator==(const Document&, const Document&) = default;
};

std::size_t countWords(std::string_view text);

/// Room config file: {roomId, documents:[{id,title,body}], layoutParams,
/// semicircleRadius}.
struct RoomConfig {
  std::string roomId;
  std::vector<Document> documents;
  LayoutParams layoutParams;
  /// Radius of the document semicircle, in layout units.
  double semicircleRadius = 150.0;

  friend bool operator==(const RoomConfig&, const RoomConfig&) = default;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

RoomConfig roomConfigFromJson(const nlohmann::json& j);
nlohmann::json roomConfigToJson(const RoomConfig& config);
RoomConfig loadRoomConfig(const std::filesystem::path& path);

nlohmann::json documentToJson(const Document& d);

/// Panel poses for the config's documents, in document order.
std::vector<PanelPose> panelPosesFor(const RoomConfig& config);

/// The room's initial graph: one anchor per document, placed in front of its
/// panel and labeled with the document title.
GraphState initialGraph(const RoomConfig& config);

}  // namespace visrooms
