#include "visrooms/sync/room_config.hpp"

#include <cctype>
#include <fstream>
#include <set>

namespace visrooms {

using nlohmann::json;

std::size_t countWords(std::string_view text) {
  std::size_t words = 0;
  bool inWord = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !inWord) ++words;
    inWord = !space;
  }
  return words;
}

RoomConfig roomConfigFromJson(const json& j) {
  RoomConfig c;
  try {
    c.roomId = j.at("roomId").get<std::string>();
    for (const json& d : j.at("documents")) {
      Document doc;
      doc.id = DocumentId(d.at("id").get<std::string>());
      doc.title = d.value("title", std::string());
      doc.body = d.value("body", std::string());
      doc.wordCount = countWords(doc.body);
      c.documents.push_back(std::move(doc));
    }
    if (j.contains("layoutParams")) c.layoutParams = layoutParamsFromJson(j.at("layoutParams"));
    c.semicircleRadius = j.value("semicircleRadius", c.semicircleRadius);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed room config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("bad layout parameters: ") + e.what());
  }

  if (c.roomId.empty()) throw ConfigError("roomId must be non-empty");
  if (!(c.semicircleRadius > 0.0)) throw ConfigError("semicircleRadius must be positive");
  std::set<DocumentId> seen;
  for (const Document& d : c.documents) {
    if (d.id.empty()) throw ConfigError("document id must be non-empty");
    if (!seen.insert(d.id).second) throw ConfigError("duplicate document id " + d.id.value);
  }
  return c;
}

json documentToJson(const Document& d) {
  return {{"id", d.id}, {"title", d.title}, {"body", d.body}, {"wordCount", d.wordCount}};
}

json roomConfigToJson(const RoomConfig& c) {
  json docs = json::array();
  for (const Document& d : c.documents) {
    docs.push_back({{"id", d.id}, {"title", d.title}, {"body", d.body}});
  }
  return {{"roomId", c.roomId},
          {"documents", docs},
          {"layoutParams", layoutParamsToJson(c.layoutParams)},
          {"semicircleRadius", c.semicircleRadius}};
}

RoomConfig loadRoomConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open room config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return roomConfigFromJson(j);
}

std::vector<PanelPose> panelPosesFor(const RoomConfig& config) {
  if (config.documents.empty()) return {};
  std::vector<DocumentId> ids;
  for (const Document& d : config.documents) ids.push_back(d.id);
  return semicircleDocLayout(ids, config.semicircleRadius, {0.0, 0.0, 0.0});
}

GraphState initialGraph(const RoomConfig& config) {
  const auto poses = panelPosesFor(config);
  std::vector<DocumentAnchorSpec> anchors;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    anchors.push_back({config.documents[i].id, config.documents[i].title,
                       poses[i].center + poses[i].anchorOffset});
  }
  return GraphState::create(config.roomId, anchors);
}

}  // namespace visrooms
