#include <cstdio>

#include "visrooms/graph/graph_state.hpp"

namespace visrooms {

using nlohmann::json;

namespace {

json vec3(Vec3 v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec3From(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

}  // namespace

json nodeToJson(const NodeRecord& n) {
  return {{"id", n.id},
          {"label", n.label},
          {"position3", vec3(n.position3)},
          {"creator", n.creator},
          {"isDocAnchor", n.isDocAnchor},
          {"pinnedIn2d", n.pinnedIn2d}};
}

NodeRecord nodeFromJson(const json& j) {
  NodeRecord n;
  n.id = NodeId(j.at("id").get<std::string>());
  n.label = j.at("label").get<std::string>();
  n.position3 = vec3From(j.at("position3"));
  n.creator = UserId(j.at("creator").get<std::string>());
  n.isDocAnchor = j.at("isDocAnchor").get<bool>();
  n.pinnedIn2d = j.value("pinnedIn2d", false);
  return n;
}

json linkToJson(const LinkRecord& l) {
  return {{"id", l.id},
          {"endpoints", json::array({l.endpoints.first, l.endpoints.second})},
          {"label", l.label},
          {"creator", l.creator},
          {"isDefaultDocLink", l.isDefaultDocLink},
          {"ordinal", l.ordinal}};
}

LinkRecord linkFromJson(const json& j) {
  LinkRecord l;
  l.id = LinkId(j.at("id").get<std::string>());
  const json& ep = j.at("endpoints");
  l.endpoints = {NodeId(ep.at(0).get<std::string>()),
                 NodeId(ep.at(1).get<std::string>())};
  l.label = j.at("label").get<std::string>();
  l.creator = UserId(j.at("creator").get<std::string>());
  l.isDefaultDocLink = j.at("isDefaultDocLink").get<bool>();
  l.ordinal = j.at("ordinal").get<std::uint64_t>();
  return l;
}

json deltaToJson(const GraphDelta& d) {
  json nodes = json::array();
  for (const auto& n : d.upsertNodes) nodes.push_back(nodeToJson(n));
  json links = json::array();
  for (const auto& l : d.upsertLinks) links.push_back(linkToJson(l));
  return {{"upsertNodes", nodes},
          {"removedNodes", d.removedNodes},
          {"upsertLinks", links},
          {"removedLinks", d.removedLinks},
          {"version", d.version},
          {"nextOrdinal", d.nextOrdinal}};
}

GraphDelta deltaFromJson(const json& j) {
  GraphDelta d;
  for (const auto& n : j.at("upsertNodes")) d.upsertNodes.push_back(nodeFromJson(n));
  for (const auto& n : j.at("removedNodes")) {
    d.removedNodes.emplace_back(n.get<std::string>());
  }
  for (const auto& l : j.at("upsertLinks")) d.upsertLinks.push_back(linkFromJson(l));
  for (const auto& l : j.at("removedLinks")) {
    d.removedLinks.emplace_back(l.get<std::string>());
  }
  d.version = j.at("version").get<std::uint64_t>();
  d.nextOrdinal = j.at("nextOrdinal").get<std::uint64_t>();
  return d;
}

json GraphState::canonicalJson() const {
  // nlohmann::json objects are std::map backed, so keys serialize sorted.
  json nodes = json::object();
  for (const auto& [id, n] : nodes_) nodes[id.value] = nodeToJson(n);
  json links = json::object();
  for (const auto& [id, l] : links_) links[id.value] = linkToJson(l);
  json anchors = json::object();
  for (const auto& [doc, node] : anchors_) anchors[doc.value] = node;
  return {{"roomId", roomId_},
          {"version", version_},
          {"nextOrdinal", nextOrdinal_},
          {"nodes", nodes},
          {"links", links},
          {"documentAnchors", anchors}};
}

std::string GraphState::canonicalString() const { return canonicalJson().dump(); }

GraphState GraphState::fromCanonicalJson(const json& j) {
  GraphState g;
  g.roomId_ = j.at("roomId").get<std::string>();
  g.version_ = j.at("version").get<std::uint64_t>();
  g.nextOrdinal_ = j.at("nextOrdinal").get<std::uint64_t>();
  for (const auto& [key, n] : j.at("nodes").items()) {
    NodeRecord rec = nodeFromJson(n);
    g.nodes_.emplace(rec.id, std::move(rec));
  }
  for (const auto& [key, l] : j.at("links").items()) {
    LinkRecord rec = linkFromJson(l);
    g.links_.emplace(rec.id, std::move(rec));
  }
  for (const auto& [doc, node] : j.at("documentAnchors").items()) {
    g.anchors_.emplace(DocumentId(doc), NodeId(node.get<std::string>()));
  }
  g.rebuildIndexes();
  return g;
}

std::string fnv1a64Hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string stateHash(const GraphState& state) {
  return fnv1a64Hex(state.canonicalString());
}

}  // namespace visrooms
