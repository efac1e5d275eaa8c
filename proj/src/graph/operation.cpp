#include "visrooms/graph/operation.hpp"

#include <array>

namespace visrooms {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kOpKindCount> kKindNames = {
    "AddNode",     "MoveNode",   "RenameNode", "MergeNodes",
    "DeleteNode",  "AddLink",    "RelabelLink", "DeleteLink",
    "SelectNode",  "DeselectNode", "SetCurrentDocument",
};

constexpr std::array<std::string_view, 7> kRejectNames = {
    "UnknownNode", "UnknownLink",    "UnknownDocument", "DuplicateLink",
    "SelfLink",    "AnchorDeletion", "InvalidPayload",
};

const json& field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) {
    throw OperationFormatError(std::string("missing field '") + name + "'");
  }
  return *it;
}

std::string stringField(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_string()) {
    throw OperationFormatError(std::string("field '") + name +
                               "' must be a string");
  }
  return v.get<std::string>();
}

json vecToJson(Vec3 v) { return json::array({v.x, v.y, v.z}); }

Vec3 vecFromJson(const json& j) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number() ||
      !j[1].is_number() || !j[2].is_number()) {
    throw OperationFormatError("position must be [x, y, z]");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

std::string_view opKindName(OpKind kind) {
  return kKindNames[static_cast<std::size_t>(kind)];
}

std::optional<OpKind> parseOpKind(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<OpKind>(i);
  }
  return std::nullopt;
}

bool isStructural(OpKind kind) {
  switch (kind) {
    case OpKind::AddNode:
    case OpKind::MergeNodes:
    case OpKind::DeleteNode:
    case OpKind::AddLink:
    case OpKind::DeleteLink:
      return true;
    default:
      return false;
  }
}

std::string_view rejectReasonName(RejectReason r) {
  return kRejectNames[static_cast<std::size_t>(r)];
}

std::optional<RejectReason> parseRejectReason(std::string_view name) {
  for (std::size_t i = 0; i < kRejectNames.size(); ++i) {
    if (kRejectNames[i] == name) return static_cast<RejectReason>(i);
  }
  return std::nullopt;
}

ops::AddNode createNodeWithDefaultLink(Platform platform,
                                       const std::optional<DocumentId>& currentDocument,
                                       std::string label, Vec3 position) {
  ops::AddNode p{std::move(label), position, std::nullopt};
  if (platform == Platform::Spatial3d && currentDocument) {
    p.defaultLinkDoc = currentDocument;
  }
  return p;
}

json payloadToJson(const OpPayload& payload) {
  return std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ops::AddNode>) {
          json j{{"label", p.label}, {"position", vecToJson(p.position)}};
          if (p.defaultLinkDoc) j["defaultLinkDoc"] = *p.defaultLinkDoc;
          return j;
        } else if constexpr (std::is_same_v<T, ops::MoveNode>) {
          return {{"node", p.node}, {"position", vecToJson(p.position)}};
        } else if constexpr (std::is_same_v<T, ops::RenameNode>) {
          return {{"node", p.node}, {"label", p.label}};
        } else if constexpr (std::is_same_v<T, ops::MergeNodes>) {
          return {{"src", p.src}, {"dst", p.dst}};
        } else if constexpr (std::is_same_v<T, ops::DeleteNode>) {
          return {{"node", p.node}};
        } else if constexpr (std::is_same_v<T, ops::AddLink>) {
          return {{"a", p.a}, {"b", p.b}, {"label", p.label}};
        } else if constexpr (std::is_same_v<T, ops::RelabelLink>) {
          return {{"link", p.link}, {"label", p.label}};
        } else if constexpr (std::is_same_v<T, ops::DeleteLink>) {
          return {{"link", p.link}};
        } else if constexpr (std::is_same_v<T, ops::SelectNode>) {
          return {{"node", p.node}};
        } else if constexpr (std::is_same_v<T, ops::DeselectNode>) {
          return json::object();
        } else {
          json j = json::object();
          j["document"] = p.document ? json(*p.document) : json(nullptr);
          return j;
        }
      },
      payload);
}

OpPayload payloadFromJson(OpKind kind, const json& j) {
  if (!j.is_object()) throw OperationFormatError("payload must be an object");
  switch (kind) {
    case OpKind::AddNode: {
      ops::AddNode p{stringField(j, "label"), vecFromJson(field(j, "position")),
                     std::nullopt};
      if (auto it = j.find("defaultLinkDoc"); it != j.end() && !it->is_null()) {
        p.defaultLinkDoc = DocumentId(it->get<std::string>());
      }
      return p;
    }
    case OpKind::MoveNode:
      return ops::MoveNode{NodeId(stringField(j, "node")),
                           vecFromJson(field(j, "position"))};
    case OpKind::RenameNode:
      return ops::RenameNode{NodeId(stringField(j, "node")),
                             stringField(j, "label")};
    case OpKind::MergeNodes:
      return ops::MergeNodes{NodeId(stringField(j, "src")),
                             NodeId(stringField(j, "dst"))};
    case OpKind::DeleteNode:
      return ops::DeleteNode{NodeId(stringField(j, "node"))};
    case OpKind::AddLink:
      return ops::AddLink{NodeId(stringField(j, "a")),
                          NodeId(stringField(j, "b")),
                          j.contains("label") ? stringField(j, "label") : ""};
    case OpKind::RelabelLink:
      return ops::RelabelLink{LinkId(stringField(j, "link")),
                              stringField(j, "label")};
    case OpKind::DeleteLink:
      return ops::DeleteLink{LinkId(stringField(j, "link"))};
    case OpKind::SelectNode:
      return ops::SelectNode{NodeId(stringField(j, "node"))};
    case OpKind::DeselectNode:
      return ops::DeselectNode{};
    case OpKind::SetCurrentDocument: {
      ops::SetCurrentDocument p;
      if (auto it = j.find("document"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) {
          throw OperationFormatError("field 'document' must be a string");
        }
        p.document = DocumentId(it->get<std::string>());
      }
      return p;
    }
  }
  throw OperationFormatError("unhandled operation kind");
}

json operationToJson(const Operation& op) {
  return {{"seq", op.seq},
          {"actor", op.actor},
          {"kind", opKindName(op.kind())},
          {"payload", payloadToJson(op.payload)},
          {"timestamp", op.timestamp}};
}

Operation operationFromJson(const json& j) {
  if (!j.is_object()) throw OperationFormatError("operation must be an object");
  const auto kind = parseOpKind(stringField(j, "kind"));
  if (!kind) throw OperationFormatError("unknown operation kind");
  Operation op;
  const json& seq = field(j, "seq");
  if (!seq.is_number_unsigned() && !seq.is_number_integer()) {
    throw OperationFormatError("seq must be an integer");
  }
  op.seq = seq.get<std::uint64_t>();
  op.actor = UserId(stringField(j, "actor"));
  op.payload = payloadFromJson(*kind, field(j, "payload"));
  const json& ts = field(j, "timestamp");
  if (!ts.is_number_integer()) {
    throw OperationFormatError("timestamp must be an integer");
  }
  op.timestamp = ts.get<std::int64_t>();
  return op;
}

}  // namespace visrooms
