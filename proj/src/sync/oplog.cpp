#include "visrooms/sync/oplog.hpp"

#include <sstream>

namespace visrooms {

using nlohmann::json;

json loggedOpToJson(const LoggedOp& entry) {
  json j = operationToJson(entry.op);
  j["applied"] = entry.applied();
  j["rejectReason"] =
      entry.rejected ? json(rejectReasonName(*entry.rejected)) : json(nullptr);
  return j;
}

LoggedOp loggedOpFromJson(const json& j) {
  LoggedOp e;
  e.op = operationFromJson(j);
  const bool applied = j.at("applied").get<bool>();
  const json& reason = j.at("rejectReason");
  if (applied != reason.is_null()) {
    throw OperationFormatError("applied and rejectReason disagree");
  }
  if (!applied) {
    const auto r = parseRejectReason(reason.get<std::string>());
    if (!r) throw OperationFormatError("unknown rejectReason " + reason.dump());
    e.rejected = *r;
  }
  return e;
}

std::filesystem::path oplogPath(const std::filesystem::path& dir, const std::string& roomId) {
  return dir / (roomId + ".oplog.ndjson");
}

std::filesystem::path snapshotPath(const std::filesystem::path& dir, const std::string& roomId) {
  return dir / (roomId + ".snapshot.json");
}

OpLogWriter OpLogWriter::create(const std::filesystem::path& path, const RoomConfig& config) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << json{{"roomConfig", roomConfigToJson(config)}}.dump() << '\n';
  out.flush();
  return OpLogWriter(path, std::move(out));
}

OpLogWriter OpLogWriter::resume(const std::filesystem::path& path, std::size_t validLines) {
  std::string kept;
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    for (std::size_t n = 0; n < validLines && std::getline(in, line); ++n) {
      kept += line;
      kept += '\n';
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kept;
  out.flush();
  return OpLogWriter(path, std::move(out));
}

void OpLogWriter::append(const LoggedOp& entry) {
  out_ << loggedOpToJson(entry).dump() << '\n';
  out_.flush();
  if (!out_) throw std::runtime_error("write failed on " + path_.string());
}

ReplayedLog replayLog(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LogError(LogErrorCode::CorruptLog, 0, "cannot open " + path.string());

  ReplayedLog out;
  std::string line;
  if (!std::getline(in, line)) {
    throw LogError(LogErrorCode::CorruptLog, 1, "missing header line");
  }
  try {
    out.config = roomConfigFromJson(json::parse(line).at("roomConfig"));
  } catch (const std::exception& e) {
    throw LogError(LogErrorCode::CorruptLog, 1, std::string("bad header: ") + e.what());
  }
  out.state = initialGraph(out.config);

  std::size_t lineNo = 1;
  std::uint64_t expectedSeq = 1;
  while (std::getline(in, line)) {
    ++lineNo;
    // A final line without its newline was cut short by a crash mid-write.
    const bool unterminated = in.eof();
    if (line.empty() && unterminated) break;
    LoggedOp entry;
    try {
      if (unterminated) throw std::runtime_error("unterminated line");
      entry = loggedOpFromJson(json::parse(line));
    } catch (const std::exception& e) {
      out.error = LogError(LogErrorCode::CorruptLog, lineNo,
                           "line " + std::to_string(lineNo) + ": " + e.what());
      return out;
    }
    if (entry.op.seq != expectedSeq) {
      out.error = LogError(LogErrorCode::SeqGap, lineNo,
                           "line " + std::to_string(lineNo) + ": expected seq " +
                               std::to_string(expectedSeq) + ", found " +
                               std::to_string(entry.op.seq));
      return out;
    }
    GraphState next = out.state;
    auto result = next.applyInPlace(entry.op);
    const std::optional<RejectReason> replayed =
        result.ok() ? std::nullopt : std::optional(result.error());
    if (replayed != entry.rejected) {
      out.error = LogError(LogErrorCode::CorruptLog, lineNo,
                           "line " + std::to_string(lineNo) +
                               ": recorded outcome does not match replay");
      return out;
    }
    out.state = std::move(next);
    out.entries.push_back(std::move(entry));
    ++expectedSeq;
  }
  return out;
}

ReplayedLog loadLog(const std::filesystem::path& path) {
  ReplayedLog r = replayLog(path);
  if (r.error) throw *r.error;
  return r;
}

}  // namespace visrooms
