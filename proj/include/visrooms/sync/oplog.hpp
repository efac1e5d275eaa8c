#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "visrooms/graph/graph_state.hpp"
#include "visrooms/sync/room_config.hpp"

namespace visrooms {

/// A sequenced operation and its outcome. Rejected submissions keep their seq
/// so the log stays gapless.
struct LoggedOp {
  Operation op;
  std::optional<RejectReason> rejected;

  bool applied() const { return !rejected.has_value(); }
};

/// Operation fields plus {applied, rejectReason}.
nlohmann::json loggedOpToJson(const LoggedOp& entry);
LoggedOp loggedOpFromJson(const nlohmann::json& j);

enum class LogErrorCode { CorruptLog, SeqGap };

class LogError : public std::runtime_error {
 public:
  LogError(LogErrorCode code, std::size_t line, const std::string& what)
      : std::runtime_error(what), code_(code), line_(line) {}
  LogErrorCode code() const { return code_; }
  /// 1-based line of the offending entry.
  std::size_t line() const { return line_; }

 private:
  LogErrorCode code_;
  std::size_t line_;
};

std::filesystem::path oplogPath(const std::filesystem::path& dir, const std::string& roomId);
std::filesystem::path snapshotPath(const std::filesystem::path& dir, const std::string& roomId);

/// Appends one line per entry and flushes it before returning.
class OpLogWriter {
 public:
  /// Starts a fresh log with the header line {"roomConfig": ...}.
  static OpLogWriter create(const std::filesystem::path& path, const RoomConfig& config);
  /// Continues an existing log after `validLines` lines (header included);
  /// anything past them is cut off first.
  static OpLogWriter resume(const std::filesystem::path& path, std::size_t validLines);

  void append(const LoggedOp& entry);
  const std::filesystem::path& path() const { return path_; }

 private:
  OpLogWriter(std::filesystem::path path, std::ofstream out)
      : path_(std::move(path)), out_(std::move(out)) {}

  std::filesystem::path path_;
  std::ofstream out_;
};

/// Parsed and replayed log. On a bad line, `entries`/`state` hold everything
/// before it and `error` says where reading stopped.
struct ReplayedLog {
  RoomConfig config;
  std::vector<LoggedOp> entries;
  GraphState state;
  std::optional<LogError> error;
};

/// Reads and replays a log, stopping at the first unreadable line, seq gap,
/// or entry whose recorded outcome disagrees with the replay. Throws LogError
/// only when the header itself is unusable.
ReplayedLog replayLog(const std::filesystem::path& path);

/// Strict form: throws the first LogError.
ReplayedLog loadLog(const std::filesystem::path& path);

}  // namespace visrooms
