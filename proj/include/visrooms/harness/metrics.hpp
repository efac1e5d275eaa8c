#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "visrooms/graph/operation.hpp"
#include "visrooms/sync/oplog.hpp"

namespace visrooms {

struct UserMetrics {
  /// Applied ops per kind, indexed by OpKind.
  std::array<std::uint64_t, kOpKindCount> opCounts{};
  std::uint64_t rejected = 0;
  /// Applied SetCurrentDocument ops naming a document (closing is not one).
  std::uint64_t documentRetrievals = 0;
  std::uint64_t nodesCreated = 0;
  /// AddLink ops plus default links made by AddNode.
  std::uint64_t linksCreated = 0;
  /// Applied ops per minute of room time.
  std::vector<std::uint64_t> timeline;

  std::uint64_t applied() const;
  friend bool operator==(const UserMetrics&, const UserMetrics&) = default;
};

struct ConvergenceInfo {
  bool converged = true;
  /// Virtual time at which the last op outcome reached its last client.
  std::int64_t timeToQuiescenceMs = 0;

  friend bool operator==(const ConvergenceInfo&, const ConvergenceInfo&) = default;
};

struct MetricsReport {
  std::map<std::string, UserMetrics> perUser;
  ConvergenceInfo convergence;

  /// Room-wide sums over users.
  UserMetrics totals() const;
  /// Counts one logged outcome.
  void record(const LoggedOp& entry);

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

nlohmann::json reportToJson(const MetricsReport& r);
MetricsReport reportFromJson(const nlohmann::json& j);

/// Counts straight from the log text, without going through the operation
/// types used to write it. Throws LogError(CorruptLog) on a bad line.
MetricsReport analyzeLog(const std::filesystem::path& oplog);

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ReportFormat { Json, Csv };

/// CSV: header `user,opKind,count`, one row per nonzero applied count,
/// users in name order and kinds in declaration order.
std::string renderReport(const MetricsReport& r, ReportFormat format);
/// Throws IoError.
void exportReport(const MetricsReport& r, ReportFormat format,
                  const std::filesystem::path& path);
/// Reads back the CSV rows as user -> kind -> count.
std::map<std::string, std::map<std::string, std::uint64_t>> parseReportCsv(
    const std::string& csv);

}  // namespace visrooms
