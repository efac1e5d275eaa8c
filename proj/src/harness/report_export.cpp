#include <fstream>
#include <sstream>

#include "visrooms/harness/metrics.hpp"

namespace visrooms {

namespace {

// Quotes a CSV field only when it needs it.
std::string csvField(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> splitCsvLine(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

}  // namespace

std::string renderReport(const MetricsReport& r, ReportFormat format) {
  if (format == ReportFormat::Json) return reportToJson(r).dump(2) + "\n";
  std::string out = "user,opKind,count\n";
  for (const auto& [user, m] : r.perUser) {
    for (OpKind k : kAllOpKinds) {
      const std::uint64_t n = m.opCounts[static_cast<std::size_t>(k)];
      if (n == 0) continue;
      out += csvField(user) + "," + std::string(opKindName(k)) + "," + std::to_string(n) + "\n";
    }
  }
  return out;
}

void exportReport(const MetricsReport& r, ReportFormat format,
                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << renderReport(r, format);
  out.flush();
  if (!out) throw IoError("write failed on " + path.string());
}

std::map<std::string, std::map<std::string, std::uint64_t>> parseReportCsv(
    const std::string& csv) {
  std::map<std::string, std::map<std::string, std::uint64_t>> out;
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "user,opKind,count") {
    throw std::invalid_argument("missing CSV header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = splitCsvLine(line);
    if (f.size() != 3) throw std::invalid_argument("bad CSV row: " + line);
    out[f[0]][f[1]] = std::stoull(f[2]);
  }
  return out;
}

}  // namespace visrooms
