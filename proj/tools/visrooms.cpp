#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "visrooms/harness/simulator.hpp"
#include "visrooms/sync/tcp_server.hpp"

namespace {

using namespace visrooms;

int serve(const std::vector<std::string>& configs, const std::string& listen,
          std::string logDir, bool autoCreate) {
  if (const char* env = std::getenv("VISROOMS_LOG_DIR"); env && *env) logDir = env;

  HubOptions options;
  std::vector<RoomConfig> rooms;
  for (const std::string& path : configs) rooms.push_back(loadRoomConfig(path));
  if (autoCreate && !rooms.empty()) options.defaultConfig = rooms.front();
  if (!logDir.empty()) {
    std::filesystem::create_directories(logDir);
    options.logDir = logDir;
  }

  // Block the signals before any thread starts so only sigwait sees them.
  sigset_t stopSignals;
  sigemptyset(&stopSignals);
  sigaddset(&stopSignals, SIGINT);
  sigaddset(&stopSignals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stopSignals, nullptr);

  TcpServer server(options);
  for (const RoomConfig& room : rooms) server.hub().addRoom(room);
  const ListenAddress address = parseListenAddress(listen);
  server.start(address);
  std::cout << "listening on " << address.host << ":" << server.port() << std::endl;

  int sig = 0;
  sigwait(&stopSignals, &sig);
  server.stop();
  server.hub().writeSnapshots();
  return 0;
}

int simRun(const std::string& scriptPath, std::optional<std::uint64_t> seed,
           const std::string& reportPath, const std::string& logDir, bool wallClock) {
  const ScenarioScript script = loadScenario(scriptPath);
  SimulationOptions options;
  options.seed = seed;
  options.wallClock = wallClock;
  if (!logDir.empty()) options.logDir = logDir;

  const SimulationResult r = simulate(script, options);
  const std::string report = renderReport(r.report, ReportFormat::Json);
  if (reportPath.empty()) {
    std::cout << report;
  } else {
    exportReport(r.report, ReportFormat::Json, reportPath);
  }
  std::cerr << "ops " << r.opsSequenced << ", version " << r.serverVersion << ", state "
            << r.serverStateHash << "\n";
  if (!r.report.convergence.converged) {
    std::cerr << "not converged; first divergent seq "
              << (r.firstDivergentSeq ? std::to_string(*r.firstDivergentSeq) : "?") << "\n";
    return 2;
  }
  return 0;
}

int simAnalyze(const std::string& oplog, const std::string& format, const std::string& out) {
  const MetricsReport r = analyzeLog(oplog);
  const ReportFormat f = format == "csv" ? ReportFormat::Csv : ReportFormat::Json;
  if (out.empty()) {
    std::cout << renderReport(r, f);
  } else {
    exportReport(r, f, out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"visrooms: shared node-link rooms for flat and spatial clients"};
  app.require_subcommand(1);

  auto* serveCmd = app.add_subcommand("serve", "Run the sync server");
  std::vector<std::string> configs;
  std::string listen = "127.0.0.1:7070";
  std::string logDir;
  bool autoCreate = false;
  serveCmd->add_option("--config", configs, "Room config file (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  serveCmd->add_option("--listen", listen, "host:port to bind (port 0 picks one)");
  serveCmd->add_option("--log-dir", logDir, "Directory for op logs and snapshots");
  serveCmd->add_flag("--auto-create", autoCreate,
                     "Create unknown rooms from the first config");

  auto* sim = app.add_subcommand("sim", "Simulated clients and log analysis");
  sim->require_subcommand(1);

  auto* run = sim->add_subcommand("run", "Run a scenario script");
  std::string script;
  std::optional<std::uint64_t> seed;
  std::string reportPath;
  std::string simLogDir;
  bool wallClock = false;
  run->add_option("--script", script, "Scenario JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the script seed");
  run->add_option("--report", reportPath, "Write the JSON report here instead of stdout");
  run->add_option("--log-dir", simLogDir, "Persist the room op log here");
  run->add_flag("--wall-clock", wallClock, "Pace the run in real time");

  auto* analyze = sim->add_subcommand("analyze", "Count operations in an op log");
  std::string oplog;
  std::string format = "json";
  std::string out;
  analyze->add_option("--oplog", oplog, "Op log file")->required()->check(CLI::ExistingFile);
  analyze->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  analyze->add_option("--out", out, "Write here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serveCmd) return serve(configs, listen, logDir, autoCreate);
    if (*run) return simRun(script, seed, reportPath, simLogDir, wallClock);
    if (*analyze) return simAnalyze(oplog, format, out);
  } catch (const std::exception& e) {
    std::cerr << "visrooms: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
