#include <cstdio>
#include <fstream>
#include <sstream>

#include "hearth/sim.hpp"

namespace hearth {

namespace {

const char* kHeader =
    "mode,scheme,incorrect_states,handler_caused_incorrect,events,events_dispatched,events_suppressed,"
    "actuations,restarts,energy_mj,sessions,repaired,unrepaired,rollbacks,rollback_successes,rollback_actuations";

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string label(const RunMetrics& m) {
  std::string s(to_string(m.mode));
  if (!m.scheme.empty()) s += " (" + m.scheme + ")";
  return s;
}

const RunMetrics* find(const std::vector<RunMetrics>& runs, RunKind k) {
  for (const auto& r : runs) {
    if (r.mode == k) return &r;
  }
  return nullptr;
}

}  // namespace

double reduction(double reference, double value) { return reference == 0.0 ? 0.0 : (reference - value) / reference; }

std::string report_csv(const std::vector<RunMetrics>& runs) {
  std::ostringstream os;
  os << kHeader << '\n';
  for (const auto& m : runs) {
    os << mode_letter(m.mode) << ',' << m.scheme << ',' << m.incorrect_states << ',' << m.handler_caused_incorrect
       << ',' << m.events << ',' << m.events_dispatched << ',' << m.events_suppressed << ',' << m.actuations << ','
       << m.restarts << ',' << fixed(m.energy_mj) << ',' << m.sessions << ',' << m.repaired << ',' << m.unrepaired
       << ',' << m.rollbacks << ',' << m.rollback_successes << ',' << m.rollback_actuations << '\n';
  }
  return os.str();
}

std::vector<RunMetrics> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<RunMetrics> out;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.rfind("mode,", 0) == 0) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 16) throw ParseError(line_no, "expected 16 report columns");
    const auto kind = run_kind_from_letter(f[0]);
    if (!kind) throw ParseError(line_no, "unknown mode '" + f[0] + "'");
    RunMetrics m;
    m.mode = *kind;
    m.scheme = f[1];
    try {
      auto u = [&](std::size_t i) { return static_cast<std::uint64_t>(std::stoull(f[i])); };
      m.incorrect_states = u(2);
      m.handler_caused_incorrect = u(3);
      m.events = u(4);
      m.events_dispatched = u(5);
      m.events_suppressed = u(6);
      m.actuations = u(7);
      m.restarts = u(8);
      m.energy_mj = std::stod(f[9]);
      m.sessions = u(10);
      m.repaired = u(11);
      m.unrepaired = u(12);
      m.rollbacks = u(13);
      m.rollback_successes = u(14);
      m.rollback_actuations = u(15);
    } catch (const std::logic_error&) {
      throw ParseError(line_no, "bad number");
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::string report_summary(const std::vector<RunMetrics>& runs) {
  std::ostringstream os;
  const RunMetrics* none = find(runs, RunKind::NoHandler);
  const RunMetrics* supp = find(runs, RunKind::SuppressionOnly);
  for (const auto& m : runs) {
    os << label(m) << '\n';
    os << "  incorrect states: " << m.incorrect_states;
    if (m.mode == RunKind::SuppressionOnly || m.mode == RunKind::FullHandler) {
      os << " (handler-caused " << m.handler_caused_incorrect;
      if (m.incorrect_states) {
        os << ", " << fixed(100.0 * static_cast<double>(m.handler_caused_incorrect) /
                               static_cast<double>(m.incorrect_states), 2)
           << "%";
      }
      os << ')';
    }
    os << '\n';
    if (none && m.mode != RunKind::NoHandler && m.mode != RunKind::Baseline) {
      os << "  reduction vs NoHandler: "
         << fixed(100.0 * reduction(static_cast<double>(none->incorrect_states),
                                    static_cast<double>(m.incorrect_states)), 2)
         << "% incorrect, " << fixed(100.0 * reduction(none->energy_mj, m.energy_mj), 2) << "% energy\n";
    }
    if (supp && m.mode == RunKind::FullHandler) {
      os << "  reduction vs SuppressionOnly: "
         << fixed(100.0 * reduction(static_cast<double>(supp->incorrect_states),
                                    static_cast<double>(m.incorrect_states)), 2)
         << "% incorrect\n";
    }
    os << "  events " << m.events << " (dispatched " << m.events_dispatched << ", suppressed " << m.events_suppressed
       << "), actuations " << m.actuations << ", restarts " << m.restarts << ", energy " << fixed(m.energy_mj, 2)
       << " mJ\n";
    if (m.sessions) {
      os << "  sessions " << m.sessions << " (repaired " << m.repaired << ", unrepaired " << m.unrepaired
         << "), rollbacks " << m.rollback_successes << '/' << m.rollbacks;
      if (m.rollback_successes) {
        os << " averaging "
           << fixed(static_cast<double>(m.rollback_actuations) / static_cast<double>(m.rollback_successes), 2)
           << " actuations";
      }
      os << '\n';
    }
  }
  return os.str();
}

std::string latency_csv(const LatencyTables& t) {
  std::ostringstream os;
  os << "table,key,fault_kind,mean_ms,stddev_ms,repaired_fraction,unrepairable\n";
  for (const auto& f : t.functions)
    os << "function," << f.function << ",," << fixed(f.mean_ms) << ',' << fixed(f.stddev_ms) << ",,\n";
  for (const auto& h : t.handle_times) {
    os << "handle_time," << h.scheme << ',' << to_string(h.kind) << ',' << fixed(h.mean_ms) << ",,"
       << fixed(h.repaired_fraction) << ',' << (h.unrepairable ? 1 : 0) << '\n';
  }
  for (const auto& [s, ms] : t.rollback_ms_by_scheme) os << "rollback_time," << s << ",," << fixed(ms) << ",,,\n";
  return os.str();
}

std::string latency_summary(const LatencyTables& t) {
  std::ostringstream os;
  os << "function            mean ms     stddev ms\n";
  for (const auto& f : t.functions) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-18s %10.3f %12.3f\n", f.function.c_str(), f.mean_ms, f.stddev_ms);
    os << buf;
  }
  std::string current;
  for (const auto& h : t.handle_times) {
    if (h.scheme != current) {
      current = h.scheme;
      os << '\n' << current << " (rollback " << fixed(t.rollback_ms_by_scheme.at(current), 3) << " ms)\n";
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "  %-15s %10.1f ms  repaired %5.1f%%%s\n", std::string(to_string(h.kind)).c_str(),
                  h.mean_ms, 100.0 * h.repaired_fraction, h.unrepairable ? "  unrepairable" : "");
    os << buf;
  }
  return os.str();
}

void emit_report(const std::filesystem::path& dir, const std::vector<RunMetrics>& runs) {
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "report.csv");
  std::ofstream summary(dir / "summary.txt");
  if (!csv || !summary) throw Error("cannot write report in " + dir.string());
  csv << report_csv(runs);
  summary << report_summary(runs);
}

}  // namespace hearth
