#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "fastracer/types.hpp"

namespace fastracer {

enum class RaceKind : std::uint8_t { WriteRead, ReadWrite, WriteWrite };

constexpr std::string_view short_name(RaceKind k) noexcept {
  switch (k) {
    case RaceKind::WriteRead: return "WR";
    case RaceKind::ReadWrite: return "RW";
    case RaceKind::WriteWrite: return "WW";
  }
  return "??";
}

struct RaceReport {
  RaceKind kind{};
  VarId var{};
  Epoch prior{};
  Epoch current{};
  std::size_t line{0};

  friend bool operator==(const RaceReport&, const RaceReport&) = default;
};

inline std::string format_report(const RaceReport& r) {
  std::ostringstream os;
  os << "RACE " << short_name(r.kind) << " var=" << r.var << " prior=" << r.prior
     << " current=" << r.current << " line=" << r.line;
  return os.str();
}

inline std::string format_var_set(const std::set<VarId>& vars) {
  std::string s;
  for (VarId v : vars) {
    if (!s.empty()) s += ',';
    s += std::to_string(raw(v));
  }
  return s;
}

inline std::string format_summary(std::size_t races, const std::set<VarId>& racy) {
  return "SUMMARY races=" + std::to_string(races) + " racy_vars=" + format_var_set(racy);
}

struct AnalysisResult {
  std::vector<RaceReport> reports;
  std::set<VarId> racy_vars;
  std::map<std::string, std::uint64_t> counters;

  std::string format() const {
    std::string out;
    for (const auto& r : reports) {
      out += format_report(r);
      out += '\n';
    }
    out += format_summary(reports.size(), racy_vars);
    out += '\n';
    return out;
  }
};

// Output order: by trace line, then prior task id.
inline void sort_reports(std::vector<RaceReport>& reports) {
  std::stable_sort(reports.begin(), reports.end(), [](const RaceReport& a, const RaceReport& b) {
    return std::tuple(a.line, a.prior.task, a.prior.clock, a.kind) <
           std::tuple(b.line, b.prior.task, b.prior.clock, b.kind);
  });
}

// Keeps the first report per (variable, unordered task pair, kind).
inline std::vector<RaceReport> dedup_reports(const std::vector<RaceReport>& reports) {
  std::set<std::tuple<VarId, TaskId, TaskId, RaceKind>> seen;
  std::vector<RaceReport> out;
  for (const auto& r : reports) {
    auto lo = std::min(r.prior.task, r.current.task);
    auto hi = std::max(r.prior.task, r.current.task);
    if (seen.emplace(r.var, lo, hi, r.kind).second) out.push_back(r);
  }
  return out;
}

}  // namespace fastracer
