#pragma once

// Command-line front end.  `run` is kept separate from main() so tests can
// drive every subcommand in-process.
//
// Exit codes: 0 = no races (or success), 1 = races found, 2 = invalid input or
// usage error.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fastracer/detector.hpp"
#include "fastracer/fasttrack.hpp"
#include "fastracer/oracle.hpp"
#include "fastracer/trace.hpp"
#include "fastracer/workload.hpp"

namespace fastracer::cli {

inline constexpr int kExitClean = 0;
inline constexpr int kExitRaces = 1;
inline constexpr int kExitInvalid = 2;

struct Config {
  std::string detector = "fastracer";
  std::uint64_t threshold = kDefaultThreshold;
  std::size_t cache_capacity = kDefaultCacheCapacity;
  bool dedup = false;
  bool paper_strict = false;
  bool strict_validate = false;
  std::size_t size_cap = kDefaultOracleEventCap;

  DetectorConfig detector_config() const {
    DetectorConfig c;
    c.threshold = threshold;
    c.cache_capacity = cache_capacity;
    c.paper_strict = paper_strict;
    return c;
  }
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// `builtin:<name>`, `-` for the input stream, or a file path.
inline Trace load_trace(const std::string& source, std::istream& in) {
  constexpr std::string_view kPrefix = "builtin:";
  if (source.rfind(kPrefix, 0) == 0) return builtin(std::string_view(source).substr(kPrefix.size()));
  if (source == "-") return parse_trace(in);
  std::ifstream f(source);
  if (!f) throw UsageError("cannot open trace file '" + source + "'");
  return parse_trace(f);
}

inline void write_out(const std::string& dest, const std::string& text, std::ostream& out) {
  if (dest == "-") {
    out << text;
    return;
  }
  std::ofstream f(dest);
  if (!f) throw UsageError("cannot write '" + dest + "'");
  f << text;
}

inline AnalysisResult run_detector(const Trace& t, const Config& cfg) {
  if (cfg.detector == "fastracer") return analyze_trace(t, cfg.detector_config());
  if (cfg.detector == "fasttrack") return ft_analyze(t);
  throw UsageError("unknown detector '" + cfg.detector + "' (expected fastracer or fasttrack)");
}

inline void print_stats(const AnalysisResult& r, std::ostream& out) {
  for (const auto& [name, value] : r.counters) out << "STAT " << name << '=' << value << '\n';
}

inline std::set<VarId> set_minus(const std::set<VarId>& a, const std::set<VarId>& b) {
  std::set<VarId> d;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(d, d.end()));
  return d;
}

inline int run(std::vector<std::string> args, std::istream& in, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"Trace-driven data race detection for async-finish task programs", "fastracer"};
  app.require_subcommand(1);

  Config cfg;
  std::string trace_src;
  std::string out_path = "-";
  std::uint64_t seed = 1;
  bool show_stats = false;
  GenParams gen;

  auto add_trace = [&](CLI::App* sub) {
    sub->add_option("--trace", trace_src, "trace file, builtin:<name>, or - for stdin")->required();
  };
  auto add_detector_opts = [&](CLI::App* sub) {
    sub->add_option("--threshold", cfg.threshold, "rw clock size that triggers a merge")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--cache", cfg.cache_capacity, "clock cache capacity (0 disables)")
        ->check(CLI::Range(std::size_t{0}, kMaxCacheCapacity));
  };

  auto* validate = app.add_subcommand("validate", "check async-finish well-formedness");
  add_trace(validate);
  validate->add_flag("--strict", cfg.strict_validate, "require every task to be joined");

  auto* generate_cmd = app.add_subcommand("generate", "emit a random well-formed trace");
  generate_cmd->add_option("--seed", gen.seed)->required();
  generate_cmd->add_option("--max-depth", gen.max_depth);
  generate_cmd->add_option("--max-fanout", gen.max_fanout);
  generate_cmd->add_option("--min-fanout", gen.min_fanout);
  generate_cmd->add_option("--max-tasks", gen.max_tasks);
  generate_cmd->add_option("--vars", gen.n_vars);
  generate_cmd->add_option("--locks", gen.n_locks);
  generate_cmd->add_option("--accesses", gen.n_accesses);
  generate_cmd->add_option("--lock-prob", gen.lock_prob)->check(CLI::Range(0.0, 1.0));
  generate_cmd->add_option("--write-prob", gen.write_prob)->check(CLI::Range(0.0, 1.0));
  generate_cmd->add_option("--escape-prob", gen.escape_prob)->check(CLI::Range(0.0, 1.0));
  generate_cmd->add_option("--max-events", gen.max_events, "event budget (0 = unbounded)");
  generate_cmd->add_option("--out", out_path, "output path or -")->required();

  auto* shuffle = app.add_subcommand("shuffle", "relinearize a trace into another valid schedule");
  add_trace(shuffle);
  shuffle->add_option("--seed", seed)->required();
  shuffle->add_option("--out", out_path, "output path or -")->required();

  auto* analyze = app.add_subcommand("analyze", "run a detector and print race reports");
  add_trace(analyze);
  analyze->add_option("--detector", cfg.detector, "fastracer or fasttrack")
      ->check(CLI::IsMember({"fastracer", "fasttrack"}));
  add_detector_opts(analyze);
  analyze->add_flag("--dedup", cfg.dedup, "one report per variable, task pair and kind");
  analyze->add_flag("--paper-strict", cfg.paper_strict,
                    "do not record reads that raced with a prior write");
  analyze->add_flag("--stats", show_stats, "print counters after the summary");

  auto* oracle = app.add_subcommand("oracle", "enumerate apparent races by brute force");
  add_trace(oracle);
  oracle->add_option("--max-events", cfg.size_cap, "refuse traces longer than this");

  auto* compare = app.add_subcommand("compare", "run both detectors and the oracle");
  add_trace(compare);
  add_detector_opts(compare);
  compare->add_option("--max-events", cfg.size_cap, "oracle size cap");

  auto* stats = app.add_subcommand("stats", "print detector counters");
  add_trace(stats);
  stats->add_option("--detector", cfg.detector)->check(CLI::IsMember({"fastracer", "fasttrack"}));
  add_detector_opts(stats);

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitClean;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return kExitInvalid;
  }

  try {
    if (*validate) {
      Trace t = load_trace(trace_src, in);
      auto errs = validate_trace(t, cfg.strict_validate);
      if (errs.empty()) {
        out << "VALID events=" << t.size() << '\n';
        return kExitClean;
      }
      for (const auto& e : errs)
        out << "INVALID line=" << e.position << " reason=" << to_string(e.reason)
            << " task=" << e.task << '\n';
      return kExitInvalid;
    }
    if (*generate_cmd) {
      write_out(out_path, write_trace(generate(gen)), out);
      return kExitClean;
    }
    if (*shuffle) {
      Trace t = load_trace(trace_src, in);
      write_out(out_path, write_trace(relinearize(t, seed)), out);
      return kExitClean;
    }
    if (*analyze) {
      Trace t = load_trace(trace_src, in);
      AnalysisResult r = run_detector(t, cfg);
      auto reports = cfg.dedup ? dedup_reports(r.reports) : r.reports;
      for (const auto& rep : reports) out << format_report(rep) << '\n';
      out << format_summary(reports.size(), r.racy_vars) << '\n';
      if (show_stats) print_stats(r, out);
      return r.racy_vars.empty() ? kExitClean : kExitRaces;
    }
    if (*oracle) {
      Trace t = load_trace(trace_src, in);
      auto pairs = apparent_races(t, cfg.size_cap);
      for (const auto& p : pairs) out << format_pair(p) << '\n';
      auto racy = racy_vars(pairs);
      out << format_summary(pairs.size(), racy) << '\n';
      return racy.empty() ? kExitClean : kExitRaces;
    }
    if (*compare) {
      Trace t = load_trace(trace_src, in);
      auto fr = analyze_trace(t, cfg.detector_config());
      auto ft = ft_analyze(t);
      auto pairs = apparent_races(t, cfg.size_cap);
      auto oracle_racy = racy_vars(pairs);
      out << "FASTRACER races=" << fr.reports.size() << " racy_vars=" << format_var_set(fr.racy_vars) << '\n';
      out << "FASTTRACK races=" << ft.reports.size() << " racy_vars=" << format_var_set(ft.racy_vars) << '\n';
      out << "ORACLE pairs=" << pairs.size() << " racy_vars=" << format_var_set(oracle_racy) << '\n';
      out << "DIFF fastracer-oracle=" << format_var_set(set_minus(fr.racy_vars, oracle_racy))
          << " oracle-fastracer=" << format_var_set(set_minus(oracle_racy, fr.racy_vars))
          << " fasttrack-oracle=" << format_var_set(set_minus(ft.racy_vars, oracle_racy))
          << " oracle-fasttrack=" << format_var_set(set_minus(oracle_racy, ft.racy_vars)) << '\n';
      out << (fr.racy_vars == oracle_racy ? "AGREE" : "DISAGREE") << '\n';
      return fr.racy_vars.empty() ? kExitClean : kExitRaces;
    }
    if (*stats) {
      Trace t = load_trace(trace_src, in);
      print_stats(run_detector(t, cfg), out);
      return kExitClean;
    }
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
  } catch (const InvalidTrace& e) {
    err << e.what() << '\n';
  } catch (const SizeLimit& e) {
    err << e.what() << " (raise --max-events)\n";
  } catch (const UnknownName& e) {
    err << e.what() << '\n';
  } catch (const UsageError& e) {
    err << e.what() << '\n';
  } catch (const std::invalid_argument& e) {
    err << e.what() << '\n';
  }
  return kExitInvalid;
}

}  // namespace fastracer::cli
