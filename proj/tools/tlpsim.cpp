// tlpsim: run perturbation campaigns, verify traces, aggregate reports.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tlp/http_backend.hpp"
#include "tlp/tlp.hpp"

namespace fs = std::filesystem;
using namespace tlp;

namespace {

constexpr int kExitError = 2;
constexpr int kExitInvariant = 3;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::config_error, "cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(Errc::config_error, "cannot write " + p.string());
  out << text;
}

template <typename T>
std::map<std::string, T> name_map(auto all, auto name) {
  std::map<std::string, T> m;
  for (auto v : all) m.emplace(std::string(name(v)), v);
  return m;
}

struct RunOptions {
  std::vector<std::string> tasks{"matching"};
  std::vector<std::string> scenarios{"none"};
  std::vector<std::string> planners{"hcot"};
  std::string monitor = "oracle";
  double eps1 = 0.1;
  double eps2 = 0.1;
  double eps3 = 0.1;
  double failure_prob = 0.0;
  int episodes = 100;
  std::uint64_t seed = 0;
  int goal_objects = -1;
  int distractors = -1;
  int slot_capacity = 4;
  int max_dis = 2;
  unsigned threads = 1;
  std::string out;
  std::string format = "table";
};

template <typename T>
std::vector<T> expand(const std::vector<std::string>& names, const std::map<std::string, T>& known, const char* what) {
  std::vector<T> out;
  for (const auto& n : names) {
    if (n == "all") {
      for (const auto& [k, v] : known) {
        if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
      }
      continue;
    }
    auto it = known.find(n);
    if (it == known.end()) throw Error(Errc::config_error, std::string(what) + ": unknown value '" + n + "'");
    out.push_back(it->second);
  }
  return out;
}

std::string campaign_stem(const CampaignConfig& c) {
  return std::string(task_name(c.task)) + "-" + std::string(scenario_name(c.scenario)) + "-" +
         std::string(planner_name(c.planner));
}

int do_run(const RunOptions& o) {
  const auto tasks = expand(o.tasks, name_map<TaskKind>(kAllTasks, task_name), "task");
  const auto scenarios = expand(o.scenarios, name_map<Scenario>(kAllScenarios, scenario_name), "scenario");
  auto planner_names = name_map<PlannerKind>(kAllPlanners, planner_name);
  std::vector<PlannerKind> planners;
  for (const auto& n : o.planners) {
    if (n == "language") {
      planners.push_back(PlannerKind::language);
    } else {
      for (auto p : expand(std::vector<std::string>{n}, planner_names, "planner")) planners.push_back(p);
    }
  }

  NoiseModel noise;
  if (o.monitor == "noisy") {
    noise = {o.eps1, o.eps2, o.eps3};
  } else if (o.monitor != "oracle") {
    throw Error(Errc::config_error, "monitor: expected oracle or noisy");
  }

  std::optional<HttpBackendConfig> http;
  if (std::find(planners.begin(), planners.end(), PlannerKind::language) != planners.end()) {
    http = http_config_from_env();
  }

  fs::path out_dir;
  if (!o.out.empty()) {
    out_dir = o.out;
    fs::create_directories(out_dir / "traces");
  }

  std::vector<MetricsSummary> summaries;
  int violations = 0;
  for (auto task : tasks) {
    for (auto sc : scenarios) {
      for (auto pl : planners) {
        CampaignConfig c;
        c.task = task;
        c.scenario = sc;
        c.planner = pl;
        c.noise = noise;
        c.failure_prob = o.failure_prob;
        c.episodes = o.episodes;
        c.seed = o.seed;
        c.sizes = {o.goal_objects, o.distractors, o.slot_capacity};
        c.max_dis_objects = o.max_dis;
        c.threads = o.threads;
        CampaignResult r;
        if (pl == PlannerKind::language) {
          r = run_campaign(c, [&](const EpisodeSpec& spec, std::size_t) -> std::unique_ptr<Planner> {
            return std::make_unique<LanguagePlanner>(spec, std::make_unique<HttpBackend>(*http));
          });
        } else {
          r = run_campaign(c);
        }
        violations += r.summary.invariant_violations;
        if (!out_dir.empty()) write_file(out_dir / "traces" / (campaign_stem(c) + ".jsonl"), campaign_trace(c, r));
        summaries.push_back(r.summary);
      }
    }
  }

  const auto format = o.format == "csv" ? ReportFormat::csv : ReportFormat::table;
  std::cout << emit_report(summaries, format);
  if (!out_dir.empty()) {
    auto arr = nlohmann::json::array();
    for (const auto& m : summaries) arr.push_back(summary_to_json(m));
    write_file(out_dir / "summary.json", arr.dump(2) + "\n");
    write_file(out_dir / "summary.csv", emit_report(summaries, ReportFormat::csv));
  }
  if (violations > 0) {
    std::cerr << "tlpsim: " << violations << " invariant violation(s)\n";
    return kExitInvariant;
  }
  return 0;
}

std::vector<fs::path> trace_files(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      const auto dir = fs::is_directory(p / "traces") ? p / "traces" : p;
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".jsonl") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

int do_replay(const std::vector<std::string>& inputs, unsigned threads) {
  const auto files = trace_files(inputs);
  if (files.empty()) throw Error(Errc::config_error, "replay: no trace files found");
  int bad = 0;
  for (const auto& f : files) {
    const auto r = replay_trace(slurp(f), threads);
    if (r.ok) {
      std::cout << "ok       " << f.string() << " (" << r.lines_checked << " lines)\n";
    } else {
      ++bad;
      std::cout << "MISMATCH " << f.string() << " at " << r.mismatch << "\n";
    }
  }
  return bad == 0 ? 0 : 1;
}

std::vector<MetricsSummary> load_summaries(const std::string& input) {
  fs::path p(input);
  if (fs::is_directory(p)) p /= "summary.json";
  const auto text = slurp(p);
  if (p.extension() == ".csv") return parse_csv_report(text);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::serialization_error, p.string() + ": " + e.what());
  }
  std::vector<MetricsSummary> out;
  if (j.is_array()) {
    for (const auto& m : j) out.push_back(summary_from_json(m));
  } else {
    out.push_back(summary_from_json(j));
  }
  return out;
}

int do_report(const std::vector<std::string>& inputs, const std::string& format, const std::string& output) {
  std::vector<MetricsSummary> all;
  for (const auto& in : inputs) {
    for (auto& m : load_summaries(in)) all.push_back(std::move(m));
  }
  const auto text = emit_report(all, format == "csv" ? ReportFormat::csv : ReportFormat::table);
  if (output.empty()) {
    std::cout << text;
  } else {
    write_file(output, text);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabletop perturbation campaign simulator"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML or INI file with run options; command-line flags take precedence");

  RunOptions ro;
  auto* run = app.add_subcommand("run", "Run campaigns and print a report");
  run->add_option("--task", ro.tasks, "matching, stacking, pack_g, pack_b or all")->delimiter(',')->capture_default_str();
  run->add_option("--scenario", ro.scenarios,
                  "none, add_related, add_distractor, rmv_related, rmv_distractor, dis, mixed_add_dis or all")
      ->delimiter(',')
      ->capture_default_str();
  run->add_option("--planner", ro.planners, "open_loop, flat_replan, hcot, language or all")
      ->delimiter(',')
      ->capture_default_str();
  run->add_option("--monitor", ro.monitor, "oracle or noisy")
      ->check(CLI::IsMember({"oracle", "noisy"}))
      ->capture_default_str();
  run->add_option("--noise-eps1", ro.eps1, "noisy monitor: chance the outcome is inverted")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  run->add_option("--noise-eps2", ro.eps2, "noisy monitor: chance a perturbation entry is dropped")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  run->add_option("--noise-eps3", ro.eps3, "noisy monitor: chance a spurious addition is reported")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  run->add_option("--failure-prob", ro.failure_prob, "skill drop probability")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  run->add_option("--episodes", ro.episodes, "episodes per campaign")->check(CLI::PositiveNumber)->capture_default_str();
  run->add_option("--seed", ro.seed, "master seed")->capture_default_str();
  run->add_option("--goal-objects", ro.goal_objects, "goal objects per episode (-1: task default)");
  run->add_option("--distractors", ro.distractors, "distractor objects per episode (-1: task default)");
  run->add_option("--slot-capacity", ro.slot_capacity, "table slots per region")->capture_default_str();
  run->add_option("--max-dis", ro.max_dis, "most objects one displacement moves")->capture_default_str();
  run->add_option("--threads", ro.threads, "worker threads, 0 for one per core")->capture_default_str();
  run->add_option("--out", ro.out, "directory for traces/, summary.json and summary.csv");
  run->add_option("--format", ro.format, "stdout report format")
      ->check(CLI::IsMember({"table", "csv"}))
      ->capture_default_str();

  std::vector<std::string> replay_inputs;
  unsigned replay_threads = 1;
  auto* replay = app.add_subcommand("replay", "Re-run the campaigns named in trace files and compare line by line");
  replay->add_option("traces", replay_inputs, "trace files or run output directories")->required();
  replay->add_option("--threads", replay_threads, "worker threads for the re-run")->capture_default_str();

  std::vector<std::string> report_inputs;
  std::string report_format = "table";
  std::string report_output;
  auto* rep = app.add_subcommand("report", "Aggregate summaries into one table or csv");
  rep->add_option("inputs", report_inputs, "summary.json, summary.csv or run output directories")->required();
  rep->add_option("--format", report_format, "table or csv")
      ->check(CLI::IsMember({"table", "csv"}))
      ->capture_default_str();
  rep->add_option("--output,-o", report_output, "write here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return do_run(ro);
    if (*replay) return do_replay(replay_inputs, replay_threads);
    if (*rep) return do_report(report_inputs, report_format, report_output);
  } catch (const std::exception& e) {
    std::cerr << "tlpsim: " << e.what() << "\n";
    return kExitError;
  }
  return 0;
}
