#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "pdfa/experiment.hpp"
#include "pdfa/model_io.hpp"
#include "pdfa/pac.hpp"
#include "pdfa/pautomac.hpp"
#include "pdfa/perplexity.hpp"
#include "pdfa/report.hpp"
#include "pdfa/streamer.hpp"
#include "pdfa/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kUsageError = 2;
constexpr int kIoError = 1;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

std::string dataset_root() {
  const char* env = std::getenv("PAUTOMAC_ROOT");
  return env ? env : "";
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

json config_json(const pdfa::StreamConfig& c) {
  return {{"mode", pdfa::to_string(c.mode)},
          {"batch_size", c.batch_size},
          {"threshold", c.threshold},
          {"state_bound", c.state_bound},
          {"seed", c.seed},
          {"sketch", {{"width", c.sketch_dims.width}, {"depth", c.sketch_dims.depth}}},
          {"heuristic",
           {{"kind", pdfa::to_string(c.heuristic.kind)},
            {"alpha", c.heuristic.alpha},
            {"future_length", c.heuristic.future_length},
            {"minhash_length", c.heuristic.minhash_length},
            {"ktails_depth", c.heuristic.ktails_depth},
            {"narrowing", c.heuristic.narrowing}}}};
}

// Flags shared by learn and suite.
struct LearnFlags {
  std::string mode = "stream-new";
  std::string heuristic = "css-minhash";
  std::size_t Fs = 4, lm = 2, k = 3, batch = 5000, n = 1000, w = 128, d = 4;
  std::uint64_t tS = 25, seed = 1;
  double alpha = 0.05;
  std::optional<double> beta, gamma;
  bool narrowed = false;

  void add(CLI::App* app) {
    app->add_option("--mode", mode, "batch | stream-old | stream-new")->capture_default_str();
    app->add_option("--heuristic", heuristic, "css | css-minhash | css-cellwise | alergia | alergia-ktails")
        ->capture_default_str();
    app->add_option("--Fs", Fs, "future length F_s")->capture_default_str();
    app->add_option("--lm", lm, "MinHash signature length l_m")->capture_default_str();
    app->add_option("--k", k, "k-tails depth")->capture_default_str();
    app->add_option("--batch", batch, "batch size B")->capture_default_str();
    app->add_option("--tS", tS, "blue threshold t_S")->capture_default_str();
    app->add_option("--alpha", alpha, "Hoeffding significance")->capture_default_str();
    app->add_option("--n", n, "state bound")->capture_default_str();
    app->add_option("--w", w, "sketch width")->capture_default_str();
    app->add_option("--d", d, "sketch depth")->capture_default_str();
    app->add_option("--beta", beta, "sketch error (sets w = ceil(e/beta) and the narrowing amount)");
    app->add_option("--gamma", gamma, "sketch failure probability (sets d = ceil(ln 1/gamma))");
    app->add_option("--seed", seed, "hash seed")->capture_default_str();
    app->add_flag("--narrowed", narrowed, "subtract beta from the Hoeffding threshold");
  }

  pdfa::StreamConfig resolve() const {
    pdfa::StreamConfig c;
    try {
      c.mode = pdfa::parse_stream_mode(mode);
      c.heuristic.kind = pdfa::parse_heuristic_kind(heuristic);
      c.heuristic.future_length = Fs;
      c.heuristic.minhash_length = lm;
      c.heuristic.ktails_depth = k;
      c.heuristic.alpha = alpha;
      c.batch_size = batch;
      c.threshold = tS;
      c.state_bound = n;
      c.seed = seed;
      c.sketch_dims = {w, d};
      if (beta || gamma) {
        const auto dims = pdfa::sketch_dimensions(beta.value_or(std::exp(1.0) / static_cast<double>(w)),
                                                  gamma.value_or(std::exp(-static_cast<double>(d))));
        if (beta) c.sketch_dims.width = dims.width;
        if (gamma) c.sketch_dims.depth = dims.depth;
      }
      if (narrowed) c.heuristic.narrowing = beta.value_or(std::exp(1.0) / static_cast<double>(c.sketch_dims.width));
      if (c.sketch_dims.width == 0 || c.sketch_dims.depth == 0) throw std::invalid_argument("w and d must be positive");
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

int cmd_learn(const LearnFlags& flags, const std::string& train, const fs::path& out_dir) {
  const auto config = flags.resolve();
  const auto started = timestamp();
  pdfa::RunResult result;
  auto log_pass = [](const pdfa::BatchMetrics& m) {
    std::cerr << "pass " << m.batch_index << ": traces=" << m.traces << " nodes=" << m.nodes << " red=" << m.red
              << " replayed=" << m.refinements_replayed << " failed=" << m.refinements_failed_structural
              << " discarded=" << m.refinements_discarded_consistency << " ms=" << std::fixed << std::setprecision(1)
              << m.wall_ms << std::defaultfloat << '\n';
  };
  if (train == "-") {
    pdfa::TraceReader reader(std::cin, "<stdin>");
    const pdfa::Alphabet alphabet{reader.declared_alphabet()};
    pdfa::Learner learner(alphabet, config);
    learner.on_pass = log_pass;
    while (!learner.saturated()) {
      auto body = reader.next();
      if (!body) break;
      learner.push(pdfa::Trace::from_body(*body, alphabet));
    }
    result = learner.finish();
  } else {
    const auto file = pdfa::read_trace_file(train);
    const pdfa::Alphabet alphabet{file.inferred_alphabet()};
    const auto traces = pdfa::to_traces(file.bodies, alphabet);
    pdfa::Learner learner(alphabet, config);
    learner.on_pass = log_pass;
    for (const auto& t : traces) {
      if (learner.saturated()) break;
      learner.push(t);
    }
    result = learner.finish();
  }
  fs::create_directories(out_dir);
  pdfa::save_model(out_dir / "model.json", result.hypothesis);
  write_file(out_dir / "model.dot", pdfa::model_to_dot(result.hypothesis));
  {
    std::ofstream metrics(out_dir / "metrics.csv");
    if (!metrics) throw std::runtime_error("cannot write " + (out_dir / "metrics.csv").string());
    pdfa::write_metrics_csv(metrics, result.metrics);
  }
  json manifest = {{"tool", "pdfastream"},
                   {"version", kVersion},
                   {"config", config_json(config)},
                   {"train", train},
                   {"output_dir", out_dir.string()},
                   {"started", started},
                   {"finished", timestamp()},
                   {"passes", result.passes},
                   {"traces", result.traces},
                   {"states", result.hypothesis.size()},
                   {"peak_mem_estimate_bytes", result.peak_mem_estimate_bytes},
                   {"wall_ms", result.wall_ms}};
  write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "learned " << result.hypothesis.size() << " states from " << result.traces << " traces in "
            << result.passes << " pass(es); wrote " << out_dir.string() << '\n';
  return 0;
}

// Fills mode/heuristic/F/runtime/memory from the manifest next to the model, when present.
pdfa::ResultRow row_from_manifest(const fs::path& model_path) {
  pdfa::ResultRow row;
  const auto manifest_path = model_path.parent_path() / "manifest.json";
  if (!fs::exists(manifest_path)) return row;
  std::ifstream in(manifest_path);
  try {
    const json m = json::parse(in);
    const auto& c = m.at("config");
    row.mode = c.at("mode").get<std::string>();
    row.heuristic = c.at("heuristic").at("kind").get<std::string>();
    pdfa::HeuristicConfig h;
    h.kind = pdfa::parse_heuristic_kind(row.heuristic);
    h.future_length = c.at("heuristic").at("future_length").get<std::size_t>();
    h.ktails_depth = c.at("heuristic").at("ktails_depth").get<std::size_t>();
    row.F = pdfa::config_F(h);
    row.wall_ms = m.at("wall_ms").get<double>();
    row.peak_mem_bytes = m.at("peak_mem_estimate_bytes").get<std::size_t>();
  } catch (const std::exception&) {
    // a foreign or partial manifest only loses the descriptive columns
  }
  return row;
}

pdfa::ResultRow evaluate_model(const fs::path& model_path, const fs::path& test_path, const fs::path& solution_path,
                               const std::string& scenario, double epsilon) {
  const auto model = pdfa::load_model(model_path);
  const auto test = pdfa::read_trace_file(test_path);
  const auto solution = pdfa::read_solution_file(solution_path);
  if (solution.size() != test.bodies.size()) {
    throw pdfa::ParseError(solution_path.string(), 1,
                           "solution has " + std::to_string(solution.size()) + " entries but the test file has " +
                               std::to_string(test.bodies.size()) + " strings");
  }
  const pdfa::Alphabet alphabet{std::max(test.inferred_alphabet(), model.alphabet.size)};
  const auto traces = pdfa::to_traces(test.bodies, alphabet);
  auto row = row_from_manifest(model_path);
  row.scenario = scenario;
  row.perplexity = pdfa::perplexity(model, traces, solution, epsilon);
  row.true_perplexity = pdfa::true_perplexity(solution);
  row.states = model.size();
  return row;
}

void print_row(const pdfa::ResultRow& r) {
  std::cout << std::setprecision(8) << r.scenario << ": perplexity " << r.perplexity << ", true perplexity "
            << r.true_perplexity << " (ratio " << r.ratio() << ")\n";
}

struct EvalFlags {
  std::string model, test, solution, dir, models, results, scenario;
  double epsilon = pdfa::kDefaultSmoothing;
};

int cmd_eval(const EvalFlags& f) {
  if (f.epsilon < 0.0) throw UsageError("--epsilon must be non-negative");
  std::vector<pdfa::ResultRow> rows;
  if (!f.dir.empty()) {
    const fs::path models = f.models.empty() ? fs::path(f.dir) : fs::path(f.models);
    for (const auto& s : pdfa::discover_scenarios(f.dir)) {
      const auto model = models / s.name / "model.json";
      if (!fs::exists(model)) {
        std::cerr << "skipping " << s.name << ": no " << model.string() << '\n';
        continue;
      }
      rows.push_back(evaluate_model(model, s.test, s.solution, s.name, f.epsilon));
      print_row(rows.back());
    }
  } else {
    if (f.model.empty() || f.test.empty() || f.solution.empty()) {
      throw UsageError("eval needs --model, --test and --solution (or --dir)");
    }
    std::string name = f.scenario;
    if (name.empty()) {
      name = fs::path(f.test).filename().string();
      if (auto dot = name.find('.'); dot != std::string::npos) name.resize(dot);
    }
    rows.push_back(evaluate_model(f.model, f.test, f.solution, name, f.epsilon));
    print_row(rows.back());
  }
  if (!f.results.empty()) pdfa::append_results_csv(f.results, rows);
  return 0;
}

struct PacFlags {
  pdfa::pac::PacParams p;
};

int cmd_pac(const PacFlags& f) {
  try {
    f.p.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  std::cout << pdfa::pac::report(f.p);
  return 0;
}

struct SuiteFlags {
  std::string data, out = "suite-out";
  std::vector<std::string> runs{"batch:css:3", "stream-old:css-minhash:4", "stream-new:css-minhash:4",
                                "stream-old:alergia-ktails:3", "stream-new:alergia-ktails:3"};
  unsigned jobs = 1;
  double epsilon = pdfa::kDefaultSmoothing;
};

int cmd_suite(const LearnFlags& base_flags, const SuiteFlags& f) {
  const std::string data = f.data.empty() ? dataset_root() : f.data;
  if (data.empty()) throw UsageError("suite needs --data or PAUTOMAC_ROOT");
  const auto base = base_flags.resolve();
  std::vector<pdfa::StreamConfig> configs;
  try {
    for (const auto& r : f.runs) configs.push_back(pdfa::parse_run_spec(r, base));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto scenarios = pdfa::discover_scenarios(data);
  if (scenarios.empty()) throw std::runtime_error("no scenarios found in " + data);

  std::vector<pdfa::ScenarioBundle> bundles;
  for (const auto& s : scenarios) bundles.push_back(pdfa::parse_pautomac(s.train, s.test, s.solution));

  struct Job {
    std::size_t scenario, config;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    for (std::size_t c = 0; c < configs.size(); ++c) jobs.push_back({s, c});
  }
  std::vector<pdfa::ResultRow> rows(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < jobs.size();) {
      const auto& j = jobs[i];
      try {
        rows[i] = pdfa::learn_and_evaluate(bundles[j.scenario], scenarios[j.scenario].name, configs[j.config],
                                           f.epsilon)
                      .row;
        std::lock_guard lock(io);
        std::cerr << scenarios[j.scenario].name << ' ' << pdfa::format_run_spec(configs[j.config]) << ": ratio "
                  << rows[i].ratio() << '\n';
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::max(1u, f.jobs); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  int status = 0;
  std::vector<pdfa::ResultRow> ok;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (errors[i].empty()) {
      ok.push_back(rows[i]);
    } else {
      std::cerr << "error: " << scenarios[jobs[i].scenario].name << ' ' << f.runs[jobs[i].config] << ": "
                << errors[i] << '\n';
      status = kIoError;
    }
  }
  fs::create_directories(f.out);
  {
    std::ofstream csv(fs::path(f.out) / "results.csv");
    if (!csv) throw std::runtime_error("cannot write results.csv");
    pdfa::write_results_csv(csv, ok);
  }
  const auto table = pdfa::summary_table(ok);
  write_file(fs::path(f.out) / "summary.txt", table);
  std::cout << table;
  return status;
}

struct GenerateFlags {
  std::string out;
  std::optional<std::string> name;
  pdfa::ScenarioSpec spec;
};

int cmd_generate(const GenerateFlags& f) {
  const std::string out = f.out.empty() ? dataset_root() : f.out;
  if (out.empty()) throw UsageError("generate needs --out or PAUTOMAC_ROOT");
  std::vector<std::pair<std::string, pdfa::ScenarioSpec>> todo;
  if (f.name) {
    todo.emplace_back(*f.name, f.spec);
  } else {
    todo = pdfa::desk_scenarios();
  }
  for (const auto& [name, spec] : todo) {
    pdfa::GeneratedScenario scenario;
    try {
      scenario = pdfa::generate_scenario(spec);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    const auto paths = pdfa::write_scenario(out, name, scenario);
    std::cout << "wrote " << paths.train.string() << " (" << spec.target.states << " states, |Sigma|="
              << spec.target.alphabet << ", true perplexity " << pdfa::true_perplexity(scenario.solution) << ")\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming PDFA learning with sketch-based state merging"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  LearnFlags learn_flags;
  std::string train, out_dir = "out";
  auto* learn = app.add_subcommand("learn", "learn a PDFA from a PAutomaC-format training file");
  learn_flags.add(learn);
  learn->add_option("--train", train, "training file ('-' for stdin)")->required();
  learn->add_option("--out", out_dir, "output directory")->capture_default_str();

  EvalFlags eval_flags;
  auto* eval = app.add_subcommand("eval", "score a learned model by perplexity");
  eval->add_option("--model", eval_flags.model, "model JSON");
  eval->add_option("--test", eval_flags.test, "test file");
  eval->add_option("--solution", eval_flags.solution, "solution file");
  eval->add_option("--dir", eval_flags.dir, "scenario directory (evaluates <models>/<name>/model.json for each)");
  eval->add_option("--models", eval_flags.models, "model root for --dir (default: the scenario directory)");
  eval->add_option("--results", eval_flags.results, "results CSV to append to");
  eval->add_option("--scenario", eval_flags.scenario, "scenario name for the results row");
  eval->add_option("--epsilon", eval_flags.epsilon, "smoothing mass")->capture_default_str();

  PacFlags pac_flags;
  auto* pac = app.add_subcommand("pac", "print PAC parameter suggestions");
  auto& p = pac_flags.p;
  pac->add_option("--mu", p.mu, "distinguishability")->capture_default_str();
  pac->add_option("--alpha", p.alpha)->capture_default_str();
  pac->add_option("--beta", p.beta)->capture_default_str();
  pac->add_option("--gamma", p.gamma)->capture_default_str();
  pac->add_option("--eps", p.epsilon)->capture_default_str();
  pac->add_option("--delta", p.delta_prime, "delta'")->capture_default_str();
  pac->add_option("--n", p.n, "state bound")->capture_default_str();
  pac->add_option("--sigma", p.alphabet_size, "alphabet size")->capture_default_str();
  pac->add_option("--Fs", p.future_length)->capture_default_str();
  pac->add_option("--w", p.w)->capture_default_str();
  pac->add_option("--d", p.d)->capture_default_str();

  LearnFlags suite_learn;
  SuiteFlags suite_flags;
  auto* suite = app.add_subcommand("suite", "learn and evaluate several configurations over a scenario directory");
  suite_learn.add(suite);
  suite->add_option("--data", suite_flags.data, "scenario directory (default: $PAUTOMAC_ROOT)");
  suite->add_option("--out", suite_flags.out, "output directory")->capture_default_str();
  suite->add_option("--run", suite_flags.runs, "mode:heuristic[:F], repeatable")->capture_default_str();
  suite->add_option("--jobs", suite_flags.jobs, "worker threads")->capture_default_str();
  suite->add_option("--epsilon", suite_flags.epsilon, "smoothing mass")->capture_default_str();

  GenerateFlags gen_flags;
  auto* generate = app.add_subcommand("generate", "write synthetic PAutomaC-format scenarios");
  generate->add_option("--out", gen_flags.out, "output directory (default: $PAUTOMAC_ROOT)");
  generate->add_option("--name", gen_flags.name, "write one custom scenario instead of the desk set");
  generate->add_option("--states", gen_flags.spec.target.states)->capture_default_str();
  generate->add_option("--alphabet", gen_flags.spec.target.alphabet)->capture_default_str();
  generate->add_option("--min-out", gen_flags.spec.target.min_out, "outgoing symbols per state, lower end")
      ->capture_default_str();
  generate->add_option("--max-out", gen_flags.spec.target.max_out)->capture_default_str();
  generate->add_option("--min-final", gen_flags.spec.target.min_final, "stopping probability range")
      ->capture_default_str();
  generate->add_option("--max-final", gen_flags.spec.target.max_final)->capture_default_str();
  generate->add_option("--train", gen_flags.spec.train_size)->capture_default_str();
  generate->add_option("--test", gen_flags.spec.test_size)->capture_default_str();
  generate->add_option("--seed", gen_flags.spec.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*learn) return cmd_learn(learn_flags, train, out_dir);
    if (*eval) return cmd_eval(eval_flags);
    if (*pac) return cmd_pac(pac_flags);
    if (*suite) return cmd_suite(suite_learn, suite_flags);
    if (*generate) return cmd_generate(gen_flags);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoError;
  }
  return kUsageError;
}
