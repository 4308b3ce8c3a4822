#include "pdfa/experiment.hpp"

#include <charconv>
#include <stdexcept>

namespace pdfa {

std::size_t config_F(const HeuristicConfig& h) {
  if (h.uses_sketches()) return h.future_length;
  if (h.kind == HeuristicKind::AlergiaKTails) return h.ktails_depth;
  return 0;
}

StreamConfig parse_run_spec(std::string_view spec, StreamConfig base) {
  std::vector<std::string_view> parts;
  for (std::size_t start = 0;;) {
    const auto colon = spec.find(':', start);
    parts.push_back(spec.substr(start, colon == std::string_view::npos ? std::string_view::npos : colon - start));
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  if (parts.size() < 2 || parts.size() > 3) {
    throw std::invalid_argument("run spec '" + std::string(spec) + "' is not mode:heuristic[:F]");
  }
  base.mode = parse_stream_mode(parts[0]);
  base.heuristic.kind = parse_heuristic_kind(parts[1]);
  if (parts.size() == 3) {
    std::size_t f = 0;
    auto [ptr, ec] = std::from_chars(parts[2].data(), parts[2].data() + parts[2].size(), f);
    if (ec != std::errc() || ptr != parts[2].data() + parts[2].size()) {
      throw std::invalid_argument("bad F in run spec '" + std::string(spec) + "'");
    }
    if (base.heuristic.kind == HeuristicKind::AlergiaKTails) {
      base.heuristic.ktails_depth = f;
    } else {
      base.heuristic.future_length = f;
    }
  }
  base.validate();
  return base;
}

std::string format_run_spec(const StreamConfig& config) {
  return std::string(to_string(config.mode)) + ":" + std::string(to_string(config.heuristic.kind)) + ":" +
         std::to_string(config_F(config.heuristic));
}

EvaluatedRun learn_and_evaluate(const ScenarioBundle& bundle, const std::string& scenario, const StreamConfig& config,
                                double epsilon) {
  EvaluatedRun out;
  out.run = run(bundle.train, bundle.alphabet, config);
  auto& r = out.row;
  r.scenario = scenario;
  r.mode = std::string(to_string(config.mode));
  r.heuristic = std::string(to_string(config.heuristic.kind));
  r.F = config_F(config.heuristic);
  r.perplexity = perplexity(out.run.hypothesis, bundle.test, bundle.solution, epsilon);
  r.true_perplexity = true_perplexity(bundle.solution);
  r.wall_ms = out.run.wall_ms;
  r.peak_mem_bytes = out.run.peak_mem_estimate_bytes;
  r.states = out.run.hypothesis.size();
  return out;
}

}  // namespace pdfa
