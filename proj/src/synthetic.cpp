#include "pdfa/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

namespace pdfa {

PdfaView random_target(const TargetSpec& spec, std::mt19937_64& rng) {
  if (spec.states == 0 || spec.alphabet == 0) throw std::invalid_argument("empty target");
  if (spec.min_out == 0 || spec.min_out > spec.max_out || spec.max_out > spec.alphabet) {
    throw std::invalid_argument("bad out-degree range");
  }
  const std::size_t n = spec.states;
  std::vector<std::vector<Symbol>> symbols(n);
  std::vector<std::vector<StateId>> targets(n);
  std::vector<Symbol> all(spec.alphabet);
  std::iota(all.begin(), all.end(), Symbol{0});
  std::uniform_int_distribution<std::size_t> degree(spec.min_out, spec.max_out);
  for (std::size_t q = 0; q < n; ++q) {
    std::shuffle(all.begin(), all.end(), rng);
    symbols[q].assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(degree(rng)));
    targets[q].assign(symbols[q].size(), static_cast<StateId>(n));  // unassigned
  }
  // Spanning tree first: each state q > 0 hangs off an earlier state with a free slot.
  for (std::size_t q = 1; q < n; ++q) {
    std::vector<std::pair<std::size_t, std::size_t>> free;
    for (std::size_t p = 0; p < q; ++p) {
      for (std::size_t i = 0; i < targets[p].size(); ++i) {
        if (targets[p][i] == n) free.emplace_back(p, i);
      }
    }
    if (free.empty()) throw std::invalid_argument("out-degree too small to reach every state");
    const auto [p, i] = free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
    targets[p][i] = static_cast<StateId>(q);
  }
  std::uniform_int_distribution<StateId> any_state(0, static_cast<StateId>(n - 1));
  std::uniform_real_distribution<double> final_dist(spec.min_final, spec.max_final);
  std::gamma_distribution<double> weight(1.0, 1.0);

  PdfaView view;
  view.alphabet.size = spec.alphabet;
  view.states.resize(n);
  for (std::size_t q = 0; q < n; ++q) {
    auto& s = view.states[q];
    s.final_prob = final_dist(rng);
    std::vector<double> w(symbols[q].size());
    for (auto& x : w) x = weight(rng) + 0.05;
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (std::size_t i = 0; i < symbols[q].size(); ++i) {
      const StateId t = targets[q][i] == n ? any_state(rng) : targets[q][i];
      s.transitions.push_back({symbols[q][i], t, (1.0 - s.final_prob) * w[i] / total});
    }
    std::sort(s.transitions.begin(), s.transitions.end(),
              [](const auto& a, const auto& b) { return a.symbol < b.symbol; });
  }
  view.validate();
  return view;
}

std::vector<Symbol> sample_body(const PdfaView& target, std::mt19937_64& rng, std::size_t max_length) {
  std::vector<Symbol> body;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  StateId q = target.root;
  while (body.size() < max_length) {
    const auto& s = target.states[q];
    double r = u(rng);
    if (r < s.final_prob) break;
    r -= s.final_prob;
    const PdfaTransition* pick = &s.transitions.back();
    for (const auto& t : s.transitions) {
      if (r < t.prob) {
        pick = &t;
        break;
      }
      r -= t.prob;
    }
    body.push_back(pick->symbol);
    q = *pick->target;
  }
  return body;
}

GeneratedScenario generate_scenario(const ScenarioSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  GeneratedScenario out;
  out.target = random_target(spec.target, rng);
  out.train.reserve(spec.train_size);
  for (std::size_t i = 0; i < spec.train_size; ++i) out.train.push_back(sample_body(out.target, rng));

  std::set<std::vector<Symbol>> seen;
  const std::size_t max_attempts = spec.test_size * 1000;
  for (std::size_t attempt = 0; out.test.size() < spec.test_size && attempt < max_attempts; ++attempt) {
    auto body = sample_body(out.target, rng);
    if (seen.insert(body).second) out.test.push_back(std::move(body));
  }
  double total = 0.0;
  for (const auto& b : out.test) {
    out.solution.push_back(string_probability(out.target, Trace::from_body(b, out.target.alphabet)).value);
    total += out.solution.back();
  }
  for (auto& p : out.solution) p /= total;
  return out;
}

ScenarioPaths write_scenario(const std::filesystem::path& dir, const std::string& name,
                             const GeneratedScenario& scenario) {
  std::filesystem::create_directories(dir);
  const auto paths = scenario_paths(dir, name);
  auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
  };
  {
    auto out = open(paths.train);
    write_trace_stream(out, scenario.target.alphabet.size, scenario.train);
  }
  {
    auto out = open(paths.test);
    write_trace_stream(out, scenario.target.alphabet.size, scenario.test);
  }
  {
    auto out = open(paths.solution);
    write_solution_stream(out, scenario.solution);
  }
  return paths;
}

std::vector<std::pair<std::string, ScenarioSpec>> desk_scenarios() {
  auto make = [](std::size_t states, std::size_t alphabet, std::size_t max_out, std::uint64_t seed) {
    ScenarioSpec s;
    s.target.states = states;
    s.target.alphabet = alphabet;
    s.target.min_out = 2;
    s.target.max_out = max_out;
    s.target.min_final = 0.05;
    s.target.max_final = 0.2;
    s.seed = seed;
    return s;
  };
  return {{"1", make(15, 6, 4, 11)},
          {"2", make(20, 8, 4, 12)},
          {"3", make(25, 6, 3, 13)},
          {"4", make(30, 10, 5, 14)},
          {"5", make(12, 5, 3, 15)}};
}

}  // namespace pdfa
