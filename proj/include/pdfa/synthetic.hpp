#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pdfa/core.hpp"
#include "pdfa/pautomac.hpp"

namespace pdfa {

struct TargetSpec {
  std::size_t states = 6;
  std::size_t alphabet = 5;
  std::size_t min_out = 2;  // outgoing symbols per state
  std::size_t max_out = 3;
  double min_final = 0.1;
  double max_final = 0.3;
};

/// Random fully routed PDFA in which every state is reachable from the root.
PdfaView random_target(const TargetSpec& spec, std::mt19937_64& rng);

/// Draws one string body; stops early at `max_length` symbols.
std::vector<Symbol> sample_body(const PdfaView& target, std::mt19937_64& rng, std::size_t max_length = 1000);

struct ScenarioSpec {
  TargetSpec target;
  std::size_t train_size = 20000;
  std::size_t test_size = 1000;  // distinct strings
  std::uint64_t seed = 1;
};

struct GeneratedScenario {
  PdfaView target;
  std::vector<std::vector<Symbol>> train;
  std::vector<std::vector<Symbol>> test;
  std::vector<double> solution;  // target probabilities renormalized over the test set
};

GeneratedScenario generate_scenario(const ScenarioSpec& spec);

/// Writes the three PAutomaC-format files for `name` into `dir`.
ScenarioPaths write_scenario(const std::filesystem::path& dir, const std::string& name,
                             const GeneratedScenario& scenario);

/// The fixed set of desk-scale scenarios used by the `generate` command and
/// the acceptance harness (names "1".."5").
std::vector<std::pair<std::string, ScenarioSpec>> desk_scenarios();

}  // namespace pdfa
