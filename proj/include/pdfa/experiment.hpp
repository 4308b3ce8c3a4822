#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pdfa/pautomac.hpp"
#include "pdfa/perplexity.hpp"
#include "pdfa/report.hpp"
#include "pdfa/streamer.hpp"

namespace pdfa {

/// F_s for the CSS family, k for k-tails, 0 otherwise.
std::size_t config_F(const HeuristicConfig& h);

/// Parses "mode:heuristic[:F]" (e.g. "stream-new:css-minhash:4") on top of `base`.
StreamConfig parse_run_spec(std::string_view spec, StreamConfig base = {});
std::string format_run_spec(const StreamConfig& config);

struct EvaluatedRun {
  RunResult run;
  ResultRow row;
};

/// Learns on the training set of `bundle` and scores the hypothesis on its test set.
EvaluatedRun learn_and_evaluate(const ScenarioBundle& bundle, const std::string& scenario, const StreamConfig& config,
                                double epsilon = kDefaultSmoothing);

}  // namespace pdfa
