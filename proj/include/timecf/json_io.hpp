#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "timecf/cfgen.hpp"
#include "timecf/classifiers.hpp"
#include "timecf/eval.hpp"
#include "timecf/ingest.hpp"
#include "timecf/shapelets.hpp"
#include "timecf/timegan.hpp"

namespace timecf {

using Json = nlohmann::ordered_json;

Json to_json(const ShapeletCandidate& s);
Json to_json(const std::vector<ShapeletCandidate>& shapelets);
// Accepts a bare array or an object with a "shapelets" array.
std::vector<ShapeletCandidate> shapelets_from_json(const Json& j);

Json to_json(const CounterfactualResult& r);
// Timing is kept out unless asked for, so reports diff cleanly across runs.
Json to_json(const ExplanationReport& r, bool include_timing = false);
Json to_json(const MetricsReport& r, bool include_timing = false);

Json to_json(const SyntheticSpec& s);
Json to_json(const RstConfig& c);
Json to_json(const TimeGanConfig& c);
Json to_json(const CnnConfig& c);
Json to_json(const ExplainConfig& c);
Json to_json(const IForestConfig& c);
Json to_json(const TrainingLog& log);

// Missing keys keep the defaults already in `out`; unknown keys are rejected.
void from_json(const Json& j, SyntheticSpec& out);
void from_json(const Json& j, RstConfig& out);
void from_json(const Json& j, TimeGanConfig& out);
void from_json(const Json& j, CnnConfig& out);
void from_json(const Json& j, ExplainConfig& out);
void from_json(const Json& j, IForestConfig& out);

// One CSV per metric: dataset,classifier,method,value (empty when absent).
std::string metric_csv(const MetricsReport& r, const std::string& metric);

}  // namespace timecf
