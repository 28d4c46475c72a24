#pragma once

#include <optional>
#include <string>

#include "timecf/cfgen.hpp"

namespace timecf::cli {

// Original series in blue; when a counterfactual is given, its replaced
// segment in orange over the same axes.
std::string explanation_svg(const TimeSeries& original, const CounterfactualResult* cf, const std::string& title,
                            const std::string& metadata_json);

}  // namespace timecf::cli
