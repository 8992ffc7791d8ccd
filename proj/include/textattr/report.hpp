#pragma once

#include <string>
#include <vector>

#include "textattr/attribution.hpp"
#include "textattr/evaluation.hpp"

namespace textattr {

// One attribution as a single JSON line with a fixed key set:
// budget_or_steps, doc_id, granularity, method, phi0, seed, target_class,
// values. Keys serialize alphabetically, so output is byte-stable.
std::string attribution_to_json_line(const Attribution& attr);
Attribution attribution_from_json_line(const std::string& line);

void write_attributions_jsonl(const std::string& path,
                              const std::vector<Attribution>& attrs);
std::vector<Attribution> read_attributions_jsonl(const std::string& path);

// Robustness summary: median_diff, histograms, excluded and compared counts.
std::string robustness_summary_json(const RobustnessReport& report);

}  // namespace textattr
