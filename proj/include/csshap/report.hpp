#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "csshap/attribution.hpp"
#include "csshap/heatmap.hpp"
#include "csshap/json_util.hpp"

namespace csshap {

// Writes summary.json, class_<k>.csv, class_<k>.png and representation.png
// for one attributed sample into dir.
void write_attribution_outputs(const AttributionMap& map, const DomainRepresentation& rep,
                               const std::filesystem::path& dir, const std::string& context_json = "{}");

// Panel of the explained sample in its own domain (magnitudes).
Image render_representation(const DomainRepresentation& rep);

// JSON Schema check (RapidJSON validator). Empty when valid, otherwise a
// message naming the first violation.
std::vector<std::string> validate_json_schema(const Json& doc, const Json& schema);

std::filesystem::path schema_path(const std::string& name);

// Collates a run directory into report.md; missing domains get an explicit
// "not computed" placeholder. Returns the report path.
std::filesystem::path write_study_report(const std::filesystem::path& run_dir);

}  // namespace csshap
