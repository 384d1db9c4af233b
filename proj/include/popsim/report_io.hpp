#pragma once
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "popsim/experiments.hpp"

namespace popsim {

/// File stem used for a report: <scenario>_<model>
std::string report_stem(const SpreadReport& r);

/// CSV: '#'-prefixed key=value metadata, then columns y_m,p_y,probability
void write_report_csv(std::ostream& os, const SpreadReport& r);
SpreadReport read_report_csv(std::istream& is);

/// Monte Carlo detector counts: columns y_m,p_y,counts
void write_clicks_csv(std::ostream& os, const SpreadReport& r, const std::vector<std::uint64_t>& counts);

nlohmann::json timing_json(const TimingReport& t);
nlohmann::json imaging_json(const std::optional<ImagingReport>& i);
/// JSON summary: spreads, ratios to hbar/d, timing and imaging audits, provenance
nlohmann::json report_summary(const SpreadReport& r, const ScenarioResult& context);

/// Writes to a temporary sibling and renames it into place
void write_atomic(const std::filesystem::path& path, const std::string& content);

std::string to_string(PropagationMethod m);
std::string to_string(Coherence c);

}  // namespace popsim
