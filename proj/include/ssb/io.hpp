#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssb/analysis.hpp"
#include "ssb/estimation.hpp"
#include "ssb/model.hpp"
#include "ssb/simulation.hpp"

namespace ssb {

// Dataset CSV: optional '#' comment lines, a header of sacrifice times (a
// trailing unit such as "hrs" is ignored), then one row per replicate.
// Cells are separated by commas or tabs; "." or an empty cell is missing and
// dropped. Throws ParseError naming the line and column.
CountDataset parse_dataset_csv(std::istream& in, int mass);
CountDataset read_dataset_csv(const std::filesystem::path& path, int mass);
void write_dataset_csv(std::ostream& out, const CountDataset& data);

// Parameter vectors as a flat JSON object {"alpha": ..., ...}.
nlohmann::json params_to_json(const AnyParams& params);
AnyParams params_from_json(const nlohmann::json& j, ModelKind kind);

// NaN standard errors are written as null.
nlohmann::json fit_to_json(const FitResult& fit);
FitResult fit_from_json(const nlohmann::json& j);

// One row per trajectory: index, lead time, then counts for tau = 0..horizon.
void write_trajectories_csv(std::ostream& out, const std::vector<Trajectory>& trajectories);
std::vector<Trajectory> parse_trajectories_csv(std::istream& in, int mass);

void write_bic_csv(std::ostream& out, const std::vector<BicRow>& rows);
void write_replicates_csv(std::ostream& out, const ReplicateStudy& study);
void write_replicate_summary_csv(std::ostream& out, const ReplicateStudy& study);

// mean_curves.csv, cross_section_<h>.csv, spectrum_<model>.csv and
// summary.json (with `extra` merged into the summary).
void write_report(const std::filesystem::path& dir, const DynamicsReport& report,
                  const nlohmann::json& extra = nlohmann::json::object());

// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace ssb
