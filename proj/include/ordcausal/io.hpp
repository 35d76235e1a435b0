#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ordcausal/config.hpp"
#include "ordcausal/csv.hpp"
#include "ordcausal/dataset.hpp"
#include "ordcausal/sensitivity.hpp"

namespace ordcausal {

// Dataset assembled from a parsed CSV per the column configuration. The level
// map records how observed outcome codes were relabeled onto 0..L-1 (identity
// unless map_levels collapsed or shifted codes).
struct LoadedData {
  Dataset data;
  LevelMap levels;
};

// Validates cell by cell with line-precise errors: treatment must be 0/1,
// covariates finite numbers, outcomes integers. Without map_levels the
// outcome codes must already be the contiguous range 0..L-1; with it, the
// observed codes are sorted and relabeled. An absent covariate list selects
// every column other than outcome/treatment, in header order; an explicitly
// empty list selects none (intercept-only models).
LoadedData load_dataset(const CsvTable& table, const AnalysisConfig& cfg);

// Writes via a temporary file in the same directory plus rename, so readers
// never observe a partial file. Throws ConfigError on filesystem failures.
void write_file_atomic(const std::string& path, std::string_view content);

// --- emitters (pure string builders; callers pick the sink) ----------------

// Shared metadata block for single-dataset outputs.
struct RunMeta {
  std::size_t n = 0;
  int L = 0;
};

std::string estimate_csv(std::span<const EstimateResult> results, const RunMeta& meta);
std::string estimate_json(std::span<const EstimateResult> results, const RunMeta& meta);

// One row per evaluated tau with the constant envelope columns; skipped grid
// points are omitted from the CSV and listed in the JSON.
std::string curve_csv(const SensitivityCurve& curve);
std::string curve_json(const SensitivityCurve& curve, const RunMeta& meta);

// One row per gamma. breakeven may be null (not requested).
struct GammaReport {
  std::vector<GammaBoundResult> rows;
  Estimand estimand = Estimand::Psi;
  CopulaSpec copula;
  std::optional<double> null_value;
  std::optional<BreakevenResult> breakeven;
};

std::string gamma_csv(const GammaReport& report);
std::string gamma_json(const GammaReport& report, const RunMeta& meta);

// Per-unit influence values, one column per result (labeled by estimand and
// mode), preceded by the row index.
std::string influence_csv(std::span<const EstimateResult> results);

}  // namespace ordcausal
