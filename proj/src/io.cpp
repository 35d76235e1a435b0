#include "ordcausal/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "ordcausal/errors.hpp"

namespace ordcausal {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

[[noreturn]] void cell_fail(const CsvTable& t, std::size_t row, std::size_t col,
                            const std::string& what) {
  throw ConfigError(t.source + " line " + std::to_string(t.row_lines[row]) + ": column '" +
                    t.header[col] + "': " + what);
}

std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

json copula_json(const CopulaSpec& spec) {
  return json{{"family", family_name(spec.family)},
              {"rho", spec.rho},
              {"tau", rho_to_tau(spec.family, spec.rho)}};
}

json result_json(const EstimateResult& r) {
  return json{{"estimand", estimand_name(r.estimand)},
              {"mode", mode_name(r.mode)},
              {"copula", copula_json(r.copula)},
              {"point", r.point},
              {"point_raw", r.point_raw},
              {"se", r.se},
              {"alpha", r.alpha},
              {"ci_low", r.ci_low},
              {"ci_high", r.ci_high}};
}

const char* flag_name(BreakevenFlag flag) {
  switch (flag) {
    case BreakevenFlag::Ok: return "ok";
    case BreakevenFlag::NotIdentifiedAtOne: return "not_identified_at_one";
    case BreakevenFlag::ExceedsMax: return "exceeds_max";
  }
  return "unknown";
}

}  // namespace

LoadedData load_dataset(const CsvTable& table, const AnalysisConfig& cfg) {
  const std::size_t y_col = table.column(cfg.outcome_column);
  const std::size_t a_col = table.column(cfg.treatment_column);

  std::vector<std::size_t> x_cols;
  if (!cfg.covariate_columns) {
    for (std::size_t c = 0; c < table.header.size(); ++c)
      if (c != y_col && c != a_col) x_cols.push_back(c);
  } else {
    for (const auto& name : *cfg.covariate_columns) {
      const std::size_t c = table.column(name);
      if (c == y_col || c == a_col)
        throw ConfigError(table.source + ": column '" + name +
                          "' is already the outcome or treatment");
      x_cols.push_back(c);
    }
  }

  const std::size_t n = table.rows.size();
  if (n == 0) throw ConfigError(table.source + ": no data rows");

  std::vector<int> y(n), a(n);
  Matrix x(n, x_cols.size());
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = csv_int(table, i, y_col);
    a[i] = csv_int(table, i, a_col);
    if (a[i] != 0 && a[i] != 1)
      cell_fail(table, i, a_col, "treatment must be 0 or 1, got '" + table.rows[i][a_col] + "'");
    for (std::size_t c = 0; c < x_cols.size(); ++c) x(i, c) = csv_double(table, i, x_cols[c]);
  }

  std::vector<int> codes = y;
  std::sort(codes.begin(), codes.end());
  codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
  if (codes.size() < 2)
    throw ConfigError(table.source + ": outcome column '" + cfg.outcome_column +
                      "' has a single level");

  LevelMap levels;
  levels.original_levels = codes;
  if (cfg.map_levels) {
    for (auto& yi : y)
      yi = static_cast<int>(std::lower_bound(codes.begin(), codes.end(), yi) - codes.begin());
  } else {
    const int max_code = codes.back();
    if (codes.front() != 0 || max_code + 1 != static_cast<int>(codes.size())) {
      std::string seen;
      for (const int c : codes) seen += (seen.empty() ? "" : ",") + std::to_string(c);
      throw ConfigError(table.source + ": outcome levels {" + seen +
                        "} are not the contiguous range 0.." + std::to_string(max_code) +
                        "; set \"map_levels\": true to relabel");
    }
  }

  LoadedData loaded;
  loaded.data = Dataset::create(std::move(y), std::move(a), std::move(x),
                                static_cast<int>(codes.size()));
  loaded.levels = std::move(levels);
  return loaded;
}

void write_file_atomic(const std::string& path, std::string_view content) {
  const fs::path target(path);
  fs::path dir = target.parent_path();
  if (dir.empty()) dir = ".";

  std::random_device rd;
  std::ostringstream suffix;
  suffix << ".tmp" << std::hex << rd() << rd();
  const fs::path tmp = dir / (target.filename().string() + suffix.str());

  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError(path + ": cannot create output file");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ignore;
      fs::remove(tmp, ignore);
      throw ConfigError(path + ": write failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    std::error_code ignore;
    fs::remove(tmp, ignore);
    throw ConfigError(path + ": cannot move output into place: " + ec.message());
  }
}

std::string estimate_csv(std::span<const EstimateResult> results, const RunMeta& meta) {
  std::string out =
      "estimand,mode,family,rho,tau,n,L,point,point_raw,se,alpha,ci_low,ci_high\n";
  for (const auto& r : results) {
    out += estimand_name(r.estimand) + ',' + mode_name(r.mode) + ',' +
           family_name(r.copula.family) + ',' + fmt(r.copula.rho) + ',' +
           fmt(rho_to_tau(r.copula.family, r.copula.rho)) + ',' + std::to_string(meta.n) + ',' +
           std::to_string(meta.L) + ',' + fmt(r.point) + ',' + fmt(r.point_raw) + ',' +
           fmt(r.se) + ',' + fmt(r.alpha) + ',' + fmt(r.ci_low) + ',' + fmt(r.ci_high) + '\n';
  }
  return out;
}

std::string estimate_json(std::span<const EstimateResult> results, const RunMeta& meta) {
  json doc{{"n", meta.n}, {"L", meta.L}};
  doc["results"] = json::array();
  for (const auto& r : results) doc["results"].push_back(result_json(r));
  return doc.dump(2) + "\n";
}

std::string curve_csv(const SensitivityCurve& curve) {
  std::string out = "tau,point,se,ci_low,ci_high,env_low,env_high\n";
  for (std::size_t i = 0; i < curve.estimates.size(); ++i) {
    const auto& r = curve.estimates[i];
    out += fmt(curve.grid.taus[i]) + ',' + fmt(r.point) + ',' + fmt(r.se) + ',' +
           fmt(r.ci_low) + ',' + fmt(r.ci_high) + ',' + fmt(curve.envelope.lower) + ',' +
           fmt(curve.envelope.upper) + '\n';
  }
  return out;
}

std::string curve_json(const SensitivityCurve& curve, const RunMeta& meta) {
  json doc{{"n", meta.n},
           {"L", meta.L},
           {"family", family_name(curve.grid.family)},
           {"envelope", {{"lower", curve.envelope.lower}, {"upper", curve.envelope.upper}}}};
  doc["points"] = json::array();
  for (std::size_t i = 0; i < curve.estimates.size(); ++i) {
    json point = result_json(curve.estimates[i]);
    point["tau"] = curve.grid.taus[i];
    doc["points"].push_back(std::move(point));
  }
  doc["skipped"] = json::array();
  for (const auto& s : curve.skipped)
    doc["skipped"].push_back(json{{"tau", s.tau}, {"reason", s.reason}});
  return doc.dump(2) + "\n";
}

std::string gamma_csv(const GammaReport& report) {
  std::string out =
      "gamma,tau,lower,lower_se,lower_ci_low,lower_ci_high,"
      "upper,upper_se,upper_ci_low,upper_ci_high\n";
  for (const auto& row : report.rows) {
    out += fmt(row.gamma) + ',' + fmt(row.tau) + ',' + fmt(row.lower.point) + ',' +
           fmt(row.lower.se) + ',' + fmt(row.lower.ci_low) + ',' + fmt(row.lower.ci_high) + ',' +
           fmt(row.upper.point) + ',' + fmt(row.upper.se) + ',' + fmt(row.upper.ci_low) + ',' +
           fmt(row.upper.ci_high) + '\n';
  }
  return out;
}

std::string gamma_json(const GammaReport& report, const RunMeta& meta) {
  json doc{{"n", meta.n},
           {"L", meta.L},
           {"estimand", estimand_name(report.estimand)},
           {"copula", copula_json(report.copula)}};
  doc["rows"] = json::array();
  for (const auto& row : report.rows) {
    doc["rows"].push_back(json{{"gamma", row.gamma},
                               {"tau", row.tau},
                               {"lower", result_json(row.lower)},
                               {"upper", result_json(row.upper)}});
  }
  if (report.breakeven) {
    doc["breakeven"] = json{{"gamma_star", report.breakeven->gamma_star},
                            {"flag", flag_name(report.breakeven->flag)},
                            {"null_value", *report.null_value}};
  } else {
    doc["breakeven"] = nullptr;
  }
  return doc.dump(2) + "\n";
}

std::string influence_csv(std::span<const EstimateResult> results) {
  if (results.empty()) throw ConfigError("influence output needs at least one result");
  const std::size_t n = results[0].if_values.size();
  std::string out = "row";
  for (const auto& r : results) {
    out += ',' + estimand_name(r.estimand) + '_' + mode_name(r.mode);
    if (r.if_values.size() != n)
      throw ConfigError("influence vectors differ in length across results");
  }
  out += '\n';
  for (std::size_t i = 0; i < n; ++i) {
    out += std::to_string(i);
    for (const auto& r : results) out += ',' + fmt(r.if_values[i]);
    out += '\n';
  }
  return out;
}

}  // namespace ordcausal
