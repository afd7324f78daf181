#pragma once

// Result serialization: CSV time series (first column time, named metric
// columns, header mandatory) and a JSON run summary. Every number is written
// with 17 significant digits so reruns with the same seed produce
// byte-identical files; wall-clock time and timestamps stay out of the CSV
// for the same reason.

#include <ctime>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "rons/config.hpp"
#include "rons/experiments.hpp"

#ifndef RONS_VERSION
#define RONS_VERSION "0.0.0"
#endif

namespace rons {

namespace report_detail {

inline void append_row(std::string& out, const std::vector<double>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) out += ',';
    out += full_precision(cells[i]);
  }
  out += '\n';
}

inline void require_length(const std::vector<double>& series, std::size_t expected,
                           const char* name) {
  if (series.size() != expected)
    throw std::logic_error(std::string("report: series '") + name +
                           "' does not match the time axis");
}

}  // namespace report_detail

/// CSV for an evolution run. Density runs carry mean/covariance/conservation
/// columns, wave runs a field-error column; both carry the condition number
/// of the system the method solved at each output time.
inline std::string error_report_csv(const ErrorReport& report) {
  using report_detail::append_row;
  using report_detail::require_length;
  const std::size_t n = report.times.size();
  require_length(report.condition_numbers, n, "condition_numbers");

  std::string out;
  if (report.config.problem == Problem::fokker_planck) {
    require_length(report.mean_error, n, "mean_error");
    require_length(report.covariance_error, n, "covariance_error");
    require_length(report.conservation_drift, n, "conservation_drift");
    out = "time,mean_error,covariance_error,conservation_drift,condition_number\n";
    for (std::size_t i = 0; i < n; ++i)
      append_row(out, {report.times[i], report.mean_error[i], report.covariance_error[i],
                       report.conservation_drift[i], report.condition_numbers[i]});
  } else {
    require_length(report.field_error, n, "field_error");
    out = "time,field_error,condition_number\n";
    for (std::size_t i = 0; i < n; ++i)
      append_row(out, {report.times[i], report.field_error[i], report.condition_numbers[i]});
  }
  return out;
}

/// CSV for the sampling-error study: one column per sample count plus the
/// quadrature self-consistency gap of the reference.
inline std::string frobenius_study_csv(const FrobeniusMcStudy& study) {
  using report_detail::append_row;
  const std::size_t n = study.times.size();
  if (static_cast<std::size_t>(study.errors.rows()) != n ||
      static_cast<std::size_t>(study.reference_gap.size()) != n ||
      study.errors.cols() != static_cast<Eigen::Index>(study.sample_counts.size()))
    throw std::logic_error("report: study dimensions do not match the time axis");

  std::string out = "time";
  for (int count : study.sample_counts) out += ",frobenius_error_n" + std::to_string(count);
  out += ",reference_gap\n";
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> cells = {study.times[i]};
    for (Eigen::Index j = 0; j < study.errors.cols(); ++j)
      cells.push_back(study.errors(static_cast<Eigen::Index>(i), j));
    cells.push_back(study.reference_gap[static_cast<Eigen::Index>(i)]);
    append_row(out, cells);
  }
  return out;
}

/// Provenance for one CLI invocation; everything needed to rerun it.
struct RunManifest {
  RunConfig config;
  std::string build_id;
  std::string library_version = RONS_VERSION;
  std::string started_at;   // ISO 8601 UTC
  std::string finished_at;  // ISO 8601 UTC
  std::vector<std::string> outputs;
};

inline std::string iso8601_utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

namespace report_detail {

inline nlohmann::ordered_json base_summary(const RunManifest& manifest, const std::string& build_id,
                                           double wall_seconds) {
  const ExperimentConfig& exp = manifest.config.experiment;
  nlohmann::ordered_json j;
  j["build_id"] = build_id;
  j["library_version"] = manifest.library_version;
  j["task"] = config_detail::enum_name(manifest.config.task, config_detail::kTaskNames);
  j["problem"] = config_detail::enum_name(exp.problem, config_detail::kProblemNames);
  j["method"] = config_detail::enum_name(exp.method, config_detail::kMethodNames);
  j["seed"] = exp.seed;
  j["alpha"] = exp.alpha;
  j["integrator"] = {
      {"method",
       config_detail::enum_name(exp.integrator.method, config_detail::kIntegratorNames)},
      {"rtol", exp.integrator.rtol},
      {"atol", exp.integrator.atol},
      {"max_steps", exp.integrator.max_steps},
  };
  j["wall_seconds"] = wall_seconds;
  j["started_at"] = manifest.started_at;
  j["finished_at"] = manifest.finished_at;
  j["outputs"] = manifest.outputs;
  // Canonical echo; re-parsing it reproduces the run's configuration.
  j["config"] = render_config(manifest.config);
  return j;
}

}  // namespace report_detail

/// JSON summary for an evolution run: scalars only, the time series live in
/// the CSV next to it.
inline std::string summary_json(const ErrorReport& report, const RunManifest& manifest) {
  nlohmann::ordered_json j =
      report_detail::base_summary(manifest, report.build_id, report.wall_seconds);
  j["completed"] = report.completed;
  j["stop_reason"] = report.stop_reason;
  if (report.config.problem == Problem::fokker_planck) {
    j["final_mean_error"] = report.mean_error.back();
    j["final_covariance_error"] = report.covariance_error.back();
    double max_drift = 0.0;
    for (double d : report.conservation_drift) max_drift = std::max(max_drift, d);
    j["max_conservation_drift"] = max_drift;
  } else {
    j["final_field_error"] = report.field_error.back();
    j["time_averaged_error"] = report.time_averaged_error;
  }
  double max_condition = 0.0;
  for (double k : report.condition_numbers) max_condition = std::max(max_condition, k);
  j["max_condition_number"] = max_condition;
  return j.dump(2) + "\n";
}

inline std::string summary_json(const FrobeniusMcStudy& study, const RunManifest& manifest) {
  nlohmann::ordered_json j =
      report_detail::base_summary(manifest, study.build_id, study.wall_seconds);
  j["sample_counts"] = study.sample_counts;
  nlohmann::ordered_json final_errors = nlohmann::ordered_json::object();
  for (Eigen::Index c = 0; c < study.errors.cols(); ++c)
    final_errors["n" + std::to_string(study.sample_counts[static_cast<std::size_t>(c)])] =
        study.errors(study.errors.rows() - 1, c);
  j["final_errors"] = final_errors;
  j["max_reference_gap"] = study.reference_gap.size() > 0 ? study.reference_gap.maxCoeff() : 0.0;
  return j.dump(2) + "\n";
}

}  // namespace rons
