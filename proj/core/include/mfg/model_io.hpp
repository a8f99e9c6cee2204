#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mfg/meanfield.hpp"
#include "mfg/model.hpp"
#include "mfg/nperson.hpp"
#include "mfg/splitchain.hpp"

namespace mfg::io {

struct LoadReport {
  MfgModel model;
  double max_row_correction = 0.0;  // largest kernel-row renormalization applied
  int corrected_rows = 0;
};

/// Reads a model definition document. Kernel rows may be off by up to 1e-9;
/// they are renormalized and the correction recorded. General costs are not
/// loadable; only the affine kind is a valid file cost.
LoadReport load_model(const std::filesystem::path& path);

/// Serializers for the result documents. All numbers round-trip exactly.
std::string to_json(const MfgModel& model);
std::string to_json(const ErgodicSolution& sol);
std::string to_json(const MfgSolution& sol);
std::string to_json(const NashProfile& profile);
std::string to_json(const DriftReport& drift, const MinorReport& minor);

// ---------------------------------------------------------------------------
// CSV emission; all values are printed with round-trip precision.

std::string csv_line(const std::vector<std::string>& fields);
std::string format_double(double v);

std::string trace_csv(const std::vector<SolverTraceRow>& trace);
std::string trace_csv(const std::vector<MfgTraceRow>& trace);
std::string trace_csv(const std::vector<NashTraceRow>& trace);
std::string convergence_csv(const ConvergenceTable& table);
std::string regeneration_csv(const RegenerationStats& stats);
std::string survival_csv(const CouplingReport& report);

struct PlotFile {
  std::string name;
  std::string contents;
};

/// Plot-ready CSV per figure. Refuses empty inputs.
std::vector<PlotFile> emit_plot_data(const ConvergenceTable& table);
std::vector<PlotFile> emit_plot_data(const std::vector<MfgTraceRow>& trace);
std::vector<PlotFile> emit_plot_data(const CouplingReport& report);

void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace mfg::io
