#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dynlap/cheeger.hpp"
#include "dynlap/eigensolver.hpp"
#include "dynlap/io.hpp"

namespace dynlap {

enum class ExperimentKind { static_square, double_gyre, cylinder, standard_map, custom };

ExperimentKind experiment_kind_from_string(const std::string& s);
const char* experiment_kind_name(ExperimentKind k);
RatioMode ratio_mode_from_string(const std::string& s);
const char* ratio_mode_name(RatioMode m);

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::static_square;
    int nx = 0, ny = 0;  // 0: experiment default
    std::vector<double> p_values = {2.0, 1.6, 1.3};
    SolverParams solver;
    std::optional<RatioMode> ratio_mode;  // default depends on the experiment
    int n_levels = 100;
    double refine_tol = 1e-3;
    std::string out_dir = "out";
    std::optional<std::string> cache_dir;
    int workers = 1;
    bool warm_start = false;
    // custom experiments pick the flow directly
    std::optional<FlowMap> flow;

    /// Fill nx/ny/ratio_mode/flow defaults for the chosen experiment.
    void resolve();
    FlowMap resolved_flow() const;
    RatioMode resolved_mode() const;
};

/// Flat key=value config file ('#' comments). Unknown keys are rejected.
ExperimentConfig parse_config_file(const std::string& path);
void apply_config_entry(ExperimentConfig& cfg, const std::string& key, const std::string& value);

struct PerPResult {
    double p = 0.0;
    bool solved = false;
    std::string error;
    EigenPair pair;
    LevelSetReport report;
};

struct RunArtifacts {
    std::vector<SummaryRow> summary;
    std::vector<PerPResult> results;
    std::string summary_path;
    std::vector<std::string> eigenfunction_paths;
    std::vector<std::string> convergence_paths;
    std::vector<std::string> levels_paths;
    std::vector<std::string> contour_paths;
    bool all_converged = false;
};

/// Run one experiment end to end: transport (cached), eigenpairs for every
/// requested p (optionally concurrent), level sweeps, artifact files.
/// Solver failures are recorded per p and do not abort the other runs.
RunArtifacts run_experiment(const ExperimentConfig& cfg);

/// Re-analyze a saved eigenfunction dump under a given flow and ratio mode.
LevelSetReport analyze(const std::string& eigenfunction_path, const FlowMap& flow, RatioMode mode,
                       int n_levels, double refine_tol = 1e-3);

}  // namespace dynlap
