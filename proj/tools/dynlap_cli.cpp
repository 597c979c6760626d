// Command-line driver: run the bundled experiments, solve single
// eigenpairs, re-analyze saved eigenfunctions, and manage the transport
// cache.

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"

#include "dynlap/experiment.hpp"

namespace {

using namespace dynlap;

void add_common_flags(CLI::App* cmd, ExperimentConfig& cfg, std::string& config_path,
                      std::string& grid, std::string& p_list, std::string& ratio_mode) {
    cmd->add_option("--config", config_path, "config file (key = value lines)");
    cmd->add_option("--experiment", [&cfg](const std::vector<std::string>& v) {
        cfg.experiment = experiment_kind_from_string(v.back());
        return true;
    }, "static_square | double_gyre | cylinder | standard_map | custom");
    cmd->add_option("--grid", grid, "grid size, e.g. 100x100");
    cmd->add_option("--p", p_list, "comma-separated p values (descending)");
    cmd->add_option("--grad-tol", cfg.solver.grad_tol, "descent stopping tolerance");
    cmd->add_option("--alpha", cfg.solver.alpha, "initial step scale");
    cmd->add_option("--max-iter", cfg.solver.max_iter, "iteration budget");
    cmd->add_option("--levels", cfg.n_levels, "number of level-set samples");
    cmd->add_option("--ratio-mode", ratio_mode, "static | dynamic_dirichlet | dynamic_neumann");
    cmd->add_option("--out", cfg.out_dir, "output directory");
    cmd->add_option("--cache", [&cfg](const std::vector<std::string>& v) {
        cfg.cache_dir = v.back();
        return true;
    }, "transport cache directory");
    cmd->add_option("--workers", cfg.workers, "concurrent p solves");
}

ExperimentConfig finalize_config(const std::string& config_path, ExperimentConfig flags,
                                 const std::string& grid, const std::string& p_list,
                                 const std::string& ratio_mode) {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : parse_config_file(config_path);
    // command-line values override the file
    if (flags.experiment != cfg.experiment && flags.experiment != ExperimentKind::static_square)
        cfg.experiment = flags.experiment;
    if (!grid.empty()) apply_config_entry(cfg, "grid", grid);
    if (!p_list.empty()) apply_config_entry(cfg, "p", p_list);
    if (!ratio_mode.empty()) apply_config_entry(cfg, "ratio_mode", ratio_mode);
    if (flags.solver.grad_tol != SolverParams{}.grad_tol) cfg.solver.grad_tol = flags.solver.grad_tol;
    if (flags.solver.alpha != SolverParams{}.alpha) cfg.solver.alpha = flags.solver.alpha;
    if (flags.solver.max_iter != SolverParams{}.max_iter) cfg.solver.max_iter = flags.solver.max_iter;
    if (flags.n_levels != ExperimentConfig{}.n_levels) cfg.n_levels = flags.n_levels;
    if (flags.out_dir != ExperimentConfig{}.out_dir) cfg.out_dir = flags.out_dir;
    if (flags.cache_dir) cfg.cache_dir = flags.cache_dir;
    if (flags.workers != 1) cfg.workers = flags.workers;
    return cfg;
}

int print_run_outcome(const RunArtifacts& art) {
    for (const auto& res : art.results) {
        if (!res.solved) {
            std::cout << "p = " << res.p << ": FAILED (" << res.error << ")\n";
            continue;
        }
        std::cout << "p = " << res.p << ": lambda = " << format_double(res.pair.lambda)
                  << ", iterations = " << res.pair.iterations << ", termination = "
                  << termination_name(res.pair.termination)
                  << ", best ratio = " << format_double(res.report.min_ratio) << " at level "
                  << format_double(res.report.argmin_level)
                  << ", median ratio = " << format_double(res.report.median_ratio) << "\n";
    }
    std::cout << "summary: " << art.summary_path << "\n";
    return art.all_converged ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dynamic p-Laplacian eigenpairs and coherent-set Cheeger ratios"};
    app.require_subcommand(1);

    // --- run ---
    ExperimentConfig run_cfg;
    std::string run_config_path, run_grid, run_p, run_mode;
    auto* run_cmd = app.add_subcommand("run", "run a full experiment (solve + level sweep)");
    add_common_flags(run_cmd, run_cfg, run_config_path, run_grid, run_p, run_mode);

    // --- solve ---
    ExperimentConfig solve_cfg;
    std::string solve_config_path, solve_grid, solve_p, solve_mode;
    auto* solve_cmd = app.add_subcommand("solve", "solve eigenpairs only (no level sweep)");
    add_common_flags(solve_cmd, solve_cfg, solve_config_path, solve_grid, solve_p, solve_mode);

    // --- analyze ---
    std::string an_path, an_flow = "identity", an_mode = "static";
    int an_levels = 100;
    double an_refine = 1e-3, an_flow_time = -1.0;
    auto* an_cmd = app.add_subcommand("analyze", "level-set report for a saved eigenfunction");
    an_cmd->add_option("dump", an_path, "eigenfunction dump path")->required();
    an_cmd->add_option("--flow", an_flow, "identity | double_gyre | cylinder | standard_map");
    an_cmd->add_option("--flow-time", an_flow_time, "override the flow time");
    an_cmd->add_option("--ratio-mode", an_mode, "static | dynamic_dirichlet | dynamic_neumann");
    an_cmd->add_option("--levels", an_levels, "number of level-set samples");
    an_cmd->add_option("--refine-tol", an_refine, "evolved-length refinement tolerance");
    std::string an_out;
    an_cmd->add_option("--out", an_out, "write the report CSV here (default stdout)");

    // --- cache ---
    std::string cache_dir;
    bool cache_clear = false;
    auto* cache_cmd = app.add_subcommand("cache", "inspect or clear the transport cache");
    cache_cmd->add_option("dir", cache_dir, "cache directory")->required();
    cache_cmd->add_flag("--clear", cache_clear, "remove cached transport tables");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed() || solve_cmd->parsed()) {
            const bool is_run = run_cmd->parsed();
            ExperimentConfig cfg = is_run
                                       ? finalize_config(run_config_path, run_cfg, run_grid, run_p, run_mode)
                                       : finalize_config(solve_config_path, solve_cfg, solve_grid,
                                                         solve_p, solve_mode);
            if (!is_run) cfg.n_levels = 0;  // solve: skip the sweep
            if (cfg.n_levels == 0) cfg.n_levels = is_run ? 100 : 1;
            RunArtifacts art = run_experiment(cfg);
            return print_run_outcome(art);
        }
        if (an_cmd->parsed()) {
            FlowMap flow = FlowMap::identity();
            if (an_flow == "double_gyre") flow = FlowMap::double_gyre();
            else if (an_flow == "cylinder") flow = FlowMap::cylinder();
            else if (an_flow == "standard_map") flow = FlowMap::standard_map();
            else if (an_flow != "identity") throw std::invalid_argument("unknown flow: " + an_flow);
            if (an_flow_time > 0) flow.flow_time = an_flow_time;
            const LevelSetReport report =
                analyze(an_path, flow, ratio_mode_from_string(an_mode), an_levels, an_refine);
            if (an_out.empty()) {
                std::cout << "level,area,boundary_length,evolved_length,ratio\n";
                for (const auto& r : report.rows)
                    std::cout << format_double(r.level) << "," << format_double(r.area) << ","
                              << format_double(r.boundary_length) << ","
                              << format_double(r.evolved_length) << "," << format_double(r.ratio)
                              << "\n";
            } else {
                write_levels_csv(report, an_out);
            }
            std::cout << "min ratio " << format_double(report.min_ratio) << " at level "
                      << format_double(report.argmin_level) << ", median "
                      << format_double(report.median_ratio) << "\n";
            return 0;
        }
        if (cache_cmd->parsed()) {
            namespace fs = std::filesystem;
            if (!fs::exists(cache_dir)) {
                std::cout << "cache directory does not exist\n";
                return 0;
            }
            int n = 0;
            for (const auto& entry : fs::directory_iterator(cache_dir)) {
                if (entry.path().filename().string().rfind("transport_", 0) != 0) continue;
                ++n;
                if (cache_clear) {
                    fs::remove(entry.path());
                    std::cout << "removed " << entry.path().string() << "\n";
                } else {
                    std::cout << entry.path().string() << " (" << fs::file_size(entry.path())
                              << " bytes)\n";
                }
            }
            std::cout << (cache_clear ? "removed " : "found ") << n << " cached transport table(s)\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
