#include "dynlap/experiment.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace dynlap {

ExperimentKind experiment_kind_from_string(const std::string& s) {
    if (s == "static_square") return ExperimentKind::static_square;
    if (s == "double_gyre") return ExperimentKind::double_gyre;
    if (s == "cylinder") return ExperimentKind::cylinder;
    if (s == "standard_map") return ExperimentKind::standard_map;
    if (s == "custom") return ExperimentKind::custom;
    throw std::invalid_argument("unknown experiment: " + s);
}

const char* experiment_kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::static_square: return "static_square";
        case ExperimentKind::double_gyre: return "double_gyre";
        case ExperimentKind::cylinder: return "cylinder";
        case ExperimentKind::standard_map: return "standard_map";
        case ExperimentKind::custom: return "custom";
    }
    return "?";
}

RatioMode ratio_mode_from_string(const std::string& s) {
    if (s == "static") return RatioMode::static_ratio;
    if (s == "dynamic_dirichlet") return RatioMode::dynamic_dirichlet;
    if (s == "dynamic_neumann") return RatioMode::dynamic_neumann;
    throw std::invalid_argument("unknown ratio mode: " + s);
}

const char* ratio_mode_name(RatioMode m) {
    switch (m) {
        case RatioMode::static_ratio: return "static";
        case RatioMode::dynamic_dirichlet: return "dynamic_dirichlet";
        case RatioMode::dynamic_neumann: return "dynamic_neumann";
    }
    return "?";
}

void ExperimentConfig::resolve() {
    switch (experiment) {
        case ExperimentKind::static_square:
            if (nx == 0) { nx = 100; ny = 100; }
            if (!flow) flow = FlowMap::identity();
            if (!ratio_mode) ratio_mode = RatioMode::static_ratio;
            break;
        case ExperimentKind::double_gyre:
            if (nx == 0) { nx = 100; ny = 100; }
            if (!flow) flow = FlowMap::double_gyre();
            if (!ratio_mode) ratio_mode = RatioMode::dynamic_dirichlet;
            break;
        case ExperimentKind::cylinder:
            if (nx == 0) { nx = 200; ny = 100; }
            if (!flow) flow = FlowMap::cylinder();
            if (!ratio_mode) ratio_mode = RatioMode::dynamic_dirichlet;
            break;
        case ExperimentKind::standard_map:
            if (nx == 0) { nx = 100; ny = 100; }
            if (!flow) flow = FlowMap::standard_map();
            if (!ratio_mode) ratio_mode = RatioMode::dynamic_neumann;
            break;
        case ExperimentKind::custom:
            if (!flow) throw std::invalid_argument("custom experiment requires a flow");
            if (nx == 0) { nx = 100; ny = 100; }
            if (!ratio_mode)
                ratio_mode = flow->natural_domain().is_torus() ? RatioMode::dynamic_neumann
                                                               : RatioMode::dynamic_dirichlet;
            break;
    }
    if (ny == 0) ny = nx;
}

FlowMap ExperimentConfig::resolved_flow() const {
    if (!flow) throw std::logic_error("config not resolved");
    return *flow;
}

RatioMode ExperimentConfig::resolved_mode() const {
    if (!ratio_mode) throw std::logic_error("config not resolved");
    return *ratio_mode;
}

void apply_config_entry(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    auto as_double = [&](const std::string& v) {
        size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("bad number for " + key + ": " + v);
        return x;
    };
    auto as_int = [&](const std::string& v) {
        size_t pos = 0;
        const int x = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("bad integer for " + key + ": " + v);
        return x;
    };

    if (key == "experiment") {
        cfg.experiment = experiment_kind_from_string(value);
    } else if (key == "nx") {
        cfg.nx = as_int(value);
    } else if (key == "ny") {
        cfg.ny = as_int(value);
    } else if (key == "grid") {
        int nx = 0, ny = 0;
        if (std::sscanf(value.c_str(), "%dx%d", &nx, &ny) != 2)
            throw std::invalid_argument("grid must look like 100x100, got " + value);
        cfg.nx = nx;
        cfg.ny = ny;
    } else if (key == "p_values" || key == "p") {
        cfg.p_values.clear();
        std::istringstream is(value);
        std::string tok;
        while (std::getline(is, tok, ',')) cfg.p_values.push_back(as_double(tok));
        if (cfg.p_values.empty()) throw std::invalid_argument("empty p list");
    } else if (key == "alpha") {
        cfg.solver.alpha = as_double(value);
    } else if (key == "grad_tol") {
        cfg.solver.grad_tol = as_double(value);
    } else if (key == "step_tol") {
        cfg.solver.step_tol = as_double(value);
    } else if (key == "max_iter") {
        cfg.solver.max_iter = as_int(value);
    } else if (key == "max_halvings") {
        cfg.solver.max_halvings = as_int(value);
    } else if (key == "ratio_mode") {
        cfg.ratio_mode = ratio_mode_from_string(value);
    } else if (key == "n_levels" || key == "levels") {
        cfg.n_levels = as_int(value);
    } else if (key == "refine_tol") {
        cfg.refine_tol = as_double(value);
    } else if (key == "out") {
        cfg.out_dir = value;
    } else if (key == "cache") {
        cfg.cache_dir = value;
    } else if (key == "workers") {
        cfg.workers = as_int(value);
    } else if (key == "warm_start") {
        cfg.warm_start = (value == "1" || value == "true");
    } else if (key == "flow") {
        if (value == "identity") cfg.flow = FlowMap::identity();
        else if (value == "double_gyre") cfg.flow = FlowMap::double_gyre();
        else if (value == "cylinder") cfg.flow = FlowMap::cylinder();
        else if (value == "standard_map") cfg.flow = FlowMap::standard_map();
        else throw std::invalid_argument("unknown flow: " + value);
    } else if (key == "flow_time") {
        if (!cfg.flow) throw std::invalid_argument("flow_time given before flow");
        cfg.flow->flow_time = as_double(value);
    } else if (key == "map_parameter") {
        if (!cfg.flow) throw std::invalid_argument("map_parameter given before flow");
        cfg.flow->map_parameter = as_double(value);
    } else {
        throw std::invalid_argument("unknown config key: " + key);
    }
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    ExperimentConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        auto issp = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
        while (!line.empty() && issp(line.front())) line.erase(line.begin());
        while (!line.empty() && issp(line.back())) line.pop_back();
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key = value");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        while (!key.empty() && issp(key.back())) key.pop_back();
        while (!value.empty() && issp(value.front())) value.erase(value.begin());
        try {
            apply_config_entry(cfg, key, value);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

namespace {

std::string p_tag(double p) {
    std::ostringstream os;
    os << p;
    std::string s = os.str();
    for (auto& c : s)
        if (c == '.') c = '_';
    return s;
}

}  // namespace

RunArtifacts run_experiment(const ExperimentConfig& config) {
    ExperimentConfig cfg = config;
    cfg.resolve();

    const FlowMap flow = cfg.resolved_flow();
    const Domain dom = flow.natural_domain();
    auto mesh = std::make_shared<Mesh>(dom, cfg.nx, cfg.ny);

    std::filesystem::create_directories(cfg.out_dir);
    if (cfg.cache_dir) std::filesystem::create_directories(*cfg.cache_dir);

    const TransportData transport = precompute_transport(flow, *mesh, cfg.cache_dir);

    const bool boundaryless = (mesh->num_boundary_nodes() == 0);
    const LinearConstraint constraint = boundaryless
                                            ? LinearConstraint::zero_mean(lumped_mass(*mesh))
                                            : LinearConstraint::dirichlet(mesh->boundary_node_indices());
    const WhichPair which = boundaryless ? WhichPair::second : WhichPair::first;
    const RatioMode mode = cfg.resolved_mode();

    const EigenPair linear = init_p2(mesh, transport, which, constraint);

    RunArtifacts art;
    art.results.resize(cfg.p_values.size());

    auto solve_one = [&](size_t idx) {
        PerPResult& res = art.results[idx];
        res.p = cfg.p_values[idx];
        try {
            const PSetting p(res.p);
            if (res.p < 1.3)
                throw std::invalid_argument(
                    "p below 1.3 is outside the supported range (convergence degrades as p -> 1)");
            EigenPair pair;
            if (which == WhichPair::first) {
                pair = solve_first(p, mesh, transport, cfg.solver, linear.u, constraint);
            } else {
                FeFunction v0 = linear.u;
                constraint.project_solution(v0.values);
                pair = solve_second(p, mesh, transport, cfg.solver, v0, constraint);
            }
            pair.init_mode = "p2";
            res.pair = std::move(pair);
            res.report = sweep_levels(res.pair.u, flow, mode, cfg.n_levels, cfg.refine_tol);
            res.solved = true;
        } catch (const std::exception& e) {
            res.error = e.what();
        }
    };

    if (cfg.workers > 1) {
        std::vector<std::thread> pool;
        std::atomic_size_t cursor{0};
        const int n_workers = std::min<int>(cfg.workers, static_cast<int>(cfg.p_values.size()));
        for (int w = 0; w < n_workers; ++w)
            pool.emplace_back([&]() {
                for (size_t i = cursor.fetch_add(1); i < cfg.p_values.size(); i = cursor.fetch_add(1))
                    solve_one(i);
            });
        for (auto& th : pool) th.join();
    } else {
        for (size_t i = 0; i < cfg.p_values.size(); ++i) solve_one(i);
    }

    art.all_converged = true;
    for (size_t i = 0; i < art.results.size(); ++i) {
        PerPResult& res = art.results[i];
        if (!res.solved) {
            art.all_converged = false;
            continue;
        }
        if (!res.pair.converged()) art.all_converged = false;

        const std::string tag = p_tag(res.p);
        const std::string base = cfg.out_dir + "/";
        const std::string ef = base + "eigenfunction_p" + tag + ".txt";
        const std::string cv = base + "convergence_p" + tag + ".csv";
        const std::string lv = base + "levels_p" + tag + ".csv";
        const std::string ct = base + "contour_best_p" + tag + ".txt";
        const std::string meta = base + "eigenpair_p" + tag + ".json";
        dump_fefunction(res.pair.u, ef);
        write_convergence_csv(res.pair, cv);
        write_levels_csv(res.report, lv);
        write_contours(marching_squares(res.pair.u, res.report.argmin_level), ct);
        write_eigenpair_meta(res.pair, meta);
        art.eigenfunction_paths.push_back(ef);
        art.convergence_paths.push_back(cv);
        art.levels_paths.push_back(lv);
        art.contour_paths.push_back(ct);

        SummaryRow row;
        row.p = res.p;
        row.lambda = res.pair.lambda;
        row.iterations = res.pair.iterations;
        row.best_ratio = res.report.min_ratio;
        row.best_level = res.report.argmin_level;
        row.median_ratio = res.report.median_ratio;
        art.summary.push_back(row);
    }

    art.summary_path = cfg.out_dir + "/summary.csv";
    write_summary_csv(art.summary, art.summary_path);
    return art;
}

LevelSetReport analyze(const std::string& eigenfunction_path, const FlowMap& flow, RatioMode mode,
                       int n_levels, double refine_tol) {
    FeFunction u = load_fefunction(eigenfunction_path);
    if (!flow.is_identity()) {
        const Domain want = flow.natural_domain();
        const Domain& have = u.mesh->domain();
        const double eps = 1e-9;
        if (std::abs(want.x_min - have.x_min) > eps || std::abs(want.x_max - have.x_max) > eps ||
            std::abs(want.y_min - have.y_min) > eps || std::abs(want.y_max - have.y_max) > eps ||
            want.periodic_x != have.periodic_x || want.periodic_y != have.periodic_y)
            throw std::runtime_error("analyze: dump domain does not match the flow domain");
    }
    return sweep_levels(u, flow, mode, n_levels, refine_tol);
}

}  // namespace dynlap
