#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dynlap/cheeger.hpp"
#include "dynlap/eigensolver.hpp"
#include "dynlap/fem.hpp"

namespace dynlap {

/// Nodal dump: header with the mesh signature, then one `x y value` line
/// per node. All floating-point output uses 17 significant digits so that
/// reloading reproduces the doubles exactly.
void dump_fefunction(const FeFunction& u, const std::string& path);

/// Reload a dump; reconstructs the mesh from the signature header.
/// Throws with the offending line number on parse errors.
FeFunction load_fefunction(const std::string& path);

/// Debug mesh dump: `x y boundary_flag` per node, then `i j k` per triangle.
void dump_mesh(const Mesh& mesh, const std::string& path);

/// Convergence log: `iter,J,step,grad_norm`.
void write_convergence_csv(const EigenPair& pair, const std::string& path);

/// Level-set report: `level,area,boundary_length,evolved_length,ratio`.
void write_levels_csv(const LevelSetReport& report, const std::string& path);

/// Contour dump: per chain a `# chain` header with level, closed flag and
/// point count, then `x y` lines.
void write_contours(const ContourSet& contours, const std::string& path);

/// Eigenpair metadata as JSON.
void write_eigenpair_meta(const EigenPair& pair, const std::string& path);

struct SummaryRow {
    double p = 0.0;
    double lambda = 0.0;
    int iterations = 0;
    double best_ratio = 0.0;
    double best_level = 0.0;
    double median_ratio = 0.0;
};

/// Summary table: `p,lambda,iterations,best_ratio,best_level,median_ratio`.
void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path);

std::string format_double(double v);  // 17 significant digits

}  // namespace dynlap
