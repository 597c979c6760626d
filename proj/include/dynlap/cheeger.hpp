#pragma once

#include <vector>

#include "dynlap/fem.hpp"
#include "dynlap/flow.hpp"

namespace dynlap {

struct Polyline {
    std::vector<Vec2> points;
    bool closed = false;
};

/// Level curves of a nodal function, chained into polylines. Chains are
/// oriented with the superlevel region {u > level} on the left, so signed
/// shoelace areas add up to the region area. On periodic domains seams are
/// stitched through canonical edge keys; consecutive points may then jump
/// by one period and lengths use unwrapped displacements.
struct ContourSet {
    double level = 0.0;
    std::vector<Polyline> chains;
    Domain domain;
    FeFunction source;
    bool level_in_range = true;

    bool empty() const { return chains.empty(); }
};

/// Marching squares on the structured grid underlying u, with linear edge
/// interpolation; saddle cells are disambiguated by the cell-center average.
ContourSet marching_squares(const FeFunction& u, double level);

enum class AreaMethod { shoelace, grid_count };

/// Area of the superlevel region {u > level}. Shoelace closes open chains
/// along the domain boundary (non-periodic domains only); grid_count counts
/// grid vertices inside the region times the cell area.
double area(const ContourSet& contours, AreaMethod method);

/// Total length of all chains (periodic-aware).
double polyline_length(const ContourSet& contours);

/// Length of the T-image of the contour: segments are bisected (midpoints
/// mapped through T) until the image length settles to refine_tol relative,
/// with a capped bisection depth.
double evolved_length(const ContourSet& contours, const FlowMap& flow, double refine_tol = 1e-3);

enum class RatioMode { static_ratio, dynamic_dirichlet, dynamic_neumann };

struct LevelRow {
    double level = 0.0;
    double area = 0.0;
    double boundary_length = 0.0;
    double evolved_length = 0.0;
    double ratio = 0.0;
};

struct LevelSetReport {
    std::vector<LevelRow> rows;
    std::vector<double> skipped_levels;  // empty contours or zero denominators
    double min_ratio = 0.0;
    double argmin_level = 0.0;
    double median_ratio = 0.0;

    bool empty() const { return rows.empty(); }
};

/// Sweep n_levels uniformly spaced levels in (0, max u) and evaluate the
/// (dynamic) Cheeger ratio of every superlevel set:
///   ratio = (len(boundary) + len(T boundary)) / (2 * denominator)
/// with denominator area(A) or, in Neumann mode, min(area(A), area(M\A)).
/// The static mode sets the evolved length equal to the boundary length.
/// The area method follows the domain: shoelace on non-periodic domains,
/// grid counting on periodic ones.
LevelSetReport sweep_levels(const FeFunction& u, const FlowMap& flow, RatioMode mode, int n_levels,
                            double refine_tol = 1e-3);

}  // namespace dynlap
