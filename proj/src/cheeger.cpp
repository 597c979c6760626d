#include "dynlap/cheeger.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace dynlap {

namespace {

/// Canonical grid-edge keys: horizontal edges first (left node (i, j),
/// i < nx), then vertical edges (lower node (i, j), j < ny).
struct EdgeKeys {
    int nx, ny;
    bool per_x, per_y;
    int h_count;

    explicit EdgeKeys(const Mesh& m)
        : nx(m.nx()), ny(m.ny()), per_x(m.domain().periodic_x), per_y(m.domain().periodic_y),
          h_count(nx * (ny + 1)) {}

    int horizontal(int i, int j) const {
        if (per_y) j %= ny;
        return j * nx + i;
    }
    int vertical(int i, int j) const {
        if (per_x) i %= nx;
        return h_count + j * (nx + 1) + i;
    }
    int total() const { return h_count + (nx + 1) * ny; }
};

}  // namespace

ContourSet marching_squares(const FeFunction& u, double level) {
    const Mesh& mesh = *u.mesh;
    ContourSet out;
    out.level = level;
    out.domain = mesh.domain();
    out.source = u;

    double lo = u.values[0], hi = u.values[0];
    for (double v : u.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(level > lo && level < hi)) {
        out.level_in_range = false;
        return out;
    }

    const EdgeKeys keys(mesh);
    const int key_space = keys.total();
    std::vector<int> next(key_space, -1);
    std::vector<int> indeg(key_space, 0);
    std::vector<Vec2> pt(key_space);
    std::vector<char> has_pt(key_space, 0);

    const Domain& dom = mesh.domain();
    const double hx = mesh.hx(), hy = mesh.hy();

    auto put_point = [&](int key, Vec2 p) {
        if (!has_pt[key]) {
            pt[key] = p;
            has_pt[key] = 1;
        }
    };
    auto add_segment = [&](int from, Vec2 pf, int to, Vec2 ptto) {
        put_point(from, pf);
        put_point(to, ptto);
        next[from] = to;
        ++indeg[to];
    };

    for (int j = 0; j < mesh.ny(); ++j) {
        for (int i = 0; i < mesh.nx(); ++i) {
            const double u00 = u.values[mesh.grid_node(i, j)];
            const double u10 = u.values[mesh.grid_node(i + 1, j)];
            const double u11 = u.values[mesh.grid_node(i + 1, j + 1)];
            const double u01 = u.values[mesh.grid_node(i, j + 1)];
            const int mask = (u00 > level ? 1 : 0) | (u10 > level ? 2 : 0) |
                             (u11 > level ? 4 : 0) | (u01 > level ? 8 : 0);
            if (mask == 0 || mask == 15) continue;

            const double x0 = dom.x_min + i * hx, y0 = dom.y_min + j * hy;
            const int kB = keys.horizontal(i, j);
            const int kT = keys.horizontal(i, j + 1);
            const int kL = keys.vertical(i, j);
            const int kR = keys.vertical(i + 1, j);
            const Vec2 pB{x0 + hx * (level - u00) / (u10 - u00), y0};
            const Vec2 pT{x0 + hx * (level - u01) / (u11 - u01), y0 + hy};
            const Vec2 pL{x0, y0 + hy * (level - u00) / (u01 - u00)};
            const Vec2 pR{x0 + hx, y0 + hy * (level - u10) / (u11 - u10)};

            // directed segments with {u > level} on the left
            switch (mask) {
                case 1: add_segment(kB, pB, kL, pL); break;
                case 2: add_segment(kR, pR, kB, pB); break;
                case 4: add_segment(kT, pT, kR, pR); break;
                case 8: add_segment(kL, pL, kT, pT); break;
                case 3: add_segment(kR, pR, kL, pL); break;
                case 6: add_segment(kT, pT, kB, pB); break;
                case 12: add_segment(kL, pL, kR, pR); break;
                case 9: add_segment(kB, pB, kT, pT); break;
                case 7: add_segment(kT, pT, kL, pL); break;
                case 11: add_segment(kR, pR, kT, pT); break;
                case 13: add_segment(kB, pB, kR, pR); break;
                case 14: add_segment(kL, pL, kB, pB); break;
                case 5:
                    if (0.25 * (u00 + u10 + u11 + u01) > level) {
                        add_segment(kT, pT, kL, pL);
                        add_segment(kB, pB, kR, pR);
                    } else {
                        add_segment(kB, pB, kL, pL);
                        add_segment(kT, pT, kR, pR);
                    }
                    break;
                case 10:
                    if (0.25 * (u00 + u10 + u11 + u01) > level) {
                        add_segment(kL, pL, kB, pB);
                        add_segment(kR, pR, kT, pT);
                    } else {
                        add_segment(kR, pR, kB, pB);
                        add_segment(kL, pL, kT, pT);
                    }
                    break;
                default: break;
            }
        }
    }

    std::vector<char> consumed(key_space, 0);
    auto walk = [&](int start, bool closed) {
        Polyline line;
        line.closed = closed;
        int k = start;
        while (k != -1 && !consumed[k]) {
            line.points.push_back(pt[k]);
            consumed[k] = 1;
            k = next[k];
        }
        return line;
    };

    // open chains start at keys without incoming segments
    for (int k = 0; k < key_space; ++k)
        if (next[k] != -1 && indeg[k] == 0 && !consumed[k]) out.chains.push_back(walk(k, false));
    // what remains are closed loops
    for (int k = 0; k < key_space; ++k)
        if (next[k] != -1 && !consumed[k]) out.chains.push_back(walk(k, true));

    return out;
}

namespace {

double chain_length(const Domain& dom, const Polyline& c) {
    double len = 0.0;
    for (size_t k = 0; k + 1 < c.points.size(); ++k)
        len += norm(unwrap_displacement(dom, c.points[k], c.points[k + 1]));
    if (c.closed && c.points.size() >= 2)
        len += norm(unwrap_displacement(dom, c.points.back(), c.points.front()));
    return len;
}

double shoelace_signed(const std::vector<Vec2>& pts) {
    double twice = 0.0;
    for (size_t k = 0; k < pts.size(); ++k) {
        const Vec2& a = pts[k];
        const Vec2& b = pts[(k + 1) % pts.size()];
        twice += a.x * b.y - b.x * a.y;
    }
    return 0.5 * twice;
}

/// Counterclockwise boundary arc-length parameter of a boundary point.
double boundary_param(const Domain& dom, Vec2 p) {
    const double w = dom.width(), h = dom.height();
    const double eps = 1e-9 * std::max(w, h);
    if (std::abs(p.y - dom.y_min) < eps) return p.x - dom.x_min;                  // bottom
    if (std::abs(p.x - dom.x_max) < eps) return w + (p.y - dom.y_min);            // right
    if (std::abs(p.y - dom.y_max) < eps) return w + h + (dom.x_max - p.x);        // top
    if (std::abs(p.x - dom.x_min) < eps) return 2 * w + h + (dom.y_max - p.y);    // left
    throw std::runtime_error("shoelace: open chain endpoint not on the domain boundary");
}

Vec2 boundary_point(const Domain& dom, double s) {
    const double w = dom.width(), h = dom.height();
    if (s < w) return {dom.x_min + s, dom.y_min};
    if (s < w + h) return {dom.x_max, dom.y_min + (s - w)};
    if (s < 2 * w + h) return {dom.x_max - (s - w - h), dom.y_max};
    return {dom.x_min, dom.y_max - (s - 2 * w - h)};
}

}  // namespace

double polyline_length(const ContourSet& contours) {
    double len = 0.0;
    for (const auto& c : contours.chains) len += chain_length(contours.domain, c);
    return len;
}

double area(const ContourSet& contours, AreaMethod method) {
    const Domain& dom = contours.domain;
    if (method == AreaMethod::grid_count) {
        const FeFunction& u = contours.source;
        if (!u.mesh) throw std::invalid_argument("area: contour set carries no source function");
        int count = 0;
        for (double v : u.values)
            if (v > contours.level) ++count;
        return count * u.mesh->hx() * u.mesh->hy();
    }

    if (dom.periodic_x || dom.periodic_y)
        throw std::invalid_argument("area: shoelace requires a non-periodic domain");

    double total = 0.0;
    struct OpenChain {
        const Polyline* line;
        double s_start, s_end;
        bool used = false;
    };
    std::vector<OpenChain> open;
    for (const auto& c : contours.chains) {
        if (c.points.size() < 2) continue;
        if (c.closed) {
            total += shoelace_signed(c.points);
        } else {
            open.push_back({&c, boundary_param(dom, c.points.front()),
                            boundary_param(dom, c.points.back()), false});
        }
    }

    // Close open chains along the boundary, walking counterclockwise from
    // each exit point to the next entry point; the orientation convention
    // puts the superlevel region on the left throughout.
    const double perimeter = 2 * (dom.width() + dom.height());
    const double corners[4] = {dom.width(), dom.width() + dom.height(),
                               2 * dom.width() + dom.height(), perimeter};
    for (size_t seed = 0; seed < open.size(); ++seed) {
        if (open[seed].used) continue;
        std::vector<Vec2> poly;
        size_t cur = seed;
        for (size_t guard = 0; guard <= open.size(); ++guard) {
            open[cur].used = true;
            poly.insert(poly.end(), open[cur].line->points.begin(), open[cur].line->points.end());
            const double s_from = open[cur].s_end;
            // next chain start in counterclockwise order
            size_t best = open.size();
            double best_gap = perimeter + 1.0;
            for (size_t k = 0; k < open.size(); ++k) {
                if (open[k].used && k != seed) continue;
                double gap = open[k].s_start - s_from;
                if (gap < 0) gap += perimeter;
                if (gap < best_gap) {
                    best_gap = gap;
                    best = k;
                }
            }
            if (best == open.size())
                throw std::runtime_error("shoelace: inconsistent open-chain matching");
            // insert the corners passed on the way, in walk order
            std::vector<std::pair<double, Vec2>> passed;
            for (int c = 0; c < 4; ++c) {
                double gap = corners[c] - s_from;
                if (gap <= 0) gap += perimeter;
                if (gap < best_gap)
                    passed.emplace_back(gap, boundary_point(dom, std::fmod(corners[c], perimeter)));
            }
            std::sort(passed.begin(), passed.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            for (const auto& [gap, corner] : passed) poly.push_back(corner);
            if (best == seed) break;
            cur = best;
        }
        total += shoelace_signed(poly);
    }
    return total;
}

namespace {

/// Image length of the segment a .. a+d (d unwrapped, a inside the domain).
/// Bisect until the two-chord refinement stops changing the estimate; the
/// accepted value is the chord between the endpoint images, so the identity
/// map reproduces |d| down to the last bit.
double refine_segment(const FlowMap& flow, const Domain& dom, Vec2 a, Vec2 d, Vec2 ta, Vec2 tb,
                      double refine_tol, int depth) {
    const double chord = norm(unwrap_displacement(dom, ta, tb));
    // segments a few ulps long are contouring noise; bisecting them would
    // only refine rounding errors
    if (norm(d) <= 32 * 2.220446049250313e-16 * (1.0 + std::abs(a.x) + std::abs(a.y))) return chord;
    const Vec2 mid = wrap_point(dom, a + d * 0.5);
    const Vec2 tm = apply(flow, mid);
    const double split =
        norm(unwrap_displacement(dom, ta, tm)) + norm(unwrap_displacement(dom, tm, tb));
    if (depth >= 12 || std::abs(split - chord) <= refine_tol * std::max(split, 1e-300)) return chord;
    return refine_segment(flow, dom, a, d * 0.5, ta, tm, refine_tol, depth + 1) +
           refine_segment(flow, dom, mid, d * 0.5, tm, tb, refine_tol, depth + 1);
}

}  // namespace

double evolved_length(const ContourSet& contours, const FlowMap& flow, double refine_tol) {
    const Domain& dom = contours.domain;
    double total = 0.0;
    for (const auto& c : contours.chains) {
        const size_t n = c.points.size();
        if (n < 2) continue;
        const size_t nseg = c.closed ? n : n - 1;
        Vec2 ta = apply(flow, c.points[0]);
        for (size_t k = 0; k < nseg; ++k) {
            const Vec2& pa = c.points[k];
            const Vec2& pb = c.points[(k + 1) % n];
            const Vec2 tb = apply(flow, pb);
            total += refine_segment(flow, dom, pa, unwrap_displacement(dom, pa, pb), ta, tb,
                                    refine_tol, 0);
            ta = tb;
        }
    }
    return total;
}

LevelSetReport sweep_levels(const FeFunction& u, const FlowMap& flow, RatioMode mode, int n_levels,
                            double refine_tol) {
    const Mesh& mesh = *u.mesh;
    double lo = u.values[0], hi = u.values[0];
    for (double v : u.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi > lo)) throw std::invalid_argument("sweep_levels: function is constant");
    if (!(hi > 0.0)) throw std::invalid_argument("sweep_levels: function has no positive part");

    const bool periodic = mesh.domain().periodic_x || mesh.domain().periodic_y;
    const AreaMethod method = periodic ? AreaMethod::grid_count : AreaMethod::shoelace;
    const double domain_area = mesh.domain().area();

    // levels are independent; evaluate them concurrently and reassemble in
    // level order so results stay deterministic
    std::vector<LevelRow> slots(n_levels);
    std::vector<char> valid(n_levels, 0);
    std::vector<std::string> errors;
    std::mutex error_mutex;

    auto eval_level = [&](int k) {
        const double level = hi * (k + 1) / (n_levels + 1);
        slots[k].level = level;
        const ContourSet contours = marching_squares(u, level);
        if (contours.empty()) return;
        LevelRow& row = slots[k];
        row.area = area(contours, method);
        row.boundary_length = polyline_length(contours);
        row.evolved_length =
            (mode == RatioMode::static_ratio) ? row.boundary_length
                                              : evolved_length(contours, flow, refine_tol);
        const double denom = (mode == RatioMode::dynamic_neumann)
                                 ? std::min(row.area, domain_area - row.area)
                                 : row.area;
        if (!(denom > 0.0)) return;
        row.ratio = (row.boundary_length + row.evolved_length) / (2.0 * denom);
        valid[k] = 1;
    };

    const int n_threads =
        std::max(1, std::min<int>(n_levels, static_cast<int>(std::thread::hardware_concurrency())));
    if (n_threads > 1 && n_levels > 4) {
        std::vector<std::thread> pool;
        std::atomic_int cursor{0};
        for (int w = 0; w < n_threads; ++w)
            pool.emplace_back([&]() {
                for (int k = cursor.fetch_add(1); k < n_levels; k = cursor.fetch_add(1)) {
                    try {
                        eval_level(k);
                    } catch (const std::exception& e) {
                        std::lock_guard<std::mutex> lock(error_mutex);
                        errors.emplace_back(e.what());
                    }
                }
            });
        for (auto& th : pool) th.join();
        if (!errors.empty()) throw std::runtime_error("sweep_levels: " + errors.front());
    } else {
        for (int k = 0; k < n_levels; ++k) eval_level(k);
    }

    LevelSetReport report;
    for (int k = 0; k < n_levels; ++k) {
        if (valid[k])
            report.rows.push_back(slots[k]);
        else
            report.skipped_levels.push_back(slots[k].level);
    }
    if (report.rows.empty()) throw std::runtime_error("sweep_levels: every level produced an empty contour");

    const LevelRow* best = &report.rows.front();
    std::vector<double> ratios;
    ratios.reserve(report.rows.size());
    for (const auto& r : report.rows) {
        ratios.push_back(r.ratio);
        if (r.ratio < best->ratio) best = &r;
    }
    report.min_ratio = best->ratio;
    report.argmin_level = best->level;
    std::sort(ratios.begin(), ratios.end());
    const size_t m = ratios.size();
    report.median_ratio = (m % 2 == 1) ? ratios[m / 2] : 0.5 * (ratios[m / 2 - 1] + ratios[m / 2]);
    return report;
}

}  // namespace dynlap
