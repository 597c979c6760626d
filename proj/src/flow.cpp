#include "dynlap/flow.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "dynlap/ode.hpp"

namespace dynlap {
namespace {

constexpr double kPi = 3.14159265358979323846;

// ---- transitory double gyre (unit square, time span [0, 1]) ----
// stream function psi = (1-s(t)) psi_P + s(t) psi_F with
// psi_P = sin(2 pi x) sin(pi y), psi_F = sin(pi x) sin(2 pi y),
// s(t) = t^2 (3 - 2 t); velocity (d_y psi, -d_x psi).
struct GyreField {
    static double blend(double t) { return (t <= 0) ? 0.0 : (t >= 1) ? 1.0 : t * t * (3.0 - 2.0 * t); }

    static Vec2 velocity(double t, double x, double y) {
        const double s = blend(t);
        const double psi_x = (1 - s) * 2 * kPi * std::cos(2 * kPi * x) * std::sin(kPi * y) +
                             s * kPi * std::cos(kPi * x) * std::sin(2 * kPi * y);
        const double psi_y = (1 - s) * kPi * std::sin(2 * kPi * x) * std::cos(kPi * y) +
                             s * 2 * kPi * std::sin(kPi * x) * std::cos(2 * kPi * y);
        return {psi_y, -psi_x};
    }

    static void eval(double t, double x, double y, Vec2& v, Mat2& grad) {
        const double s = blend(t);
        const double c2x = std::cos(2 * kPi * x), s2x = std::sin(2 * kPi * x);
        const double cx = std::cos(kPi * x), sx = std::sin(kPi * x);
        const double c2y = std::cos(2 * kPi * y), s2y = std::sin(2 * kPi * y);
        const double cy = std::cos(kPi * y), sy = std::sin(kPi * y);

        // psi_P derivatives
        const double pP_x = 2 * kPi * c2x * sy;
        const double pP_y = kPi * s2x * cy;
        const double pP_xx = -4 * kPi * kPi * s2x * sy;
        const double pP_yy = -kPi * kPi * s2x * sy;
        const double pP_xy = 2 * kPi * kPi * c2x * cy;
        // psi_F derivatives
        const double pF_x = kPi * cx * s2y;
        const double pF_y = 2 * kPi * sx * c2y;
        const double pF_xx = -kPi * kPi * sx * s2y;
        const double pF_yy = -4 * kPi * kPi * sx * s2y;
        const double pF_xy = 2 * kPi * kPi * cx * c2y;

        const double psi_x = (1 - s) * pP_x + s * pF_x;
        const double psi_y = (1 - s) * pP_y + s * pF_y;
        const double psi_xx = (1 - s) * pP_xx + s * pF_xx;
        const double psi_yy = (1 - s) * pP_yy + s * pF_yy;
        const double psi_xy = (1 - s) * pP_xy + s * pF_xy;

        v = {psi_y, -psi_x};
        grad = {psi_xy, psi_yy, -psi_xx, -psi_xy};
    }
};

// ---- cylinder flow ([0, 2pi] x [0, pi], x-periodic) ----
// dx/dt = c - A(t) sin(x - nu t) cos(y) + eps Gamma(g) sin(t/2)
// dy/dt = A(t) cos(x - nu t) sin(y)
// A(t) = 1 + sin(2 sqrt(5) t)/8, Gamma(p) = 1/(p^2+1)^2,
// g = sin(x - nu t) sin(y) + y/2 - pi/4, c = nu = 0.5, eps = 0.25.
struct CylinderField {
    static constexpr double c = 0.5, nu = 0.5, eps = 0.25;

    static Vec2 velocity(double t, double x, double y) {
        const double A = 1.0 + std::sin(2.0 * std::sqrt(5.0) * t) / 8.0;
        const double xt = x - nu * t;
        const double sxt = std::sin(xt), cxt = std::cos(xt);
        const double sy = std::sin(y), cy = std::cos(y);
        const double g = sxt * sy + 0.5 * y - kPi / 4.0;
        const double den = g * g + 1.0;
        return {c - A * sxt * cy + eps * std::sin(0.5 * t) / (den * den), A * cxt * sy};
    }

    static void eval(double t, double x, double y, Vec2& v, Mat2& grad) {
        const double A = 1.0 + std::sin(2.0 * std::sqrt(5.0) * t) / 8.0;
        const double xt = x - nu * t;
        const double sxt = std::sin(xt), cxt = std::cos(xt);
        const double sy = std::sin(y), cy = std::cos(y);
        const double g = sxt * sy + 0.5 * y - kPi / 4.0;
        const double den = g * g + 1.0;
        const double Gam = 1.0 / (den * den);
        const double dGam = -4.0 * g / (den * den * den);
        const double st2 = std::sin(0.5 * t);
        const double gx = cxt * sy;
        const double gy = sxt * cy + 0.5;

        v = {c - A * sxt * cy + eps * Gam * st2, A * cxt * sy};
        grad = {-A * cxt * cy + eps * dGam * gx * st2, A * sxt * sy + eps * dGam * gy * st2,
                -A * sxt * sy, A * cxt * cy};
    }
};

template <class Field>
void integrate_with_variational(const FlowMap& flow, Vec2 x, Vec2& tx, Mat2& dt) {
    std::array<double, 6> s{x.x, x.y, 1.0, 0.0, 0.0, 1.0};
    auto rhs = [](double t, const std::array<double, 6>& y, std::array<double, 6>& dy) {
        Vec2 v;
        Mat2 gv;
        Field::eval(t, y[0], y[1], v, gv);
        dy[0] = v.x;
        dy[1] = v.y;
        // variational equation dD/dt = (grad v) D for D = [[y2,y3],[y4,y5]]
        dy[2] = gv.a11 * y[2] + gv.a12 * y[4];
        dy[3] = gv.a11 * y[3] + gv.a12 * y[5];
        dy[4] = gv.a21 * y[2] + gv.a22 * y[4];
        dy[5] = gv.a21 * y[3] + gv.a22 * y[5];
    };
    integrate_rk54(rhs, s, 0.0, flow.flow_time, flow.rel_tol, flow.abs_tol, flow.initial_step);
    tx = {s[0], s[1]};
    dt = {s[2], s[3], s[4], s[5]};
}

template <class Field>
Vec2 integrate_position(const FlowMap& flow, Vec2 x) {
    std::array<double, 2> s{x.x, x.y};
    auto rhs = [](double t, const std::array<double, 2>& y, std::array<double, 2>& dy) {
        const Vec2 v = Field::velocity(t, y[0], y[1]);
        dy[0] = v.x;
        dy[1] = v.y;
    };
    integrate_rk54(rhs, s, 0.0, flow.flow_time, flow.rel_tol, flow.abs_tol, flow.initial_step);
    return {s[0], s[1]};
}

}  // namespace

FlowMap FlowMap::identity() { return FlowMap{FlowKind::identity}; }

FlowMap FlowMap::double_gyre() {
    FlowMap f;
    f.kind = FlowKind::transitory_double_gyre;
    f.flow_time = 1.0;
    return f;
}

FlowMap FlowMap::cylinder(double flow_time) {
    FlowMap f;
    f.kind = FlowKind::cylinder_flow;
    f.flow_time = flow_time;
    return f;
}

FlowMap FlowMap::standard_map(double a) {
    FlowMap f;
    f.kind = FlowKind::standard_map;
    f.map_parameter = a;
    return f;
}

Domain FlowMap::natural_domain() const {
    switch (kind) {
        case FlowKind::identity:
        case FlowKind::transitory_double_gyre:
            return Domain{0, 1, 0, 1, false, false};
        case FlowKind::cylinder_flow:
            return Domain{0, 2 * kPi, 0, kPi, true, false};
        case FlowKind::standard_map:
            return Domain{0, 2 * kPi, 0, 2 * kPi, true, true};
    }
    return {};
}

std::string FlowMap::signature() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind) {
        case FlowKind::identity:
            os << "identity";
            break;
        case FlowKind::transitory_double_gyre:
            os << "double_gyre time " << flow_time << " tol " << rel_tol << "/" << abs_tol;
            break;
        case FlowKind::cylinder_flow:
            os << "cylinder time " << flow_time << " tol " << rel_tol << "/" << abs_tol;
            break;
        case FlowKind::standard_map:
            os << "standard_map a " << map_parameter;
            break;
    }
    return os.str();
}

void apply_with_jacobian(const FlowMap& flow, Vec2 x, Vec2& tx, Mat2& dt) {
    switch (flow.kind) {
        case FlowKind::identity:
            tx = x;
            dt = Mat2::identity();
            return;
        case FlowKind::transitory_double_gyre:
            integrate_with_variational<GyreField>(flow, x, tx, dt);
            return;
        case FlowKind::cylinder_flow:
            integrate_with_variational<CylinderField>(flow, x, tx, dt);
            tx = wrap_point(flow.natural_domain(), tx);
            return;
        case FlowKind::standard_map: {
            const double a = flow.map_parameter;
            const double sx = std::sin(x.x), cx = std::cos(x.x);
            tx = wrap_point(flow.natural_domain(), {x.x + x.y + a * sx, x.y + a * sx});
            dt = {1.0 + a * cx, 1.0, a * cx, 1.0};
            return;
        }
    }
}

Vec2 apply(const FlowMap& flow, Vec2 x) {
    // position-only integration for the ODE flows (a third of the state)
    switch (flow.kind) {
        case FlowKind::transitory_double_gyre:
            return integrate_position<GyreField>(flow, x);
        case FlowKind::cylinder_flow:
            return wrap_point(flow.natural_domain(), integrate_position<CylinderField>(flow, x));
        default: {
            Vec2 tx;
            Mat2 dt;
            apply_with_jacobian(flow, x, tx, dt);
            return tx;
        }
    }
}

Mat2 jacobian(const FlowMap& flow, Vec2 x) {
    Vec2 tx;
    Mat2 dt;
    apply_with_jacobian(flow, x, tx, dt);
    return dt;
}

TransportData identity_transport(const Mesh& mesh) {
    TransportData td;
    const int nt = mesh.num_triangles();
    td.mapped.resize(nt);
    td.jac.assign(nt, Mat2::identity());
    td.a.assign(nt, Mat2::identity());
    td.w.assign(nt, Mat2::identity());
    for (int t = 0; t < nt; ++t) td.mapped[t] = mesh.geometry(t).centroid;
    td.flow_signature = FlowMap::identity().signature();
    td.mesh_signature = mesh.signature();
    td.identity = true;
    return td;
}

namespace {

void fill_derived(TransportData& td) {
    const int nt = td.size();
    td.max_det_defect = 0.0;
    for (int t = 0; t < nt; ++t) {
        const Mat2& dt = td.jac[t];
        const double det = dt.det();
        if (std::abs(det) < 1e-12)
            throw std::runtime_error("transport: singular flow Jacobian at triangle " + std::to_string(t));
        td.max_det_defect = std::max(td.max_det_defect, std::abs(det - 1.0));
        const Mat2 a = dt.inverse_transpose();
        td.a[t] = a;
        // W = (I + A^T A)/2
        const Mat2 ata = a.transpose() * a;
        td.w[t] = Mat2{0.5 * (1.0 + ata.a11), 0.5 * ata.a12, 0.5 * ata.a21, 0.5 * (1.0 + ata.a22)};
    }
}

}  // namespace

TransportData precompute_transport(const FlowMap& flow, const Mesh& mesh,
                                   const std::optional<std::string>& cache_dir) {
    if (flow.is_identity()) return identity_transport(mesh);

    std::string cache_path;
    if (cache_dir) {
        cache_path = transport_cache_path(*cache_dir, flow, mesh);
        if (auto cached = load_transport(flow, mesh, cache_path)) return *cached;
    }

    TransportData td;
    const int nt = mesh.num_triangles();
    td.mapped.resize(nt);
    td.jac.resize(nt);
    td.a.resize(nt);
    td.w.resize(nt);
    td.flow_signature = flow.signature();
    td.mesh_signature = mesh.signature();

    const int n_threads = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::thread> pool;
    std::vector<std::string> errors(n_threads);
    for (int w = 0; w < n_threads; ++w) {
        pool.emplace_back([&, w]() {
            try {
                for (int t = w; t < nt; t += n_threads)
                    apply_with_jacobian(flow, mesh.geometry(t).centroid, td.mapped[t], td.jac[t]);
            } catch (const std::exception& e) {
                errors[w] = e.what();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (const auto& err : errors)
        if (!err.empty()) throw std::runtime_error("precompute_transport: " + err);

    fill_derived(td);
    if (td.max_det_defect > 1e-4)
        std::fprintf(stderr,
                     "warning: flow '%s' is not volume-preserving on this mesh "
                     "(max |det DT - 1| = %.3g)\n",
                     td.flow_signature.c_str(), td.max_det_defect);

    if (!cache_path.empty()) save_transport(td, cache_path);
    return td;
}

std::string transport_cache_path(const std::string& cache_dir, const FlowMap& flow, const Mesh& mesh) {
    // FNV-1a over the combined signature
    const std::string key = flow.signature() + " | " + mesh.signature();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : key) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << cache_dir << "/transport_" << std::hex << h << ".txt";
    return os.str();
}

void save_transport(const TransportData& td, const std::string& path) {
    std::ofstream out(path);
    if (!out) return;  // cache is best effort
    out.precision(17);
    out << "# dynlap transport v1\n";
    out << "# flow " << td.flow_signature << "\n";
    out << "# mesh " << td.mesh_signature << "\n";
    out << "# triangles " << td.size() << "\n";
    for (int t = 0; t < td.size(); ++t) {
        const Mat2& d = td.jac[t];
        out << t << " " << td.mapped[t].x << " " << td.mapped[t].y << " " << d.a11 << " " << d.a12
            << " " << d.a21 << " " << d.a22 << "\n";
    }
}

std::optional<TransportData> load_transport(const FlowMap& flow, const Mesh& mesh,
                                            const std::string& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line) && !line.empty() && line[0] == '#') header.push_back(line);
    if (header.size() < 4) return std::nullopt;
    if (header[0] != "# dynlap transport v1") return std::nullopt;
    if (header[1] != "# flow " + flow.signature()) return std::nullopt;
    if (header[2] != "# mesh " + mesh.signature()) return std::nullopt;

    TransportData td;
    const int nt = mesh.num_triangles();
    if (header[3] != "# triangles " + std::to_string(nt)) return std::nullopt;
    td.mapped.resize(nt);
    td.jac.resize(nt);
    td.a.resize(nt);
    td.w.resize(nt);
    td.flow_signature = flow.signature();
    td.mesh_signature = mesh.signature();
    int rows = 0;
    do {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream is(line);
        int t;
        Mat2 d;
        Vec2 m;
        if (!(is >> t >> m.x >> m.y >> d.a11 >> d.a12 >> d.a21 >> d.a22)) return std::nullopt;
        if (t < 0 || t >= nt) return std::nullopt;
        td.mapped[t] = m;
        td.jac[t] = d;
        ++rows;
    } while (std::getline(in, line));
    if (rows != nt) return std::nullopt;
    fill_derived(td);
    return td;
}

}  // namespace dynlap
