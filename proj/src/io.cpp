#include "dynlap/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dynlap {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.precision(17);
    return out;
}

[[noreturn]] void parse_fail(const std::string& path, int line_no, const std::string& what) {
    std::ostringstream os;
    os << path << ":" << line_no << ": " << what;
    throw std::runtime_error(os.str());
}

}  // namespace

void dump_fefunction(const FeFunction& u, const std::string& path) {
    auto out = open_out(path);
    out << "# dynlap fefunction v1\n";
    out << "# mesh " << u.mesh->signature() << "\n";
    out << "# nodes " << u.size() << "\n";
    for (int i = 0; i < u.size(); ++i) {
        const Vec2 p = u.mesh->node(i);
        out << format_double(p.x) << " " << format_double(p.y) << " " << format_double(u.values[i])
            << "\n";
    }
}

FeFunction load_fefunction(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    int line_no = 0;

    auto next_line = [&]() {
        if (!std::getline(in, line)) parse_fail(path, line_no + 1, "unexpected end of file");
        ++line_no;
    };

    next_line();
    if (line != "# dynlap fefunction v1") parse_fail(path, line_no, "not a dynlap fefunction dump");
    next_line();
    Domain dom;
    int nx = 0, ny = 0;
    {
        // "# mesh rect x0 x1 y0 y1 per PQ grid NXxNY"
        std::istringstream is(line);
        std::string hash, mesh_word, rect, per, grid, flags, dims;
        if (!(is >> hash >> mesh_word >> rect >> dom.x_min >> dom.x_max >> dom.y_min >> dom.y_max >>
              per >> flags >> grid >> dims) ||
            hash != "#" || mesh_word != "mesh" || rect != "rect" || per != "per" || grid != "grid" ||
            flags.size() != 2)
            parse_fail(path, line_no, "malformed mesh signature");
        dom.periodic_x = flags[0] == '1';
        dom.periodic_y = flags[1] == '1';
        if (std::sscanf(dims.c_str(), "%dx%d", &nx, &ny) != 2)
            parse_fail(path, line_no, "malformed grid size");
    }
    next_line();
    int n_nodes = 0;
    if (std::sscanf(line.c_str(), "# nodes %d", &n_nodes) != 1)
        parse_fail(path, line_no, "malformed node count");

    auto mesh = std::make_shared<Mesh>(dom, nx, ny);
    if (mesh->num_nodes() != n_nodes)
        parse_fail(path, line_no, "node count does not match the mesh signature");

    FeFunction u = FeFunction::zeros(mesh);
    for (int i = 0; i < n_nodes; ++i) {
        next_line();
        double x, y, v;
        std::istringstream is(line);
        if (!(is >> x >> y >> v)) parse_fail(path, line_no, "malformed node line");
        const Vec2 expect = mesh->node(i);
        if (std::abs(x - expect.x) > 1e-9 || std::abs(y - expect.y) > 1e-9)
            parse_fail(path, line_no, "node coordinates do not match the mesh signature");
        u.values[i] = v;
    }
    return u;
}

void dump_mesh(const Mesh& mesh, const std::string& path) {
    auto out = open_out(path);
    for (int i = 0; i < mesh.num_nodes(); ++i) {
        const Vec2 p = mesh.node(i);
        out << format_double(p.x) << " " << format_double(p.y) << " "
            << (mesh.is_boundary_node(i) ? 1 : 0) << "\n";
    }
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        out << tri[0] << " " << tri[1] << " " << tri[2] << "\n";
    }
}

void write_convergence_csv(const EigenPair& pair, const std::string& path) {
    auto out = open_out(path);
    out << "iter,J,step,grad_norm\n";
    int k = 1;
    for (const auto& rec : pair.history)
        out << k++ << "," << format_double(rec.j) << "," << format_double(rec.step) << ","
            << format_double(rec.grad_norm) << "\n";
}

void write_levels_csv(const LevelSetReport& report, const std::string& path) {
    auto out = open_out(path);
    out << "level,area,boundary_length,evolved_length,ratio\n";
    for (const auto& r : report.rows)
        out << format_double(r.level) << "," << format_double(r.area) << ","
            << format_double(r.boundary_length) << "," << format_double(r.evolved_length) << ","
            << format_double(r.ratio) << "\n";
}

void write_contours(const ContourSet& contours, const std::string& path) {
    auto out = open_out(path);
    for (const auto& c : contours.chains) {
        out << "# chain level=" << format_double(contours.level) << " closed=" << (c.closed ? 1 : 0)
            << " points=" << c.points.size() << "\n";
        for (const auto& p : c.points)
            out << format_double(p.x) << " " << format_double(p.y) << "\n";
    }
}

void write_eigenpair_meta(const EigenPair& pair, const std::string& path) {
    nlohmann::json j;
    j["p"] = pair.p;
    j["lambda"] = pair.lambda;
    j["iterations"] = pair.iterations;
    j["init_mode"] = pair.init_mode;
    j["termination"] = termination_name(pair.termination);
    j["converged"] = pair.converged();
    auto out = open_out(path);
    out << j.dump(2) << "\n";
}

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path) {
    auto out = open_out(path);
    out << "p,lambda,iterations,best_ratio,best_level,median_ratio\n";
    for (const auto& r : rows)
        out << format_double(r.p) << "," << format_double(r.lambda) << "," << r.iterations << ","
            << format_double(r.best_ratio) << "," << format_double(r.best_level) << ","
            << format_double(r.median_ratio) << "\n";
}

}  // namespace dynlap
