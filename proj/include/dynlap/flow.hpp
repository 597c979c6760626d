#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dynlap/geometry.hpp"
#include "dynlap/mesh.hpp"

namespace dynlap {

enum class FlowKind { identity, transitory_double_gyre, cylinder_flow, standard_map };

/// A volume-preserving map T of the domain: the identity, the time-one map
/// of the transitory double gyre, the time-40 map of the cylinder flow, or
/// the Chirikov standard map on the 2pi-torus. For the two ODE flows the
/// Jacobian is obtained by integrating the variational equation alongside
/// the trajectory.
struct FlowMap {
    FlowKind kind = FlowKind::identity;
    double flow_time = 1.0;        // ODE flows only
    double map_parameter = 0.971635;  // standard map kick strength
    double rel_tol = 1e-7;
    double abs_tol = 1e-7;
    double initial_step = 1e-3;

    static FlowMap identity();
    static FlowMap double_gyre();
    static FlowMap cylinder(double flow_time = 40.0);
    static FlowMap standard_map(double a = 0.971635);

    /// Domain the flow acts on.
    Domain natural_domain() const;
    std::string signature() const;
    bool is_identity() const { return kind == FlowKind::identity; }
};

/// T(x), reduced into the fundamental domain in periodic directions.
Vec2 apply(const FlowMap& flow, Vec2 x);

/// Spatial derivative DT(x).
Mat2 jacobian(const FlowMap& flow, Vec2 x);

/// Both at once (one trajectory integration for ODE flows).
void apply_with_jacobian(const FlowMap& flow, Vec2 x, Vec2& tx, Mat2& dt);

/// Per-triangle transport data at the centroid: mapped point, Jacobian,
/// gradient transform A = DT^{-T} and the averaged Cauchy-Green factor
/// W = (I + A^T A)/2 entering the dynamic forms.
struct TransportData {
    std::vector<Vec2> mapped;
    std::vector<Mat2> jac;
    std::vector<Mat2> a;
    std::vector<Mat2> w;
    std::string flow_signature;
    std::string mesh_signature;
    double max_det_defect = 0.0;  // max |det DT - 1| seen during evaluation
    bool identity = false;

    int size() const { return static_cast<int>(a.size()); }
};

/// Evaluate transport data at every triangle centroid (parallel across
/// triangles). When cache_dir is given, a previously computed table with a
/// matching signature is reused and fresh results are stored.
TransportData precompute_transport(const FlowMap& flow, const Mesh& mesh,
                                   const std::optional<std::string>& cache_dir = std::nullopt);

/// Exact identity transport (A = W = I on every triangle).
TransportData identity_transport(const Mesh& mesh);

std::string transport_cache_path(const std::string& cache_dir, const FlowMap& flow, const Mesh& mesh);
void save_transport(const TransportData& td, const std::string& path);
std::optional<TransportData> load_transport(const FlowMap& flow, const Mesh& mesh, const std::string& path);

}  // namespace dynlap
