#pragma once

// Capillary hypersurfaces in a wedge or a half-space of R^{n+1}.
//
// A capillary surface here is a chart patch Σ whose boundary faces lie on
// the walls Π_i, together with the wetted domains D_i ⊂ Π_i bounded by
// C_i = ∂Σ ∩ Π_i. The origin lies on the edge of the wedge (or in the plane
// of the half-space), so the oriented volume of Σ equals the volume
// enclosed by Σ ∪ D_1 ∪ D_2.
//
// Boundary curvatures of C_i inside Π_i use the outward normal of D_i: a
// round disk of radius r has k = −1/r and ∫k ds = −2π.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "capillary_lab/hypersurface.hpp"
#include "capillary_lab/surfaces.hpp"

namespace capillary_lab {

using std::numbers::pi;

struct Tolerances {
    double cmc = 1e-6;        // sampled standard deviation of H
    double angle = 1e-6;      // contact-angle constancy and hypothesis slack
    double on_plane = 1e-8;   // boundary-on-wall check
    double edge = 1e-9;       // minimum distance from the edge
    double umbilic = 1e-6;    // umbilic deficit for the sphere verdict
    double indicator = 1e-6;  // |n e₀ E″(0)| for the sphere verdict
};

// ---------------------------------------------------------------------------
// Domains
// ---------------------------------------------------------------------------

enum class DomainKind { wedge, half_space };

template <int N>
struct Domain {
    DomainKind kind = DomainKind::half_space;
    double half_angle = 0.0;      // wedge only
    double tilt = 0.0;            // rotation of the wedge about its edge
    std::vector<Vec<N>> normals;  // outward unit normals N_i, one per wall

    int walls() const { return static_cast<int>(normals.size()); }

    /// Wedge between Π₁, Π₂ through {x_n = x_{n+1} = 0} making angles ±α
    /// with {x_{n+1} = 0}, rotated by `tilt` about the edge.
    static Domain wedge(double alpha, double tilt = 0.0)
    {
        if (!(alpha > 0.0) || !(alpha < 0.5 * pi)) {
            throw ParameterError("wedge: half-angle must lie in (0, π/2)");
        }
        Domain d;
        d.kind = DomainKind::wedge;
        d.half_angle = alpha;
        d.tilt = tilt;
        const double a1 = alpha + tilt;
        const double a2 = -alpha + tilt;
        Vec<N> n1 = Vec<N>::Zero(), n2 = Vec<N>::Zero();
        n1[N - 1] = -std::sin(a1);
        n1[N] = std::cos(a1);
        n2[N - 1] = std::sin(a2);
        n2[N] = -std::cos(a2);
        d.normals = {n1, n2};
        return d;
    }

    /// Upper half-space {x_{n+1} > 0}; the wall normal −e_{n+1} points out.
    static Domain half_space()
    {
        Domain d;
        d.kind = DomainKind::half_space;
        d.normals = {-Vec<N>::Unit(N)};
        return d;
    }

    /// ⟨x, N_i⟩: negative inside, zero on Π_i.
    double wall_height(int i, const Vec<N>& x) const { return x.dot(normals.at(i)); }

    bool contains(const Vec<N>& x) const
    {
        for (int i = 0; i < walls(); ++i)
            if (!(wall_height(i, x) < 0.0)) return false;
        return true;
    }

    double edge_distance(const Vec<N>& x) const
    {
        if (kind != DomainKind::wedge) return std::numeric_limits<double>::infinity();
        return std::hypot(x[N - 1], x[N]);
    }

    std::string label() const { return kind == DomainKind::wedge ? "wedge" : "half_space"; }
};

// ---------------------------------------------------------------------------
// Wetted domains
// ---------------------------------------------------------------------------

/// Data of D_i ⊂ Π_i and its boundary C_i.
template <int N>
struct WettedDomain {
    int wall = 0;
    double area = 0.0;           // Hⁿ(D_i)
    double boundary_area = 0.0;  // Hⁿ⁻¹(C_i)
    // b_ℓ = ∫_{C_i} σ_ℓ(k̄) dS̄ for ℓ = 0..n−1 (b₀ = boundary_area,
    // b₁ = ∫(n−1)H̄ dS̄), outward convention.
    std::vector<double> boundary_curvature;
    int orientation_sign = +1;  // ε_i: ν = ε_i N_i on D_i
    bool convex = false;
    bool embedded = false;
    Vec<N> centroid = Vec<N>::Zero();

    bool has_curvature_data() const { return boundary_curvature.size() >= 2; }

    double mean_curvature_integral() const
    {
        if (!has_curvature_data()) throw IncompleteInput("wetted domain has no boundary curvature data");
        return boundary_curvature[1];
    }

    /// ∫_{C_i} k ds for n = 2.
    double geodesic_curvature_integral() const
    {
        static_assert(N == 2, "geodesic curvature is defined for n = 2");
        return mean_curvature_integral();
    }

    /// n∫H̄ dS̄ + Hⁿ⁻¹(C)²/Hⁿ(D); zero for round balls, ≥ 0 for convex D.
    double minkowski_term() const
    {
        return N * mean_curvature_integral() / (N - 1) + boundary_area * boundary_area / area;
    }

    /// Hⁿ of the parallel domain at distance s inside Π_i (tube formula).
    double parallel_area(double s) const
    {
        if (!has_curvature_data()) throw IncompleteInput("wetted domain has no boundary curvature data");
        double acc = area;
        double p = s;
        for (std::size_t ell = 0; ell < boundary_curvature.size(); ++ell) {
            const double sign = (ell % 2 == 0) ? 1.0 : -1.0;
            acc += sign * boundary_curvature[ell] * p / static_cast<double>(ell + 1);
            p *= s;
        }
        return acc;
    }
};

inline double unit_ball_volume(int n)
{
    return std::pow(pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

/// Round n-ball of radius r in Π_i centred at `center`.
template <int N>
WettedDomain<N> round_wetted_disk(int wall, const Vec<N>& center, double radius)
{
    if (!(radius > 0.0)) throw GeometryError("wetted disk radius must be positive");
    WettedDomain<N> w;
    w.wall = wall;
    w.area = unit_ball_volume(N) * std::pow(radius, N);
    w.boundary_area = N * unit_ball_volume(N) * std::pow(radius, N - 1);
    for (int ell = 0; ell <= N - 1; ++ell) {
        w.boundary_curvature.push_back(num::binomial(N - 1, ell) * std::pow(-1.0 / radius, ell) *
                                       w.boundary_area);
    }
    w.convex = true;
    w.embedded = true;
    w.centroid = center;
    return w;
}

/// Wetted-domain data from a closed outward-oriented boundary patch given in
/// coordinates of Π_i ≅ Rⁿ. Convexity is read off the boundary curvature
/// signs; embeddedness is the caller's declaration.
template <int N>
WettedDomain<N> wetted_from_boundary(int wall, const ParametricPatch<N - 1>& boundary,
                                     bool embedded, int order = num::kDefaultOrder)
{
    const auto s = survey(boundary, order);
    WettedDomain<N> w;
    w.wall = wall;
    w.area = s.volume_term;
    w.boundary_area = s.area;
    for (int ell = 0; ell <= N - 1; ++ell) {
        const double sign = (ell % 2 == 0) ? 1.0 : -1.0;
        w.boundary_curvature.push_back(sign * s.signed_curvature[ell]);
    }
    bool convex = true;
    for (const auto& node : num::tensor_nodes<N - 1>(boundary.box, order)) {
        const auto cd = curvature_at(boundary, node.u);
        if (cd.principal_curvatures.maxCoeff() > 1e-12) convex = false;
    }
    w.convex = convex;
    w.embedded = embedded;
    return w;
}

// ---------------------------------------------------------------------------
// Capillary surfaces
// ---------------------------------------------------------------------------

/// Which chart face of the patch lies on which wall.
struct BoundaryFace {
    int wall = 0;
    int axis = 0;
    bool upper = true;
};

struct AngleMeasurement {
    double mean = 0.0;
    double max_deviation = 0.0;
};

template <int N>
struct CapillarySurface {
    std::string kind;
    ParametricPatch<N> patch;
    Domain<N> domain;
    std::vector<double> contact_angles;  // θ_i per wall
    std::vector<AngleMeasurement> measured_angles;
    std::vector<WettedDomain<N>> wetted;
    std::vector<BoundaryFace> faces;
    double mean_curvature = 0.0;
    double mean_curvature_deviation = 0.0;
    double enclosed_volume = 0.0;  // v₀
    bool cmc = false;
    SurfaceSurvey<N> stats;
    std::vector<std::string> warnings;
    int order = num::kDefaultOrder;
    Tolerances tol;

    static constexpr int dim() { return N; }
    int walls() const { return domain.walls(); }

    std::vector<double> omegas() const
    {
        std::vector<double> w;
        for (double th : contact_angles) w.push_back(-std::cos(th));
        return w;
    }
};

namespace detail {

template <int N>
struct BoundarySample {
    num::Param<N> u;
    num::Jet<N> jet;
};

template <int N>
std::vector<BoundarySample<N>> boundary_samples(const ParametricPatch<N>& patch,
                                                const BoundaryFace& face, int count)
{
    std::vector<BoundarySample<N>> out;
    if constexpr (N == 1) {
        num::Param<1> u;
        u[0] = face.upper ? patch.box[0].hi : patch.box[0].lo;
        out.push_back({u, patch.jet(u)});
    } else {
        num::Box<N - 1> rest;
        for (int d = 0, k = 0; d < N; ++d)
            if (d != face.axis) rest[k++] = patch.box[d];
        const int per_axis = N == 2 ? count : std::max(4, static_cast<int>(std::sqrt(count)));
        for (const auto& node : num::tensor_nodes<N - 1>(rest, per_axis)) {
            num::Param<N> u;
            for (int d = 0, k = 0; d < N; ++d) {
                u[d] = d == face.axis ? (face.upper ? patch.box[d].hi : patch.box[d].lo)
                                      : node.u[k++];
            }
            out.push_back({u, patch.jet(u)});
        }
    }
    return out;
}

/// Generalised cross product of N vectors in R^{N+1}.
template <int N>
Vec<N> cross_of(const std::array<Vec<N>, N>& cols)
{
    Eigen::Matrix<double, N + 1, N + 1> m;
    for (int i = 0; i < N; ++i) m.col(i) = cols[i];
    Vec<N> out;
    for (int k = 0; k <= N; ++k) {
        m.col(N) = Vec<N>::Unit(k);
        out[k] = m.determinant();
    }
    return out;
}

}  // namespace detail

/// Contact angle between Σ and D_i along C_i, measured inside the liquid
/// between the tangent half-space of Σ and D_i.
template <int N>
AngleMeasurement contact_angle(const ParametricPatch<N>& patch, const Domain<N>& domain,
                               const BoundaryFace& face, const Vec<N>& domain_centroid,
                               double on_plane_tol = 1e-8, int samples = 64)
{
    const Vec<N> wall_normal = domain.normals.at(face.wall);
    std::vector<double> angles;
    for (const auto& s : detail::boundary_samples<N>(patch, face, samples)) {
        const auto& jet = s.jet;
        if (std::abs(domain.wall_height(face.wall, jet.value)) > on_plane_tol) {
            std::ostringstream os;
            os << "contact_angle: boundary point off wall " << face.wall << " by "
               << domain.wall_height(face.wall, jet.value);
            throw GeometryError(os.str());
        }
        num::SymMatrix<N> g;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) g(i, j) = jet.d1[i].dot(jet.d1[j]);
        const num::SymMatrix<N> ginv = g.inverse();
        Vec<N> eta = Vec<N>::Zero();
        for (int j = 0; j < N; ++j) eta += ginv(face.axis, j) * jet.d1[j];
        eta *= face.upper ? 1.0 : -1.0;
        eta.normalize();

        std::array<Vec<N>, N> cols;
        cols[0] = wall_normal;
        for (int j = 0, k = 1; j < N; ++j)
            if (j != face.axis) cols[k++] = jet.d1[j];
        Vec<N> inward = detail::cross_of<N>(cols).normalized();
        if (inward.dot(domain_centroid - jet.value) < 0.0) inward = -inward;

        const Vec<N> into_sigma = -eta;
        const double c = into_sigma.dot(inward);
        const double sn = (into_sigma - c * inward).norm();
        angles.push_back(std::atan2(sn, c));
    }
    AngleMeasurement m;
    m.mean = num::pairwise_sum(angles) / static_cast<double>(angles.size());
    for (double a : angles) m.max_deviation = std::max(m.max_deviation, std::abs(a - m.mean));
    return m;
}

template <int N>
AngleMeasurement contact_angle(const CapillarySurface<N>& surface, int wall)
{
    for (const auto& f : surface.faces) {
        if (f.wall == wall) {
            return contact_angle<N>(surface.patch, surface.domain, f,
                                    surface.wetted.at(wall).centroid, surface.tol.on_plane);
        }
    }
    throw ParameterError("contact_angle: no boundary on wall " + std::to_string(wall));
}

/// Validates the configuration and fills the derived fields. `nominal`
/// angles, when given, must agree with the measured ones.
template <int N>
CapillarySurface<N> assemble_capillary(std::string kind, ParametricPatch<N> patch,
                                       Domain<N> domain, std::vector<WettedDomain<N>> wetted,
                                       std::vector<BoundaryFace> faces,
                                       std::optional<std::vector<double>> nominal,
                                       int order = num::kDefaultOrder, Tolerances tol = {})
{
    if (static_cast<int>(wetted.size()) != domain.walls() ||
        static_cast<int>(faces.size()) != domain.walls()) {
        throw IncompleteInput("assemble_capillary: need one wetted domain and face per wall");
    }
    CapillarySurface<N> s;
    s.kind = std::move(kind);
    s.patch = std::move(patch);
    s.domain = std::move(domain);
    s.wetted = std::move(wetted);
    s.faces = std::move(faces);
    s.order = order;
    s.tol = tol;

    double min_edge = std::numeric_limits<double>::infinity();
    for (const auto& node : num::tensor_nodes<N>(s.patch.box, order)) {
        const Vec<N> x = s.patch.position(node.u);
        if (!s.domain.contains(x)) {
            throw GeometryError("assemble_capillary: interior point " +
                                num::detail::describe_node<N>(node.u) +
                                " is not inside the open domain");
        }
        min_edge = std::min(min_edge, s.domain.edge_distance(x));
    }

    for (int i = 0; i < s.walls(); ++i) {
        const auto m = contact_angle<N>(s.patch, s.domain, s.faces[i], s.wetted[i].centroid,
                                        tol.on_plane);
        s.measured_angles.push_back(m);
        for (const auto& b : detail::boundary_samples<N>(s.patch, s.faces[i], 64)) {
            min_edge = std::min(min_edge, s.domain.edge_distance(b.jet.value));
        }
    }
    if (s.domain.kind == DomainKind::wedge && !(min_edge > tol.edge)) {
        throw EdgeCollision("assemble_capillary: surface touches the edge of the wedge");
    }

    if (nominal) {
        if (static_cast<int>(nominal->size()) != s.walls()) {
            throw IncompleteInput("assemble_capillary: one contact angle per wall required");
        }
        for (int i = 0; i < s.walls(); ++i) {
            if (std::abs(s.measured_angles[i].mean - (*nominal)[i]) > tol.angle) {
                std::ostringstream os;
                os << "assemble_capillary: measured contact angle " << s.measured_angles[i].mean
                   << " differs from nominal " << (*nominal)[i];
                throw GeometryError(os.str());
            }
        }
        s.contact_angles = *nominal;
    } else {
        for (const auto& m : s.measured_angles) s.contact_angles.push_back(m.mean);
    }

    s.stats = survey(s.patch, order);
    s.mean_curvature = s.stats.mean_curvature_mean;
    s.mean_curvature_deviation = s.stats.mean_curvature_deviation;
    s.cmc = s.mean_curvature_deviation < tol.cmc;
    s.enclosed_volume = s.stats.volume_term;

    for (int i = 0; i < s.walls(); ++i) {
        if (s.contact_angles[i] < 0.5 * pi - tol.angle) {
            s.warnings.push_back("contact angle on wall " + std::to_string(i) +
                                 " is below π/2");
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

inline void check_angle_range(double theta, const char* who)
{
    if (!(theta > 0.0) || !(theta < pi)) {
        throw HypothesisError(std::string(who) + ": contact angle must lie in (0, π)");
    }
}

/// Spherical cap of radius R meeting {x_{n+1} = 0} at angle θ. Angles in
/// (0, π/2) build with a warning; angles outside (0, π) are rejected.
template <int N>
CapillarySurface<N> cap_in_halfspace(double radius, double theta, int order = num::kDefaultOrder,
                                     Tolerances tol = {})
{
    if (!(radius > 0.0)) throw ParameterError("cap_in_halfspace: radius must be positive");
    check_angle_range(theta, "cap_in_halfspace");

    const auto domain = Domain<N>::half_space();
    const Vec<N> center = -radius * std::cos(theta) * Vec<N>::Unit(N);
    auto patch = surfaces::spherical_zone<N>(center, radius, Vec<N>::Unit(N), 0.0, theta);
    patch.name = "cap_halfspace";
    auto disk = round_wetted_disk<N>(0, Vec<N>::Zero(), radius * std::sin(theta));
    return assemble_capillary<N>("cap_halfspace", std::move(patch), domain, {disk},
                                 {BoundaryFace{0, 0, true}}, std::vector<double>{theta}, order,
                                 tol);
}

/// Centre of the bridge sphere from the two wall-distance conditions
/// ⟨c, N_i⟩ = R cos θ_i.
template <int N>
Vec<N> bridge_center(const Domain<N>& domain, double radius, double theta1, double theta2)
{
    Eigen::Matrix2d m;
    m << domain.normals[0][N - 1], domain.normals[0][N], domain.normals[1][N - 1],
        domain.normals[1][N];
    if (std::abs(m.determinant()) < 1e-12) throw DegenerateWedge("bridge: wall normals are dependent");
    const Eigen::Vector2d rhs(radius * std::cos(theta1), radius * std::cos(theta2));
    const Eigen::Vector2d pq = m.fullPivLu().solve(rhs);
    Vec<N> c = Vec<N>::Zero();
    c[N - 1] = pq[0];
    c[N] = pq[1];
    return c;
}

/// Spherical bridge of radius R between the walls of a wedge with half-angle
/// α, meeting Π₁ at θ₁ and Π₂ at θ₂.
template <int N>
CapillarySurface<N> bridge_in_wedge(double radius, double alpha, double theta1, double theta2,
                                    int order = num::kDefaultOrder, Tolerances tol = {},
                                    double tilt = 0.0)
{
    if (!(radius > 0.0)) throw ParameterError("bridge_in_wedge: radius must be positive");
    check_angle_range(theta1, "bridge_in_wedge");
    check_angle_range(theta2, "bridge_in_wedge");
    const auto domain = Domain<N>::wedge(alpha, tilt);
    const Vec<N> c = bridge_center<N>(domain, radius, theta1, theta2);

    const std::array<double, 2> theta{theta1, theta2};
    std::array<double, 2> depth{};  // δ_i = −⟨c, N_i⟩
    for (int i = 0; i < 2; ++i) {
        depth[i] = -domain.wall_height(i, c);
        if (depth[i] < -1e-12) {
            throw InfeasibleGeometry("bridge_in_wedge: no sphere centre inside the wedge");
        }
    }
    const double edge_dist = domain.edge_distance(c);
    if (!(edge_dist - radius > tol.edge)) {
        std::ostringstream os;
        os << "bridge_in_wedge: sphere reaches the edge (centre distance " << edge_dist
           << ", radius " << radius << ")";
        throw EdgeCollision(os.str());
    }

    // Boundary circles on the unit sphere: {y : ⟨y, N_i⟩ = κ_i}. As vectors
    // s_i = (κ_i, N_i) in Minkowski space R^{1,n+1}, disjoint circles span a
    // Lorentzian plane; a boost to a unit timelike vector in that plane makes
    // them coaxial.
    using MVec = Eigen::Matrix<double, N + 2, 1>;
    auto mdot = [](const MVec& a, const MVec& b) {
        return -a[0] * b[0] + a.template tail<N + 1>().dot(b.template tail<N + 1>());
    };
    std::array<MVec, 2> s;
    for (int i = 0; i < 2; ++i) {
        s[i][0] = depth[i] / radius;
        s[i].template tail<N + 1>() = domain.normals[i];
    }
    Eigen::Matrix2d gram;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) gram(i, j) = mdot(s[i], s[j]);
    if (!(gram.determinant() < -1e-14)) {
        throw InfeasibleGeometry("bridge_in_wedge: the two contact circles intersect");
    }
    MVec e0 = MVec::Zero();
    e0[0] = 1.0;
    const Eigen::Vector2d rhs(mdot(e0, s[0]), mdot(e0, s[1]));
    const Eigen::Vector2d lam = gram.fullPivLu().solve(rhs);
    MVec p = lam[0] * s[0] + lam[1] * s[1];
    if (p[0] < 0.0) p = -p;
    const Vec<N> boost = p.template tail<N + 1>() / p[0];
    const double speed = boost.norm();
    if (!(speed < 1.0)) throw InfeasibleGeometry("bridge_in_wedge: no coaxial frame exists");

    const double gamma = 1.0 / std::sqrt(1.0 - speed * speed);
    const Vec<N> uhat = speed > 0.0 ? Vec<N>(boost / speed) : Vec<N>::Zero();
    std::array<double, 2> tprime{};
    std::array<Vec<N>, 2> xprime;
    for (int i = 0; i < 2; ++i) {
        const double t = s[i][0];
        const Vec<N> x = s[i].template tail<N + 1>();
        tprime[i] = gamma * (t - boost.dot(x));
        xprime[i] = x + (gamma - 1.0) * x.dot(uhat) * uhat - gamma * boost * t;
    }
    const Vec<N> axis = xprime[0].normalized();
    if (xprime[1].dot(axis) > -0.999999 * xprime[1].norm()) {
        throw InfeasibleGeometry("bridge_in_wedge: failed to make the contact circles coaxial");
    }
    const double k1 = tprime[0] / xprime[0].norm();
    const double k2 = -tprime[1] / xprime[1].norm();
    if (!(k1 > k2) || std::abs(k1) >= 1.0 || std::abs(k2) >= 1.0) {
        throw InfeasibleGeometry("bridge_in_wedge: empty bridge");
    }

    auto patch = surfaces::spherical_zone<N>(c, radius, axis, std::acos(k1), std::acos(k2), boost);
    patch.name = "bridge_wedge";

    std::vector<WettedDomain<N>> wetted;
    for (int i = 0; i < 2; ++i) {
        const Vec<N> foot = c + depth[i] * domain.normals[i];
        wetted.push_back(round_wetted_disk<N>(i, foot, radius * std::sin(theta[i])));
    }
    return assemble_capillary<N>("bridge_wedge", std::move(patch), domain, std::move(wetted),
                                 {BoundaryFace{0, 0, false}, BoundaryFace{1, 0, true}},
                                 std::vector<double>{theta1, theta2}, order, tol);
}

/// Cap of the spheroid x²/a² + y²/a² + z²/c² = 1 above the plane z = cut,
/// translated so the plane is {x₃ = 0}. Axial symmetry gives a constant
/// contact angle; the surface is not CMC unless a = c.
inline CapillarySurface<2> spheroid_cap_in_halfspace(double a, double c, double cut,
                                                     int order = num::kDefaultOrder,
                                                     Tolerances tol = {})
{
    if (!(a > 0.0) || !(c > 0.0)) throw ParameterError("spheroid_cap: semi-axes must be positive");
    if (!(cut > -c) || !(cut < c)) throw ParameterError("spheroid_cap: cut lies outside the body");
    const double psi_max = std::acos(cut / c);
    auto patch = surfaces::ellipsoid(a, a, c, psi_max, Vec<2>(0.0, 0.0, -cut));
    patch.name = "spheroid_cap";
    const double r = a * std::sqrt(1.0 - (cut / c) * (cut / c));
    auto disk = round_wetted_disk<2>(0, Vec<2>::Zero(), r);
    return assemble_capillary<2>("spheroid_cap", std::move(patch), Domain<2>::half_space(), {disk},
                                 {BoundaryFace{0, 0, true}}, std::nullopt, order, tol);
}

// ---------------------------------------------------------------------------
// Energies and identities
// ---------------------------------------------------------------------------

inline void require_cmc(double deviation, double tol, const char* who)
{
    if (!(deviation < tol)) {
        std::ostringstream os;
        os << who << ": surface is not CMC (sampled deviation of H = " << deviation
           << ", tolerance " << tol << ")";
        throw Refused(os.str());
    }
}

/// E = Hⁿ(Σ) − Σ cos θ_i Hⁿ(D_i), i.e. ω_i = −cos θ_i.
template <int N>
double total_energy(const CapillarySurface<N>& s)
{
    double e = s.stats.area;
    for (int i = 0; i < s.walls(); ++i) e -= std::cos(s.contact_angles[i]) * s.wetted[i].area;
    return e;
}

template <int N>
double wetting_energy(const CapillarySurface<N>& s)
{
    return total_energy(s) - s.stats.area;
}

/// nH·Hⁿ(D_i) + sin θ_i·Hⁿ⁻¹(C_i); zero for capillary surfaces.
template <int N>
double balancing_residual(const CapillarySurface<N>& s, int wall)
{
    require_cmc(s.mean_curvature_deviation, s.tol.cmc, "balancing_residual");
    const auto& w = s.wetted.at(wall);
    return N * s.mean_curvature * w.area + std::sin(s.contact_angles.at(wall)) * w.boundary_area;
}

struct EnergyCoefficients {
    double e0 = 0.0;
    double e1 = 0.0;
    double e2 = 0.0;
};

template <int N>
EnergyCoefficients energy_coefficients(const CapillarySurface<N>& s)
{
    require_cmc(s.mean_curvature_deviation, s.tol.cmc, "energy_coefficients");
    EnergyCoefficients e;
    const double a0 = s.stats.area;
    e.e0 = a0;
    e.e1 = -N * s.mean_curvature * a0;
    e.e2 = s.stats.signed_curvature.at(2);
    for (int i = 0; i < s.walls(); ++i) {
        const auto& w = s.wetted[i];
        if (!w.has_curvature_data()) {
            throw IncompleteInput("energy_coefficients: wetted domain " + std::to_string(i) +
                                  " lacks boundary mean-curvature data");
        }
        const double c = std::cos(s.contact_angles[i]);
        const double sn = std::sin(s.contact_angles[i]);
        e.e0 -= c * w.area;
        e.e1 -= c * sn * w.boundary_area;
        e.e2 += 0.5 * c * sn * sn * w.mean_curvature_integral();
    }
    return e;
}

/// (n/(n+1))·e₀²/e₁, the enclosed volume forced by E′(0) = 0.
template <int N>
double critical_volume(const EnergyCoefficients& e)
{
    return static_cast<double>(N) / (N + 1) * e.e0 * e.e0 / e.e1;
}

/// E″(0) = (2n e₀e₂ − (n−1)e₁²)/(n e₀).
template <int N>
double second_variation_closed_form(const EnergyCoefficients& e)
{
    return (2.0 * N * e.e0 * e.e2 - (N - 1.0) * e.e1 * e.e1) / (N * e.e0);
}

/// Translation a with ⟨a, N_i⟩ = −⟨ν, N_i⟩ on C_i, a ∈ span{N_i}, so that
/// X + tν + ta keeps every boundary component on its wall.
template <int N>
Vec<N> return_translation(const CapillarySurface<N>& s)
{
    const int m = s.walls();
    Eigen::MatrixXd gram(m, m);
    Eigen::VectorXd rhs(m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) gram(i, j) = s.domain.normals[i].dot(s.domain.normals[j]);
        std::vector<double> vals;
        for (const auto& b : detail::boundary_samples<N>(s.patch, s.faces[i], 64)) {
            vals.push_back(gauss_map<N>(b.jet, s.patch.orientation_sign).dot(s.domain.normals[i]));
        }
        const double mean = num::pairwise_sum(vals) / static_cast<double>(vals.size());
        for (double v : vals) {
            if (std::abs(v - mean) > s.tol.angle) {
                throw Refused("return_translation: ⟨ν, N_i⟩ is not constant along C_i");
            }
        }
        rhs[i] = -mean;
    }
    if (std::abs(gram.determinant()) < 1e-12) {
        throw DegenerateWedge("return_translation: wall normals are linearly dependent");
    }
    const Eigen::VectorXd coef = gram.fullPivLu().solve(rhs);
    Vec<N> a = Vec<N>::Zero();
    for (int i = 0; i < m; ++i) a += coef[i] * s.domain.normals[i];
    return a;
}

/// Raw energy E(X_t²∘X_t¹) and raw volume V̂(X_t²∘X_t¹) as polynomials in t.
struct VariationPolynomials {
    std::vector<double> energy;  // e₀..e_n
    std::vector<double> volume;  // v₀..v_{n+1}
    double focal_window = std::numeric_limits<double>::infinity();
};

template <int N>
VariationPolynomials variation_polynomials(const CapillarySurface<N>& s)
{
    VariationPolynomials vp;
    vp.energy = s.stats.signed_curvature;  // tube polynomial a₀..a_n
    for (int i = 0; i < s.walls(); ++i) {
        const auto& w = s.wetted[i];
        if (!w.has_curvature_data()) throw IncompleteInput("variation: missing boundary curvature data");
        const double c = std::cos(s.contact_angles[i]);
        const double sn = std::sin(s.contact_angles[i]);
        vp.energy[0] -= c * w.area;
        double sp = sn;
        for (std::size_t ell = 0; ell < w.boundary_curvature.size(); ++ell) {
            const double sign = (ell % 2 == 0) ? 1.0 : -1.0;
            vp.energy[ell + 1] -=
                c * sign * w.boundary_curvature[ell] * sp / static_cast<double>(ell + 1);
            sp *= sn;
        }
    }
    vp.volume.push_back(s.enclosed_volume);
    for (std::size_t k = 0; k < vp.energy.size(); ++k) {
        vp.volume.push_back(vp.energy[k] / static_cast<double>(k + 1));
    }
    if (s.stats.max_abs_curvature > 0.0) vp.focal_window = 1.0 / s.stats.max_abs_curvature;
    return vp;
}

struct VariationSample {
    double t = 0.0;
    double raw_energy = 0.0;
    double raw_volume = 0.0;
    double scale = 1.0;
    double scaled_energy = 0.0;
};

/// One member of the volume-preserving family X_t = s(t)·(X + tν + ta).
template <int N>
VariationSample variation_energy(const VariationPolynomials& vp, double t)
{
    if (!(std::abs(t) < vp.focal_window)) {
        throw FocalCrossing("variation_energy: |t| lies outside the focal window");
    }
    VariationSample out;
    out.t = t;
    out.raw_energy = num::horner(vp.energy, t);
    out.raw_volume = num::horner(vp.volume, t);
    const double v0 = vp.volume.front();
    if (!(out.raw_volume > 0.0) || !(v0 > 0.0)) {
        throw DegenerateVariation("variation_energy: enclosed volume is not positive");
    }
    out.scale = std::pow(v0 / out.raw_volume, 1.0 / (N + 1));
    out.scaled_energy = std::pow(out.scale, N) * out.raw_energy;
    return out;
}

template <int N>
VariationSample variation_energy(const CapillarySurface<N>& s, double t)
{
    return variation_energy<N>(variation_polynomials(s), t);
}

struct VariationDerivatives {
    double first = 0.0;   // E′(0)
    double second = 0.0;  // E″(0)
};

/// Central differences of the scaled energy with step h and one Richardson
/// level.
template <int N>
VariationDerivatives variation_derivatives(const CapillarySurface<N>& s, double h = 1e-3)
{
    const auto vp = variation_polynomials(s);
    auto E = [&](double t) { return variation_energy<N>(vp, t).scaled_energy; };
    const double e0 = E(0.0);
    auto d1 = [&](double k) { return (E(k) - E(-k)) / (2.0 * k); };
    auto d2 = [&](double k) { return (E(k) - 2.0 * e0 + E(-k)) / (k * k); };
    VariationDerivatives d;
    d.first = (4.0 * d1(0.5 * h) - d1(h)) / 3.0;
    d.second = (4.0 * d2(0.5 * h) - d2(h)) / 3.0;
    return d;
}

// ---------------------------------------------------------------------------
// Stability
// ---------------------------------------------------------------------------

enum class Verdict { sphere_stable, unstable_non_umbilic, hypotheses_not_met, degenerate };

inline std::string to_string(Verdict v)
{
    switch (v) {
    case Verdict::sphere_stable: return "sphere_stable";
    case Verdict::unstable_non_umbilic: return "unstable_non_umbilic";
    case Verdict::hypotheses_not_met: return "hypotheses_not_met";
    case Verdict::degenerate: return "degenerate";
    }
    return "unknown";
}

struct HypothesisRecord {
    bool angles_at_least_right = true;  // θ_i ≥ π/2
    bool boundary_embedded = true;      // needed for n = 2
    bool domains_convex = true;         // needed for n ≥ 3
    bool satisfied = true;
    std::vector<std::string> notes;
};

struct StabilityReport {
    double indicator = 0.0;        // n·e₀·E″(0) from the factored form
    double indicator_from_coefficients = 0.0;  // 2n e₀e₂ − (n−1)e₁²
    double first_factor = 0.0;     // e₀
    double second_factor = 0.0;    // bracketed term
    double umbilic_integral = 0.0; // ∫Σ(k_i − k_j)² dS
    double umbilic_deficit = 0.0;  // max over samples of k_max − k_min
    EnergyCoefficients coefficients;
    HypothesisRecord hypotheses;
    Verdict verdict = Verdict::degenerate;
};

template <int N>
HypothesisRecord check_hypotheses(const CapillarySurface<N>& s)
{
    HypothesisRecord h;
    for (int i = 0; i < s.walls(); ++i) {
        if (s.contact_angles[i] < 0.5 * pi - s.tol.angle) {
            h.angles_at_least_right = false;
            h.notes.push_back("θ_" + std::to_string(i + 1) + " < π/2");
        }
        if (!s.wetted[i].embedded) {
            h.boundary_embedded = false;
            h.notes.push_back("C_" + std::to_string(i + 1) + " is not embedded");
        }
        if (!s.wetted[i].convex) {
            h.domains_convex = false;
            h.notes.push_back("D_" + std::to_string(i + 1) + " is not convex");
        }
    }
    h.satisfied = h.angles_at_least_right && (N == 2 ? h.boundary_embedded : h.domains_convex);
    return h;
}

/// −∫Σ(k_i−k_j)² dS + (n−1)Σ cos θ_i sin²θ_i (n∫H̄ dS̄ + Hⁿ⁻¹(C_i)²/Hⁿ(D_i)).
/// Accepts non-CMC surfaces; the contact angles must be constant.
template <int N>
double second_factor(const CapillarySurface<N>& s)
{
    double boundary = 0.0;
    for (int i = 0; i < s.walls(); ++i) {
        if (s.measured_angles.at(i).max_deviation > s.tol.angle) {
            throw Refused("second_factor: contact angle is not constant along C_" +
                          std::to_string(i + 1));
        }
        const double c = std::cos(s.contact_angles[i]);
        const double sn = std::sin(s.contact_angles[i]);
        boundary += c * sn * sn * s.wetted[i].minkowski_term();
    }
    return -s.stats.umbilic_integral + (N - 1.0) * boundary;
}

template <int N>
StabilityReport stability_indicator(const CapillarySurface<N>& s)
{
    require_cmc(s.mean_curvature_deviation, s.tol.cmc, "stability_indicator");
    StabilityReport r;
    r.coefficients = energy_coefficients(s);
    r.first_factor = r.coefficients.e0;
    r.second_factor = second_factor(s);
    r.indicator = r.first_factor * r.second_factor;
    r.indicator_from_coefficients = 2.0 * N * r.coefficients.e0 * r.coefficients.e2 -
                                    (N - 1.0) * r.coefficients.e1 * r.coefficients.e1;
    r.umbilic_integral = s.stats.umbilic_integral;
    r.umbilic_deficit = s.stats.umbilic_deficit;
    r.hypotheses = check_hypotheses(s);

    const double e1_scale = std::max(1.0, s.stats.area);
    if (std::abs(r.coefficients.e1) <= 1e-9 * e1_scale) {
        r.verdict = Verdict::degenerate;
    } else if (!r.hypotheses.satisfied) {
        r.verdict = Verdict::hypotheses_not_met;
    } else if (r.umbilic_deficit < s.tol.umbilic && std::abs(r.indicator) < s.tol.indicator) {
        r.verdict = Verdict::sphere_stable;
    } else {
        r.verdict = Verdict::unstable_non_umbilic;
    }
    return r;
}

}  // namespace capillary_lab
