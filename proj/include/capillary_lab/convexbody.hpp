#pragma once

// Convex polytopes in R² and R³: hulls, Minkowski sums, quermassintegrals,
// Steiner polynomials, mixed volumes and the Minkowski / Alexandrov–Fenchel
// inequality suite. Smooth ellipses and ellipsoids enter through boundary
// quadrature.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "capillary_lab/errors.hpp"
#include "capillary_lab/hypersurface.hpp"
#include "capillary_lab/numkernel.hpp"

namespace capillary_lab::convex {

using std::numbers::pi;

template <int D>
using Point = Eigen::Matrix<double, D, 1>;

inline constexpr double kHullEps = 1e-10;  // relative to the point-set diameter

inline double unit_ball_volume(int n) { return std::pow(pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0); }

struct Facet {
    std::array<int, 3> v{};
    Eigen::Vector3d normal = Eigen::Vector3d::Zero();  // outward unit
    double offset = 0.0;                               // ⟨normal, x⟩ on the plane
};

struct Edge {
    int a = 0;
    int b = 0;
    double length = 0.0;
    double exterior_angle = 0.0;  // angle between the adjacent facet normals
};

namespace detail {

template <int D>
double diameter_scale(std::span<const Point<D>> pts)
{
    double s = 0.0;
    for (const auto& p : pts) s = std::max(s, (p - pts.front()).norm());
    return std::max(s, 1e-300);
}

template <int D>
bool lex_less(const Point<D>& a, const Point<D>& b)
{
    for (int i = 0; i < D; ++i) {
        if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
}

template <int D>
std::vector<Point<D>> sorted_vertices(std::vector<Point<D>> v)
{
    std::sort(v.begin(), v.end(), lex_less<D>);
    return v;
}

inline double cross2(const Point<2>& o, const Point<2>& a, const Point<2>& b)
{
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

/// Monotone chain; returns extreme points counter-clockwise.
inline std::vector<Point<2>> hull_2d(std::vector<Point<2>> pts)
{
    if (pts.size() < 3) throw DegeneracyError("hull: need at least 3 points in the plane");
    const double eps = kHullEps * diameter_scale<2>(pts);
    std::sort(pts.begin(), pts.end(), lex_less<2>);
    std::vector<Point<2>> h(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross2(h[k - 2], h[k - 1], p) <= eps * (h[k - 1] - h[k - 2]).norm()) --k;
        h[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lo = k + 1; i-- > 0;) {
        const auto& p = pts[i];
        while (k >= lo && cross2(h[k - 2], h[k - 1], p) <= eps * (h[k - 1] - h[k - 2]).norm()) --k;
        h[k++] = p;
    }
    h.resize(k > 0 ? k - 1 : 0);
    if (h.size() < 3) throw DegeneracyError("hull: points are collinear");
    return h;
}

struct Hull3 {
    std::vector<Point<3>> vertices;
    std::vector<Facet> facets;
};

inline Facet make_facet(const std::vector<Point<3>>& pts, int a, int b, int c,
                        const Point<3>& interior)
{
    Facet f;
    f.v = {a, b, c};
    Point<3> n = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
    const double len = n.norm();
    n /= len;
    if (n.dot(interior - pts[a]) > 0.0) {
        std::swap(f.v[1], f.v[2]);
        n = -n;
    }
    f.normal = n;
    f.offset = n.dot(pts[a]);
    return f;
}

/// Incremental hull; facets are triangles with outward normals. Returns
/// nothing when the insertion order produced a degenerate triangle.
inline std::optional<Hull3> incremental_hull(const std::vector<Point<3>>& pts,
                                             const std::vector<int>& order)
{
    const int n = static_cast<int>(pts.size());
    if (n < 4) throw DegeneracyError("hull: need at least 4 points in space");
    const double scale = diameter_scale<3>(pts);
    const double eps = kHullEps * scale;

    // Initial simplex from extreme points.
    int i0 = 0;
    for (int i = 1; i < n; ++i)
        if (lex_less<3>(pts[i], pts[i0])) i0 = i;
    int i1 = -1;
    double best = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = (pts[i] - pts[i0]).norm();
        if (d > best) best = d, i1 = i;
    }
    if (i1 < 0 || best <= eps) throw DegeneracyError("hull: all points coincide");
    const Point<3> dir = (pts[i1] - pts[i0]).normalized();
    int i2 = -1;
    best = 0.0;
    for (int i = 0; i < n; ++i) {
        const Point<3> r = pts[i] - pts[i0];
        const double d = (r - r.dot(dir) * dir).norm();
        if (d > best) best = d, i2 = i;
    }
    if (i2 < 0 || best <= eps) throw DegeneracyError("hull: points are collinear");
    const Point<3> pn = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]).normalized();
    int i3 = -1;
    best = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = std::abs(pn.dot(pts[i] - pts[i0]));
        if (d > best) best = d, i3 = i;
    }
    if (i3 < 0 || best <= eps) throw DegeneracyError("hull: points are coplanar");

    const Point<3> interior = 0.25 * (pts[i0] + pts[i1] + pts[i2] + pts[i3]);
    std::vector<Facet> faces;
    std::vector<char> alive;
    std::unordered_map<long long, int> owner;  // directed edge → facet
    auto key = [n](int a, int b) { return static_cast<long long>(a) * n + b; };
    auto add = [&](int a, int b, int c) {
        faces.push_back(make_facet(pts, a, b, c, interior));
        alive.push_back(1);
        const auto& f = faces.back();
        const int id = static_cast<int>(faces.size()) - 1;
        for (int e = 0; e < 3; ++e) owner[key(f.v[e], f.v[(e + 1) % 3])] = id;
    };
    add(i0, i1, i2);
    add(i0, i1, i3);
    add(i0, i2, i3);
    add(i1, i2, i3);

    std::vector<char> used(n, 0);
    used[i0] = used[i1] = used[i2] = used[i3] = 1;
    std::vector<int> visible;
    for (int p : order) {
        if (used[p]) continue;
        visible.clear();
        for (int f = 0; f < static_cast<int>(faces.size()); ++f) {
            if (alive[f] && faces[f].normal.dot(pts[p]) - faces[f].offset > eps) visible.push_back(f);
        }
        if (visible.empty()) continue;
        std::vector<std::pair<int, int>> horizon;
        for (int f : visible) {
            for (int e = 0; e < 3; ++e) {
                const int a = faces[f].v[e], b = faces[f].v[(e + 1) % 3];
                const auto it = owner.find(key(b, a));
                const int g = it == owner.end() ? -1 : it->second;
                const bool g_visible = g >= 0 && std::find(visible.begin(), visible.end(), g) != visible.end();
                if (!g_visible) horizon.emplace_back(a, b);
            }
        }
        for (int f : visible) {
            alive[f] = 0;
            for (int e = 0; e < 3; ++e) {
                const auto it = owner.find(key(faces[f].v[e], faces[f].v[(e + 1) % 3]));
                if (it != owner.end() && it->second == f) owner.erase(it);
            }
        }
        for (const auto& [a, b] : horizon) {
            Facet f;
            f.v = {a, b, p};
            const Point<3> nn = (pts[b] - pts[a]).cross(pts[p] - pts[a]);
            if (nn.norm() <= eps * scale) return std::nullopt;
            f.normal = nn.normalized();
            f.offset = f.normal.dot(pts[a]);
            faces.push_back(f);
            alive.push_back(1);
            const int id = static_cast<int>(faces.size()) - 1;
            for (int e = 0; e < 3; ++e) owner[key(f.v[e], f.v[(e + 1) % 3])] = id;
        }
        used[p] = 1;
    }

    Hull3 h;
    std::vector<int> remap(n, -1);
    for (int f = 0; f < static_cast<int>(faces.size()); ++f) {
        if (!alive[f]) continue;
        Facet out = faces[f];
        for (int e = 0; e < 3; ++e) {
            int& r = remap[out.v[e]];
            if (r < 0) {
                r = static_cast<int>(h.vertices.size());
                h.vertices.push_back(pts[out.v[e]]);
            }
            out.v[e] = r;
        }
        h.facets.push_back(out);
    }
    std::map<std::pair<int, int>, int> directed;
    for (const auto& f : h.facets)
        for (int e = 0; e < 3; ++e) ++directed[{f.v[e], f.v[(e + 1) % 3]}];
    for (const auto& [ab, count] : directed) {
        const auto it = directed.find({ab.second, ab.first});
        if (count != 1 || it == directed.end() || it->second != 1) return std::nullopt;
    }
    return h;
}

/// Far points first, then seeded shuffles if that order degenerates.
inline Hull3 robust_hull(const std::vector<Point<3>>& pts)
{
    const int n = static_cast<int>(pts.size());
    Point<3> centroid = Point<3>::Zero();
    for (const auto& p : pts) centroid += p;
    centroid /= std::max(n, 1);
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return (pts[a] - centroid).squaredNorm() > (pts[b] - centroid).squaredNorm();
    });
    std::mt19937_64 rng(0x5eed);
    for (int attempt = 0; attempt < 16; ++attempt) {
        if (auto h = incremental_hull(pts, order)) return *h;
        std::shuffle(order.begin(), order.end(), rng);
    }
    throw DegeneracyError("hull: could not triangulate the boundary robustly");
}

/// A hull vertex is extreme when the normals of its incident facets span R³.
inline std::vector<char> extreme_flags(const Hull3& h)
{
    std::vector<std::vector<Point<3>>> normals(h.vertices.size());
    for (const auto& f : h.facets)
        for (int v : f.v) normals[v].push_back(f.normal);
    std::vector<char> flags(h.vertices.size(), 0);
    for (std::size_t v = 0; v < h.vertices.size(); ++v) {
        Eigen::MatrixXd m(3, normals[v].size());
        for (std::size_t k = 0; k < normals[v].size(); ++k) m.col(static_cast<Eigen::Index>(k)) = normals[v][k];
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        const auto sv = svd.singularValues();
        flags[v] = sv.size() >= 3 && sv[2] > 1e-7 * sv[0];
    }
    return flags;
}

inline Hull3 hull_3d(const std::vector<Point<3>>& pts)
{
    Hull3 h = robust_hull(pts);
    for (int pass = 0; pass < 8; ++pass) {
        const auto flags = extreme_flags(h);
        if (std::all_of(flags.begin(), flags.end(), [](char c) { return c != 0; })) return h;
        std::vector<Point<3>> keep;
        for (std::size_t v = 0; v < h.vertices.size(); ++v)
            if (flags[v]) keep.push_back(h.vertices[v]);
        h = robust_hull(keep);
    }
    return h;
}

}  // namespace detail

template <int D>
class ConvexPolytope;

/// Convex polygon; vertices are extreme points in counter-clockwise order.
template <>
class ConvexPolytope<2> {
public:
    static constexpr int dim = 2;

    static ConvexPolytope hull(std::vector<Point<2>> pts)
    {
        ConvexPolytope p;
        p.vertices_ = detail::hull_2d(std::move(pts));
        return p;
    }

    /// A single point; only meaningful as a Minkowski summand.
    static ConvexPolytope singleton(const Point<2>& p)
    {
        ConvexPolytope q;
        q.vertices_ = {p};
        return q;
    }

    /// Vertex list that must already be in convex position.
    static ConvexPolytope from_vertices(const std::vector<Point<2>>& pts)
    {
        auto p = hull(pts);
        if (p.vertices_.size() != pts.size()) {
            throw NonConvex("polygon has " + std::to_string(pts.size() - p.vertices_.size()) +
                            " non-extreme vertices");
        }
        return p;
    }

    const std::vector<Point<2>>& vertices() const { return vertices_; }
    std::size_t vertex_count() const { return vertices_.size(); }

    double volume() const
    {
        std::vector<double> terms;
        for (std::size_t i = 0; i < vertices_.size(); ++i) {
            const auto& a = vertices_[i];
            const auto& b = vertices_[(i + 1) % vertices_.size()];
            terms.push_back(a.x() * b.y() - a.y() * b.x());
        }
        return 0.5 * num::pairwise_sum(terms);
    }

    double boundary_measure() const
    {
        std::vector<double> terms;
        for (std::size_t i = 0; i < vertices_.size(); ++i)
            terms.push_back((vertices_[(i + 1) % vertices_.size()] - vertices_[i]).norm());
        return num::pairwise_sum(terms);
    }

    ConvexPolytope transformed(double scale, const Point<2>& shift) const
    {
        std::vector<Point<2>> v;
        for (const auto& x : vertices_) v.push_back(scale * x + shift);
        return hull(v);
    }

    std::vector<Point<2>> sorted_vertices() const { return detail::sorted_vertices<2>(vertices_); }

private:
    std::vector<Point<2>> vertices_;
};

/// Convex polyhedron stored as a triangulated boundary.
template <>
class ConvexPolytope<3> {
public:
    static constexpr int dim = 3;

    static ConvexPolytope hull(const std::vector<Point<3>>& pts)
    {
        ConvexPolytope p;
        auto h = detail::hull_3d(pts);
        p.vertices_ = std::move(h.vertices);
        p.facets_ = std::move(h.facets);
        p.build_edges();
        return p;
    }

    static ConvexPolytope singleton(const Point<3>& p)
    {
        ConvexPolytope q;
        q.vertices_ = {p};
        return q;
    }

    static ConvexPolytope from_vertices(const std::vector<Point<3>>& pts)
    {
        auto p = hull(pts);
        if (p.vertices_.size() != pts.size()) {
            throw NonConvex("polyhedron has " + std::to_string(pts.size() - p.vertices_.size()) +
                            " non-extreme vertices");
        }
        return p;
    }

    const std::vector<Point<3>>& vertices() const { return vertices_; }
    const std::vector<Facet>& facets() const { return facets_; }
    const std::vector<Edge>& edges() const { return edges_; }
    std::size_t vertex_count() const { return vertices_.size(); }

    int euler_characteristic() const
    {
        return static_cast<int>(vertices_.size()) - static_cast<int>(edges_.size()) +
               static_cast<int>(facets_.size());
    }

    double volume() const
    {
        const Point<3> o = vertices_.front();
        std::vector<double> terms;
        for (const auto& f : facets_) {
            const Point<3> a = vertices_[f.v[0]] - o, b = vertices_[f.v[1]] - o, c = vertices_[f.v[2]] - o;
            terms.push_back(a.dot(b.cross(c)) / 6.0);
        }
        return num::pairwise_sum(terms);
    }

    double boundary_measure() const
    {
        std::vector<double> terms;
        for (const auto& f : facets_) {
            const auto& a = vertices_[f.v[0]];
            terms.push_back(0.5 * (vertices_[f.v[1]] - a).cross(vertices_[f.v[2]] - a).norm());
        }
        return num::pairwise_sum(terms);
    }

    /// Σ length·exterior angle / 2 over edges; equals ∫|H| dS of the body.
    double edge_curvature() const
    {
        std::vector<double> terms;
        for (const auto& e : edges_) terms.push_back(0.5 * e.length * e.exterior_angle);
        return num::pairwise_sum(terms);
    }

    ConvexPolytope transformed(double scale, const Point<3>& shift) const
    {
        std::vector<Point<3>> v;
        for (const auto& x : vertices_) v.push_back(scale * x + shift);
        return hull(v);
    }

    std::vector<Point<3>> sorted_vertices() const { return detail::sorted_vertices<3>(vertices_); }

private:
    void build_edges()
    {
        std::map<std::pair<int, int>, std::vector<int>> adj;
        for (int f = 0; f < static_cast<int>(facets_.size()); ++f) {
            for (int e = 0; e < 3; ++e) {
                int a = facets_[f].v[e], b = facets_[f].v[(e + 1) % 3];
                if (a > b) std::swap(a, b);
                adj[{a, b}].push_back(f);
            }
        }
        for (const auto& [ab, fs] : adj) {
            if (fs.size() != 2) throw DegeneracyError("hull: boundary is not a closed 2-manifold");
            Edge e;
            e.a = ab.first;
            e.b = ab.second;
            e.length = (vertices_[e.a] - vertices_[e.b]).norm();
            const double c = std::clamp(facets_[fs[0]].normal.dot(facets_[fs[1]].normal), -1.0, 1.0);
            e.exterior_angle = std::acos(c);
            edges_.push_back(e);
        }
    }

    std::vector<Point<3>> vertices_;
    std::vector<Facet> facets_;
    std::vector<Edge> edges_;
};

using Polygon = ConvexPolytope<2>;
using Polyhedron = ConvexPolytope<3>;

template <int D>
ConvexPolytope<D> minkowski_sum(const ConvexPolytope<D>& p, const ConvexPolytope<D>& q)
{
    std::vector<Point<D>> pts;
    pts.reserve(p.vertex_count() * q.vertex_count());
    for (const auto& a : p.vertices())
        for (const auto& b : q.vertices()) pts.push_back(a + b);
    return ConvexPolytope<D>::hull(pts);
}

// ---------------------------------------------------------------------------
// Quermassintegrals and Steiner polynomials
// ---------------------------------------------------------------------------

/// W₀..W_n with W₀ the volume and W_n the volume of the unit ball.
struct QuermassVector {
    int n = 2;
    std::vector<double> w;

    double operator[](int j) const { return w.at(j); }
    double boundary_measure() const { return n * w[1]; }
    double mean_curvature_integral() const { return n * w[2]; }  // ∫|H| dS
    double gauss_curvature_integral() const                      // ∫Σk_ik_j dS, n = 3
    {
        return n == 3 ? 0.5 * n * (n - 1) * (n - 2) * w[3] : 0.0;
    }
};

inline QuermassVector quermass(const Polygon& p)
{
    const double a = p.volume();
    if (!(a > 0.0)) throw DegeneracyError("quermass: polygon has no area");
    return {2, {a, 0.5 * p.boundary_measure(), pi}};
}

inline QuermassVector quermass(const Polyhedron& p)
{
    const double v = p.volume();
    if (!(v > 0.0)) throw DegeneracyError("quermass: polyhedron has no volume");
    return {3, {v, p.boundary_measure() / 3.0, p.edge_curvature() / 3.0, unit_ball_volume(3)}};
}

/// Quermassintegrals of a smooth convex body from its closed outward boundary
/// patch in Rⁿ (a curve for n = 2, a surface for n = 3).
template <int M>
QuermassVector smooth_quermass(const ParametricPatch<M>& boundary, int order = 64)
{
    constexpr int n = M + 1;
    for (const auto& node : num::tensor_nodes<M>(boundary.box, order)) {
        const auto cd = curvature_at(boundary, node.u);
        if (cd.principal_curvatures.maxCoeff() > 1e-12) throw NonConvex("smooth body is not convex");
    }
    using Row = Eigen::Matrix<double, 4, 1>;
    const Row sums = integrate_over(
        boundary,
        [](const CurvatureData<M>& cd) {
            Row r;
            r[0] = 1.0;
            r[1] = cd.position.dot(cd.gauss) / n;
            r[2] = std::abs(cd.mean_curvature);
            r[3] = M >= 2 ? cd.elementary(std::min(2, M)) : 0.0;
            return r;
        },
        order);
    QuermassVector q;
    q.n = n;
    q.w = {sums[1], sums[0] / n, sums[2] / n};
    if constexpr (n == 3) q.w.push_back(2.0 * sums[3] / (n * (n - 1) * (n - 2)));
    return q;
}

/// Ball of radius r as a smooth body: every W_j equals the ball volume at r = 1.
inline QuermassVector ball_quermass(int n, double radius = 1.0)
{
    QuermassVector q;
    q.n = n;
    for (int j = 0; j <= n; ++j) q.w.push_back(unit_ball_volume(n) * std::pow(radius, n - j));
    return q;
}

/// Hⁿ(K + tB) = Σ C(n, j) W_j t^j.
struct SteinerPolynomial {
    int n = 2;
    std::vector<double> coefficients;

    double operator()(double t) const { return num::horner(coefficients, t); }

    /// Boundary measure of K + tB, the t-derivative of the volume.
    double boundary(double t) const
    {
        double acc = 0.0;
        for (std::size_t k = coefficients.size(); k-- > 1;)
            acc = acc * t + static_cast<double>(k) * coefficients[k];
        return acc;
    }
};

inline SteinerPolynomial steiner(const QuermassVector& q)
{
    SteinerPolynomial s;
    s.n = q.n;
    for (int j = 0; j <= q.n; ++j) s.coefficients.push_back(num::binomial(q.n, j) * q.w[j]);
    return s;
}

template <int D>
SteinerPolynomial steiner(const ConvexPolytope<D>& p)
{
    return steiner(quermass(p));
}

/// Inscribed regular polygon (2D, `sides` vertices on the unit circle) and
/// its circumscribing scale factor.
inline std::pair<Polygon, double> ball_approximant_2d(int sides = 1024)
{
    std::vector<Point<2>> v;
    for (int k = 0; k < sides; ++k) {
        const double a = 2.0 * pi * k / sides;
        v.emplace_back(std::cos(a), std::sin(a));
    }
    return {Polygon::hull(v), 1.0 / std::cos(pi / sides)};
}

/// Icosphere with vertices on the unit sphere; `levels` = 3 gives 1280
/// facets. The scale factor makes it circumscribe the ball.
inline std::pair<Polyhedron, double> ball_approximant_3d(int levels = 3)
{
    const double phi = 0.5 * (1.0 + std::sqrt(5.0));
    std::vector<Point<3>> v = {{-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
                               {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
                               {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
    for (auto& p : v) p.normalize();
    std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                         {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                         {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                         {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int l = 0; l < levels; ++l) {
        std::map<std::pair<int, int>, int> mid;
        auto midpoint = [&](int a, int b) {
            const auto k = std::minmax(a, b);
            const auto it = mid.find(k);
            if (it != mid.end()) return it->second;
            v.push_back((v[a] + v[b]).normalized());
            const int id = static_cast<int>(v.size()) - 1;
            mid[k] = id;
            return id;
        };
        std::vector<std::array<int, 3>> next;
        for (const auto& t : f) {
            const int a = midpoint(t[0], t[1]), b = midpoint(t[1], t[2]), c = midpoint(t[2], t[0]);
            next.push_back({t[0], a, c});
            next.push_back({t[1], b, a});
            next.push_back({t[2], c, b});
            next.push_back({a, b, c});
        }
        f = std::move(next);
    }
    double inradius = 1.0;
    for (const auto& t : f) {
        const Point<3> n = (v[t[1]] - v[t[0]]).cross(v[t[2]] - v[t[0]]).normalized();
        inradius = std::min(inradius, std::abs(n.dot(v[t[0]])));
    }
    return {Polyhedron::hull(v), 1.0 / inradius};
}

struct SteinerCheck {
    double t = 0.0;
    double polynomial = 0.0;  // Steiner polynomial at t
    double sampled = 0.0;     // Hⁿ(P + t·B_inscribed)
    double residual = 0.0;    // |polynomial − sampled|
    double bound = 0.0;       // Hⁿ(P + t·B_circumscribed) − sampled
    bool within_bound() const { return residual <= bound + 1e-12 * std::max(1.0, polynomial); }
};

template <int D>
SteinerCheck steiner_check(const ConvexPolytope<D>& p, double t)
{
    if (t < 0.0) throw ParameterError("steiner_check: t must be nonnegative");
    SteinerCheck c;
    c.t = t;
    c.polynomial = steiner(p)(t);
    if (t == 0.0) {
        c.sampled = p.volume();
        c.residual = std::abs(c.polynomial - c.sampled);
        return c;
    }
    const auto [ball, outer] = [] {
        if constexpr (D == 2) return ball_approximant_2d();
        else return ball_approximant_3d();
    }();
    const Point<D> zero = Point<D>::Zero();
    c.sampled = minkowski_sum(p, ball.transformed(t, zero)).volume();
    const double upper = minkowski_sum(p, ball.transformed(t * outer, zero)).volume();
    c.residual = std::abs(c.polynomial - c.sampled);
    c.bound = upper - c.sampled;
    return c;
}

// ---------------------------------------------------------------------------
// Mixed volumes
// ---------------------------------------------------------------------------

inline double mixed_volume_2d(const Polygon& k, const Polygon& l)
{
    return 0.5 * (minkowski_sum(k, l).volume() - k.volume() - l.volume());
}

/// (V(K,K,L), V(K,L,L)) from Vol(K + tL) at t = 1, 2.
inline std::pair<double, double> mixed_volumes_3d(const Polyhedron& k, const Polyhedron& l)
{
    const double vk = k.volume(), vl = l.volume();
    const double f1 = minkowski_sum(k, l).volume();
    const double f2 = minkowski_sum(k, l.transformed(2.0, Point<3>::Zero())).volume();
    const double r1 = f1 - vk - vl;         // 3a + 3b
    const double r2 = f2 - vk - 8.0 * vl;   // 6a + 12b
    const double b = (r2 - 2.0 * r1) / 6.0;
    const double a = r1 / 3.0 - b;
    return {a, b};
}

// ---------------------------------------------------------------------------
// Inequalities
// ---------------------------------------------------------------------------

/// Slacks (left minus right, ≥ 0 for convex bodies).
struct InequalitySlacks {
    int n = 2;
    QuermassVector quermass;
    double af_first = 0.0;    // W₁² − W₀W₂
    std::optional<double> af_second;  // W₂² − W₁W₃ (n = 3)
    double minkowski = 0.0;   // H^{n−1}(∂D)²/Hⁿ(D) − n∫|H|
    std::optional<double> chain_first;   // (∫|H|)²/H²(∂D) − ∫k₁k₂ (n = 3)
    std::optional<double> chain_second;  // H²(∂D)³/(9V²) − (∫|H|)²/H²(∂D) (n = 3)

    double min_slack() const
    {
        double m = std::min(af_first, minkowski);
        for (const auto& o : {af_second, chain_first, chain_second})
            if (o) m = std::min(m, *o);
        return m;
    }

    /// Largest |slack| divided by the leading term of its inequality; scale-free.
    double max_relative_slack() const
    {
        const auto& q = quermass;
        const double area = q.boundary_measure(), mean = q.mean_curvature_integral();
        double m = std::max(std::abs(af_first) / (q[1] * q[1]), std::abs(minkowski) / (area * area / q[0]));
        if (af_second) m = std::max(m, std::abs(*af_second) / (q[2] * q[2]));
        if (chain_first) m = std::max(m, std::abs(*chain_first) / (mean * mean / area));
        if (chain_second) m = std::max(m, std::abs(*chain_second) / (area * area * area / (9.0 * q[0] * q[0])));
        return m;
    }
};

inline InequalitySlacks inequality_suite(const QuermassVector& q)
{
    InequalitySlacks s;
    s.n = q.n;
    s.quermass = q;
    const double vol = q[0];
    const double area = q.boundary_measure();
    const double mean = q.mean_curvature_integral();
    s.af_first = q[1] * q[1] - q[0] * q[2];
    s.minkowski = area * area / vol - q.n * mean;
    if (q.n == 3) {
        s.af_second = q[2] * q[2] - q[1] * q[3];
        s.chain_first = mean * mean / area - q.gauss_curvature_integral();
        s.chain_second = area * area * area / (9.0 * vol * vol) - mean * mean / area;
    }
    return s;
}

template <int D>
InequalitySlacks inequality_suite(const ConvexPolytope<D>& p)
{
    return inequality_suite(quermass(p));
}

/// Convexity is checked, never assumed: every input vertex must be extreme.
template <int D>
InequalitySlacks inequality_suite_from_vertices(const std::vector<Point<D>>& vertices)
{
    return inequality_suite(ConvexPolytope<D>::from_vertices(vertices));
}

/// Isoperimetric quotients H^{n−1}(∂D_t)ⁿ / Hⁿ(D_t)^{n−1} of parallel bodies.
struct QuotientScan {
    std::vector<double> t;
    std::vector<double> quotient;
    bool nonincreasing = true;
};

inline QuotientScan parallel_quotient_scan(const QuermassVector& q, const std::vector<double>& t_grid)
{
    QuotientScan scan;
    const auto s = steiner(q);
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const double t = t_grid[i];
        if (t < 0.0 || (i > 0 && !(t > t_grid[i - 1]))) {
            throw ParameterError("parallel_quotient_scan: t grid must be increasing and nonnegative");
        }
        const double v = s(t);
        const double a = s.boundary(t);
        const double qv = std::pow(a, q.n) / std::pow(v, q.n - 1);
        if (!scan.quotient.empty() && qv > scan.quotient.back() * (1.0 + 1e-12)) scan.nonincreasing = false;
        scan.t.push_back(t);
        scan.quotient.push_back(qv);
    }
    return scan;
}

// ---------------------------------------------------------------------------
// Random suites
// ---------------------------------------------------------------------------

inline Polygon random_polygon(std::mt19937_64& rng, int min_points = 10, int max_points = 50)
{
    std::uniform_int_distribution<int> count(min_points, max_points);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Point<2>> pts(static_cast<std::size_t>(count(rng)));
    for (auto& p : pts) p = Point<2>(u(rng), u(rng));
    return Polygon::hull(pts);
}

inline Polyhedron random_polyhedron(std::mt19937_64& rng, int min_points = 10, int max_points = 40)
{
    std::uniform_int_distribution<int> count(min_points, max_points);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Point<3>> pts(static_cast<std::size_t>(count(rng)));
    for (auto& p : pts) p = Point<3>(u(rng), u(rng), u(rng));
    return Polyhedron::hull(pts);
}

inline Polygon unit_square()
{
    return Polygon::hull({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
}

inline Polyhedron unit_cube()
{
    std::vector<Point<3>> v;
    for (int i = 0; i < 8; ++i) v.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
    return Polyhedron::hull(v);
}

}  // namespace capillary_lab::convex
