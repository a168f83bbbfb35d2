#pragma once

// Analytic patch builders: spheres and spherical zones (optionally pulled
// back through a conformal boost of the sphere), tori, cylinders, flat
// disks, ellipses, ellipsoids and spheroids. Every builder supplies an exact
// jet.

#include <array>
#include <cmath>
#include <numbers>

#include "capillary_lab/hypersurface.hpp"

namespace capillary_lab::surfaces {

using std::numbers::pi;

namespace detail {

template <int N>
int orientation_for_outward(const ParametricPatch<N>& p, const Vec<N>& center)
{
    num::Param<N> mid;
    for (int i = 0; i < N; ++i) mid[i] = 0.5 * (p.box[i].lo + p.box[i].hi);
    const auto jet = p.jet(mid);
    const Vec<N> nu = gauss_map<N>(jet, +1);
    return nu.dot(jet.value - center) >= 0.0 ? +1 : -1;
}

/// Unit sphere S^{M} ⊂ span(basis) in hyperspherical coordinates, with jets.
/// M = 1: w(φ) = cos φ b₀ + sin φ b₁, φ ∈ [0, 2π].
/// M = 2: w(φ₁, φ₂) = cos φ₁ b₀ + sin φ₁ (cos φ₂ b₁ + sin φ₂ b₂).
template <int M, int D>
struct SphereChart {
    using V = Eigen::Matrix<double, D, 1>;
    std::array<V, M + 1> basis;

    static num::Box<M> box()
    {
        num::Box<M> b{};
        if constexpr (M == 1) {
            b[0] = {0.0, 2.0 * pi};
        } else {
            b[0] = {0.0, pi};
            b[1] = {0.0, 2.0 * pi};
        }
        return b;
    }

    struct Eval {
        V w;
        std::array<V, M> d1;
        std::array<std::array<V, M>, M> d2;
    };

    Eval operator()(const Eigen::Matrix<double, M, 1>& a) const
    {
        Eval e;
        if constexpr (M == 1) {
            const double c = std::cos(a[0]), s = std::sin(a[0]);
            e.w = c * basis[0] + s * basis[1];
            e.d1[0] = -s * basis[0] + c * basis[1];
            e.d2[0][0] = -e.w;
        } else {
            const double c1 = std::cos(a[0]), s1 = std::sin(a[0]);
            const double c2 = std::cos(a[1]), s2 = std::sin(a[1]);
            const V ring = c2 * basis[1] + s2 * basis[2];
            const V dring = -s2 * basis[1] + c2 * basis[2];
            e.w = c1 * basis[0] + s1 * ring;
            e.d1[0] = -s1 * basis[0] + c1 * ring;
            e.d1[1] = s1 * dring;
            e.d2[0][0] = -c1 * basis[0] - s1 * ring;
            e.d2[0][1] = c1 * dring;
            e.d2[1][0] = e.d2[0][1];
            e.d2[1][1] = -s1 * ring;
        }
        return e;
    }
};

}  // namespace detail

/// Orthonormal completion of a unit vector: returns N vectors spanning its
/// orthogonal complement in R^{N+1}.
template <int N>
std::array<Vec<N>, N> complement_basis(const Vec<N>& axis)
{
    std::array<Vec<N>, N> out;
    int filled = 0;
    for (int k = 0; k <= N && filled < N; ++k) {
        Vec<N> v = Vec<N>::Unit(k);
        v -= v.dot(axis) * axis;
        for (int j = 0; j < filled; ++j) v -= v.dot(out[j]) * out[j];
        if (v.norm() > 1e-8) out[filled++] = v.normalized();
    }
    return out;
}

/// Spherical zone on the sphere |x − center| = R.
///
/// Chart coordinates are (ψ, angles of S^{n−1}); the zone is ψ ∈ [psi_lo,
/// psi_hi] measured from `axis` in the boosted frame. A nonzero `boost`
/// (|boost| < 1) pulls the chart back through the conformal map
///     z ↦ [z + (γ−1)(z·û)û + γu] / [γ(1 + u·z)],
/// which sends two disjoint non-coaxial caps to coaxial ones. The Gauss map
/// is oriented outward.
template <int N>
ParametricPatch<N> spherical_zone(const Vec<N>& center, double radius, const Vec<N>& axis,
                                  double psi_lo, double psi_hi,
                                  const Vec<N>& boost = Vec<N>::Zero())
{
    static_assert(N >= 2 && N <= 3, "spherical zones are built for n = 2, 3");
    if (!(radius > 0.0)) throw ParameterError("spherical_zone: radius must be positive");
    if (!(psi_hi > psi_lo) || psi_lo < 0.0 || psi_hi > pi) {
        throw ParameterError("spherical_zone: invalid polar range");
    }
    const double speed = boost.norm();
    if (!(speed < 1.0)) throw ParameterError("spherical_zone: boost speed must be below 1");

    using Chart = detail::SphereChart<N - 1, N + 1>;
    const Vec<N> a = axis.normalized();
    const auto comp = complement_basis<N>(a);
    Chart chart;
    for (int i = 0; i < N; ++i) chart.basis[i] = comp[i];

    const double gamma = 1.0 / std::sqrt(1.0 - speed * speed);
    const Vec<N> uhat = speed > 0.0 ? Vec<N>(boost / speed) : Vec<N>::Zero();
    auto linear = [=](const Vec<N>& z) -> Vec<N> {
        return z + (gamma - 1.0) * z.dot(uhat) * uhat;
    };

    auto jet_fn = [=](const num::Param<N>& u) {
        const double psi = u[0];
        Eigen::Matrix<double, N - 1, 1> ang = u.template tail<N - 1>();
        const auto w = chart(ang);
        const double c = std::cos(psi), s = std::sin(psi);

        // z and its partials in the boosted frame.
        num::Jet<N> z;
        z.value = c * a + s * w.w;
        z.d1[0] = -s * a + c * w.w;
        z.d2(0, 0) = -z.value;
        for (int i = 0; i < N - 1; ++i) {
            z.d1[i + 1] = s * w.d1[i];
            z.d2(0, i + 1) = c * w.d1[i];
            for (int j = i; j < N - 1; ++j) z.d2(i + 1, j + 1) = s * w.d2[i][j];
        }

        // y = numerator / denominator, both affine in z.
        const double den = gamma * (1.0 + boost.dot(z.value));
        const Vec<N> numr = linear(z.value) + gamma * boost;
        std::array<double, N> dden;
        num::Jet<N> y;
        y.value = numr / den;
        for (int i = 0; i < N; ++i) {
            dden[i] = gamma * boost.dot(z.d1[i]);
            y.d1[i] = (linear(z.d1[i]) - y.value * dden[i]) / den;
        }
        for (int i = 0; i < N; ++i) {
            for (int j = i; j < N; ++j) {
                const double ddij = gamma * boost.dot(z.d2(i, j));
                y.d2(i, j) = (linear(z.d2(i, j)) - y.d1[j] * dden[i] - y.d1[i] * dden[j] -
                              y.value * ddij) /
                             den;
            }
        }

        num::Jet<N> x;
        x.value = center + radius * y.value;
        for (int i = 0; i < N; ++i) x.d1[i] = radius * y.d1[i];
        for (int k = 0; k < num::Jet<N>::kPairs; ++k) x.d2_packed[k] = radius * y.d2_packed[k];
        return x;
    };

    ParametricPatch<N> p;
    p.box[0] = {psi_lo, psi_hi};
    const auto abox = Chart::box();
    for (int i = 0; i < N - 1; ++i) p.box[i + 1] = abox[i];
    p.analytic_jet = jet_fn;
    p.position = [jet_fn](const num::Param<N>& u) { return jet_fn(u).value; };
    p.name = "spherical_zone";
    p.orientation_sign = detail::orientation_for_outward(p, center);
    return p;
}

/// Full round sphere, outward orientation.
template <int N>
ParametricPatch<N> sphere(double radius = 1.0, const Vec<N>& center = Vec<N>::Zero())
{
    auto p = spherical_zone<N>(center, radius, Vec<N>::Unit(N), 0.0, pi);
    p.name = "sphere";
    return p;
}

/// Upper hemisphere {x_{n+1} ≥ 0} of the sphere about the origin, outward.
template <int N>
ParametricPatch<N> hemisphere(double radius = 1.0)
{
    auto p = spherical_zone<N>(Vec<N>::Zero(), radius, Vec<N>::Unit(N), 0.0, 0.5 * pi);
    p.name = "hemisphere";
    return p;
}

/// Flat disk of the given radius in {x₃ = height}, polar chart (ρ, φ).
/// `normal_up` selects ν = +e₃, otherwise ν = −e₃.
inline ParametricPatch<2> flat_disk(double radius, double height = 0.0, bool normal_up = true)
{
    if (!(radius > 0.0)) throw ParameterError("flat_disk: radius must be positive");
    ParametricPatch<2> p;
    p.box = {num::Interval{0.0, radius}, num::Interval{0.0, 2.0 * pi}};
    p.analytic_jet = [height](const num::Param<2>& u) {
        const double r = u[0], c = std::cos(u[1]), s = std::sin(u[1]);
        num::Jet<2> j;
        j.value = Vec<2>(r * c, r * s, height);
        j.d1[0] = Vec<2>(c, s, 0.0);
        j.d1[1] = Vec<2>(-r * s, r * c, 0.0);
        j.d2(0, 0) = Vec<2>::Zero();
        j.d2(0, 1) = Vec<2>(-s, c, 0.0);
        j.d2(1, 1) = Vec<2>(-r * c, -r * s, 0.0);
        return j;
    };
    const auto jf = p.analytic_jet;
    p.position = [jf](const num::Param<2>& u) { return jf(u).value; };
    p.orientation_sign = normal_up ? +1 : -1;
    p.name = "flat_disk";
    return p;
}

/// Torus of revolution about the x₃-axis, outward orientation.
inline ParametricPatch<2> torus(double major, double minor)
{
    if (!(minor > 0.0) || !(major > minor)) throw ParameterError("torus: need major > minor > 0");
    ParametricPatch<2> p;
    p.box = {num::Interval{0.0, 2.0 * pi}, num::Interval{0.0, 2.0 * pi}};
    p.analytic_jet = [major, minor](const num::Param<2>& u) {
        const double cu = std::cos(u[0]), su = std::sin(u[0]);
        const double cv = std::cos(u[1]), sv = std::sin(u[1]);
        const double rho = major + minor * cv;
        num::Jet<2> j;
        j.value = Vec<2>(rho * cu, rho * su, minor * sv);
        j.d1[0] = Vec<2>(-rho * su, rho * cu, 0.0);
        j.d1[1] = Vec<2>(-minor * sv * cu, -minor * sv * su, minor * cv);
        j.d2(0, 0) = Vec<2>(-rho * cu, -rho * su, 0.0);
        j.d2(0, 1) = Vec<2>(minor * sv * su, -minor * sv * cu, 0.0);
        j.d2(1, 1) = Vec<2>(-minor * cv * cu, -minor * cv * su, -minor * sv);
        return j;
    };
    const auto jf = p.analytic_jet;
    p.position = [jf](const num::Param<2>& u) { return jf(u).value; };
    p.name = "torus";
    return p;
}

/// Circular cylinder of radius R over x₃ ∈ [0, height], outward.
inline ParametricPatch<2> cylinder(double radius, double height)
{
    if (!(radius > 0.0) || !(height > 0.0)) throw ParameterError("cylinder: bad dimensions");
    ParametricPatch<2> p;
    p.box = {num::Interval{0.0, 2.0 * pi}, num::Interval{0.0, height}};
    p.analytic_jet = [radius](const num::Param<2>& u) {
        const double c = std::cos(u[0]), s = std::sin(u[0]);
        num::Jet<2> j;
        j.value = Vec<2>(radius * c, radius * s, u[1]);
        j.d1[0] = Vec<2>(-radius * s, radius * c, 0.0);
        j.d1[1] = Vec<2>(0.0, 0.0, 1.0);
        j.d2(0, 0) = Vec<2>(-radius * c, -radius * s, 0.0);
        j.d2(0, 1) = Vec<2>::Zero();
        j.d2(1, 1) = Vec<2>::Zero();
        return j;
    };
    const auto jf = p.analytic_jet;
    p.position = [jf](const num::Param<2>& u) { return jf(u).value; };
    p.name = "cylinder";
    return p;
}

/// Ellipse x²/a² + y²/b² = 1 traversed counter-clockwise, outward normal.
inline ParametricPatch<1> ellipse(double a, double b, const Vec<1>& center = Vec<1>::Zero())
{
    if (!(a > 0.0) || !(b > 0.0)) throw ParameterError("ellipse: semi-axes must be positive");
    ParametricPatch<1> p;
    p.box = {num::Interval{0.0, 2.0 * pi}};
    p.analytic_jet = [a, b, center](const num::Param<1>& u) {
        const double c = std::cos(u[0]), s = std::sin(u[0]);
        num::Jet<1> j;
        j.value = center + Vec<1>(a * c, b * s);
        j.d1[0] = Vec<1>(-a * s, b * c);
        j.d2(0, 0) = Vec<1>(-a * c, -b * s);
        return j;
    };
    const auto jf = p.analytic_jet;
    p.position = [jf](const num::Param<1>& u) { return jf(u).value; };
    // The left normal of a counter-clockwise curve points inward.
    p.orientation_sign = -1;
    p.name = "ellipse";
    return p;
}

inline ParametricPatch<1> circle(double radius, const Vec<1>& center = Vec<1>::Zero())
{
    auto p = ellipse(radius, radius, center);
    p.name = "circle";
    return p;
}

/// Ellipsoid with semi-axes (a, b, c), outward orientation. The polar range
/// ψ ∈ [0, psi_max] measured from +e₃ allows truncated pieces.
inline ParametricPatch<2> ellipsoid(double a, double b, double c, double psi_max = pi,
                                    const Vec<2>& center = Vec<2>::Zero())
{
    if (!(a > 0.0) || !(b > 0.0) || !(c > 0.0)) {
        throw ParameterError("ellipsoid: semi-axes must be positive");
    }
    ParametricPatch<2> p;
    p.box = {num::Interval{0.0, psi_max}, num::Interval{0.0, 2.0 * pi}};
    p.analytic_jet = [a, b, c, center](const num::Param<2>& u) {
        const double cp = std::cos(u[0]), sp = std::sin(u[0]);
        const double cf = std::cos(u[1]), sf = std::sin(u[1]);
        num::Jet<2> j;
        j.value = center + Vec<2>(a * sp * cf, b * sp * sf, c * cp);
        j.d1[0] = Vec<2>(a * cp * cf, b * cp * sf, -c * sp);
        j.d1[1] = Vec<2>(-a * sp * sf, b * sp * cf, 0.0);
        j.d2(0, 0) = Vec<2>(-a * sp * cf, -b * sp * sf, -c * cp);
        j.d2(0, 1) = Vec<2>(-a * cp * sf, b * cp * cf, 0.0);
        j.d2(1, 1) = Vec<2>(-a * sp * cf, -b * sp * sf, 0.0);
        return j;
    };
    const auto jf = p.analytic_jet;
    p.position = [jf](const num::Param<2>& u) { return jf(u).value; };
    p.name = "ellipsoid";
    return p;
}

}  // namespace capillary_lab::surfaces
