#pragma once

// Parametric immersed hypersurfaces X : box ⊂ R^n -> R^{n+1}.
//
// Sign conventions:
//   * The Gauss map ν makes {∂₁X, …, ∂ₙX, ν} a positively oriented frame,
//     multiplied by the patch's orientation_sign.
//   * Principal curvatures are the eigenvalues of g⁻¹h with h_ij = ⟨∂ᵢ∂ⱼX, ν⟩,
//     so the parallel surface X + tν has area density ∏(1 − kᵢt)·√det g.
//     A round sphere of radius R with outward ν has every kᵢ = −1/R.

#include <cmath>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "capillary_lab/errors.hpp"
#include "capillary_lab/numkernel.hpp"

namespace capillary_lab {

template <int N>
using Vec = num::Point<N>;

template <int N>
using JetFn = std::function<num::Jet<N>(const num::Param<N>&)>;

inline constexpr double kGramThreshold = 1e-12;

template <int N>
struct ParametricPatch {
    static_assert(N >= 1 && N <= 3, "patches of dimension 1..3 are supported");

    num::Box<N> box{};
    num::PositionFn<N> position;
    JetFn<N> analytic_jet;  // optional; finite differences otherwise
    int orientation_sign = +1;
    double fd_step = num::kDefaultStep;
    std::string name;

    static constexpr int dim() { return N; }
    static constexpr int ambient_dim() { return N + 1; }

    num::Jet<N> jet(const num::Param<N>& u) const
    {
        if (analytic_jet) return analytic_jet(u);
        return num::fd_jet<N>(position, u, fd_step, &box);
    }

    ParametricPatch flipped() const
    {
        ParametricPatch out = *this;
        out.orientation_sign = -orientation_sign;
        return out;
    }
};

/// Unit normal from the first partials: ν_k = det[∂₁X, …, ∂ₙX, e_k],
/// normalised and multiplied by `sign`.
template <int N>
Vec<N> gauss_map(const num::Jet<N>& jet, int sign)
{
    Vec<N> nu;
    Eigen::Matrix<double, N + 1, N + 1> frame;
    for (int i = 0; i < N; ++i) frame.col(i) = jet.d1[i];
    for (int k = 0; k <= N; ++k) {
        frame.col(N) = Vec<N>::Unit(k);
        nu[k] = frame.determinant();
    }
    const double len = nu.norm();
    if (!(len > 0.0)) throw DegenerateImmersion("gauss_map: tangent frame is degenerate");
    return (sign >= 0 ? 1.0 : -1.0) * nu / len;
}

template <int N>
struct CurvatureData {
    num::SymMatrix<N> metric;
    num::SymMatrix<N> second_form;
    Vec<N> gauss;
    Vec<N> position;
    Eigen::Matrix<double, N, 1> principal_curvatures;  // ascending
    double mean_curvature = 0.0;
    double area_density = 0.0;  // √det g

    /// Elementary symmetric polynomial σ_ℓ of the principal curvatures.
    double elementary(int ell) const
    {
        std::array<double, N + 1> e{};
        e[0] = 1.0;
        for (int i = 0; i < N; ++i) {
            for (int j = i + 1; j >= 1; --j) e[j] += e[j - 1] * principal_curvatures[i];
        }
        return (ell < 0 || ell > N) ? 0.0 : e[ell];
    }

    /// Σ_{i<j} (k_i − k_j)².
    double umbilic_square() const
    {
        double s = 0.0;
        for (int i = 0; i < N; ++i)
            for (int j = i + 1; j < N; ++j) {
                const double d = principal_curvatures[i] - principal_curvatures[j];
                s += d * d;
            }
        return s;
    }

    double umbilic_spread() const
    {
        return principal_curvatures[N - 1] - principal_curvatures[0];
    }
};

template <int N>
CurvatureData<N> curvature_from_jet(const num::Jet<N>& jet, int orientation_sign,
                                    const num::Param<N>* where = nullptr)
{
    CurvatureData<N> cd;
    cd.position = jet.value;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) cd.metric(i, j) = jet.d1[i].dot(jet.d1[j]);

    // Linear independence is judged on the normalised Gram determinant
    // det g / ∏|∂ᵢX|², so polar charts with short partials are accepted.
    const double det = cd.metric.determinant();
    double lengths = 1.0;
    for (int i = 0; i < N; ++i) lengths *= cd.metric(i, i);
    if (!(lengths > 0.0) || !(det / lengths > kGramThreshold)) {
        std::ostringstream os;
        os << "degenerate immersion: normalised Gram determinant "
           << (lengths > 0.0 ? det / lengths : 0.0);
        if (where) os << " at " << num::detail::describe_node<N>(*where);
        throw DegenerateImmersion(os.str());
    }
    cd.area_density = std::sqrt(det);
    cd.gauss = gauss_map<N>(jet, orientation_sign);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) cd.second_form(i, j) = jet.d2(i, j).dot(cd.gauss);

    // g⁻¹h is similar to L⁻¹ h L⁻ᵀ with g = LLᵀ.
    const Eigen::LLT<num::SymMatrix<N>> llt(cd.metric);
    const num::SymMatrix<N> linv = llt.matrixL().solve(num::SymMatrix<N>::Identity());
    num::SymMatrix<N> shape = linv * cd.second_form * linv.transpose();
    shape = 0.5 * (shape + shape.transpose()).eval();
    cd.principal_curvatures = num::sym_eigen<N>(shape);
    cd.mean_curvature = cd.principal_curvatures.sum() / N;
    return cd;
}

template <int N>
CurvatureData<N> curvature_at(const ParametricPatch<N>& patch, const num::Param<N>& u)
{
    return curvature_from_jet<N>(patch.jet(u), patch.orientation_sign, &u);
}

/// Checks the immersion and unit-normal invariants at every quadrature node.
template <int N>
void validate_patch(const ParametricPatch<N>& patch, int order = num::kDefaultOrder)
{
    for (const auto& node : num::tensor_nodes<N>(patch.box, order)) {
        const auto cd = curvature_at(patch, node.u);
        if (std::abs(cd.gauss.norm() - 1.0) > 1e-12) {
            throw DegenerateImmersion("validate_patch: Gauss map is not unit length at " +
                                      num::detail::describe_node<N>(node.u));
        }
    }
}

/// Integrates `f(curvature_data)·dS` over the patch.
template <int N, class F>
auto integrate_over(const ParametricPatch<N>& patch, F&& f, int order = num::kDefaultOrder)
{
    return num::integrate_box<N>(
        [&](const num::Param<N>& u) {
            const auto cd = curvature_at(patch, u);
            using R = num::detail::plain_t<decltype(f(cd))>;
            const R value = f(cd);
            return R(value * cd.area_density);
        },
        patch.box, order);
}

template <int N>
double area(const ParametricPatch<N>& patch, int order = num::kDefaultOrder)
{
    return integrate_over(patch, [](const CurvatureData<N>&) { return 1.0; }, order);
}

/// (1/(n+1)) ∫⟨X, ν⟩ dS summed over the given patches.
template <int N>
double oriented_volume(std::span<const ParametricPatch<N>> patches, int order = num::kDefaultOrder)
{
    std::vector<double> parts;
    for (const auto& p : patches) {
        parts.push_back(integrate_over(
            p, [](const CurvatureData<N>& cd) { return cd.position.dot(cd.gauss); }, order));
    }
    return num::pairwise_sum(parts) / (N + 1);
}

template <int N>
double oriented_volume(const ParametricPatch<N>& patch, int order = num::kDefaultOrder)
{
    return oriented_volume<N>(std::span<const ParametricPatch<N>>(&patch, 1), order);
}

/// ∫ν dS summed over the given patches; vanishes for closed configurations.
template <int N>
Vec<N> gauss_map_integral(std::span<const ParametricPatch<N>> patches,
                          int order = num::kDefaultOrder)
{
    Vec<N> total = Vec<N>::Zero();
    for (const auto& p : patches) {
        total += integrate_over(p, [](const CurvatureData<N>& cd) { return cd.gauss; }, order);
    }
    return total;
}

/// a_ℓ = (−1)^ℓ ∫ σ_ℓ(k) dS.
template <int N>
double curvature_integral(const ParametricPatch<N>& patch, int ell, int order = num::kDefaultOrder)
{
    if (ell < 0 || ell > N) throw ParameterError("curvature_integral: ell must lie in 0..n");
    const double sign = (ell % 2 == 0) ? 1.0 : -1.0;
    return sign * integrate_over(
                      patch, [ell](const CurvatureData<N>& cd) { return cd.elementary(ell); },
                      order);
}

/// Area of the parallel hypersurface X + tν as a polynomial in t.
struct TubePolynomial {
    std::vector<double> a;

    double operator()(double t) const { return num::horner(a, t); }
    int degree() const { return static_cast<int>(a.size()) - 1; }
};

/// Oriented volume enclosed by the parallel family; dV/dt equals the tube
/// polynomial.
struct VolumePolynomial {
    std::vector<double> v;

    double operator()(double t) const { return num::horner(v, t); }
    double derivative(double t) const
    {
        double acc = 0.0;
        for (std::size_t k = v.size(); k-- > 1;) acc = acc * t + static_cast<double>(k) * v[k];
        return acc;
    }
};

template <int N>
TubePolynomial tube_polynomial(const ParametricPatch<N>& patch, int order = num::kDefaultOrder)
{
    const auto coeffs = integrate_over(
        patch,
        [](const CurvatureData<N>& cd) {
            Eigen::Matrix<double, N + 1, 1> c;
            for (int ell = 0; ell <= N; ++ell) {
                c[ell] = ((ell % 2 == 0) ? 1.0 : -1.0) * cd.elementary(ell);
            }
            return c;
        },
        order);
    TubePolynomial tp;
    tp.a.assign(coeffs.data(), coeffs.data() + N + 1);
    return tp;
}

inline VolumePolynomial volume_polynomial(const TubePolynomial& tp, double v0)
{
    VolumePolynomial vp;
    vp.v.reserve(tp.a.size() + 1);
    vp.v.push_back(v0);
    for (std::size_t ell = 0; ell < tp.a.size(); ++ell) {
        vp.v.push_back(tp.a[ell] / static_cast<double>(ell + 1));
    }
    return vp;
}

/// Largest |k| over the quadrature nodes; the parallel family is regular for
/// |t| < 1 / max|k|.
template <int N>
double max_abs_curvature(const ParametricPatch<N>& patch, int order = num::kDefaultOrder)
{
    double m = 0.0;
    for (const auto& node : num::tensor_nodes<N>(patch.box, order)) {
        const auto cd = curvature_at(patch, node.u);
        m = std::max(m, cd.principal_curvatures.cwiseAbs().maxCoeff());
    }
    return m;
}

/// The parallel patch X + tν on the same parameter box. The normal is
/// unchanged; first partials are exact (Weingarten), second partials come
/// from finite differences of the position.
template <int N>
ParametricPatch<N> parallel_patch(const ParametricPatch<N>& patch, double t,
                                  int order = num::kDefaultOrder)
{
    for (const auto& node : num::tensor_nodes<N>(patch.box, order)) {
        const auto cd = curvature_at(patch, node.u);
        for (int i = 0; i < N; ++i) {
            if (!(1.0 - cd.principal_curvatures[i] * t > 0.0)) {
                std::ostringstream os;
                os.precision(17);
                os << "parallel_patch: focal crossing at node "
                   << num::detail::describe_node<N>(node.u) << " (k = "
                   << cd.principal_curvatures[i] << ", t = " << t << ")";
                throw FocalCrossing(os.str());
            }
        }
    }
    if (t == 0.0) return patch;

    ParametricPatch<N> out;
    out.box = patch.box;
    out.orientation_sign = patch.orientation_sign;
    out.fd_step = patch.fd_step;
    out.name = patch.name + "+parallel";

    const ParametricPatch<N> base = patch;
    out.position = [base, t](const num::Param<N>& u) -> Vec<N> {
        const auto jet = base.jet(u);
        return jet.value + t * gauss_map<N>(jet, base.orientation_sign);
    };
    const num::PositionFn<N> pos = out.position;
    const double h = patch.fd_step;
    const num::Box<N> box = patch.box;
    out.analytic_jet = [base, t, pos, h, box](const num::Param<N>& u) {
        const auto bj = base.jet(u);
        const auto cd = curvature_from_jet<N>(bj, base.orientation_sign, &u);
        auto jet = num::fd_jet<N>(pos, u, h, &box);
        jet.value = bj.value + t * cd.gauss;
        const num::SymMatrix<N> weingarten = cd.second_form * cd.metric.inverse();
        for (int i = 0; i < N; ++i) {
            Vec<N> dnu = Vec<N>::Zero();
            for (int k = 0; k < N; ++k) dnu -= weingarten(i, k) * bj.d1[k];
            jet.d1[i] = bj.d1[i] + t * dnu;
        }
        return jet;
    };
    return out;
}

/// Rigidly translated copy X + offset.
template <int N>
ParametricPatch<N> translated(const ParametricPatch<N>& patch, const Vec<N>& offset)
{
    ParametricPatch<N> out = patch;
    const auto pos = patch.position;
    out.position = [pos, offset](const num::Param<N>& u) -> Vec<N> { return pos(u) + offset; };
    if (patch.analytic_jet) {
        const auto jf = patch.analytic_jet;
        out.analytic_jet = [jf, offset](const num::Param<N>& u) {
            auto j = jf(u);
            j.value += offset;
            return j;
        };
    }
    return out;
}

/// Scalar quantities gathered in one pass over the quadrature nodes.
template <int N>
struct SurfaceSurvey {
    double area = 0.0;
    double volume_term = 0.0;                 // (1/(n+1))∫⟨X,ν⟩ dS
    std::vector<double> signed_curvature;     // a_0..a_n
    double umbilic_integral = 0.0;            // ∫Σ_{i<j}(k_i−k_j)² dS
    double mean_curvature_mean = 0.0;         // node average of H
    double mean_curvature_deviation = 0.0;    // sample standard deviation of H
    double umbilic_deficit = 0.0;             // max over nodes of k_max − k_min
    double max_abs_curvature = 0.0;
};

template <int N>
SurfaceSurvey<N> survey(const ParametricPatch<N>& patch, int order = num::kDefaultOrder)
{
    constexpr int kLen = N + 4;
    using Row = Eigen::Matrix<double, kLen, 1>;
    std::vector<double> hs;
    SurfaceSurvey<N> s;
    const Row sums = num::integrate_box<N>(
        [&](const num::Param<N>& u) {
            const auto cd = curvature_at(patch, u);
            hs.push_back(cd.mean_curvature);
            s.umbilic_deficit = std::max(s.umbilic_deficit, cd.umbilic_spread());
            s.max_abs_curvature =
                std::max(s.max_abs_curvature, cd.principal_curvatures.cwiseAbs().maxCoeff());
            Row r;
            r[0] = 1.0;
            r[1] = cd.position.dot(cd.gauss) / (N + 1);
            for (int ell = 0; ell <= N; ++ell)
                r[2 + ell] = ((ell % 2 == 0) ? 1.0 : -1.0) * cd.elementary(ell);
            r[N + 3] = cd.umbilic_square();
            return Row(r * cd.area_density);
        },
        patch.box, order);
    s.area = sums[0];
    s.volume_term = sums[1];
    s.signed_curvature.assign(sums.data() + 2, sums.data() + 3 + N);
    s.umbilic_integral = sums[N + 3];

    const double mean = num::pairwise_sum(hs) / static_cast<double>(hs.size());
    std::vector<double> sq;
    sq.reserve(hs.size());
    for (double h : hs) sq.push_back((h - mean) * (h - mean));
    s.mean_curvature_mean = mean;
    s.mean_curvature_deviation =
        hs.size() > 1 ? std::sqrt(num::pairwise_sum(sq) / static_cast<double>(hs.size() - 1)) : 0.0;
    return s;
}

}  // namespace capillary_lab
