#pragma once

// Deterministic numerical primitives shared by every other module:
// Gauss-Legendre tensor-product quadrature over parameter boxes, central
// finite-difference jets with one Richardson level, and small symmetric
// eigenproblems.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <sstream>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "capillary_lab/errors.hpp"

namespace capillary_lab::num {

inline constexpr int kDefaultOrder = 32;
inline constexpr double kDefaultStep = 1e-3;

template <int N>
using Param = Eigen::Matrix<double, N, 1>;

template <int N>
using Point = Eigen::Matrix<double, N + 1, 1>;

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    double width() const { return hi - lo; }
};

template <int N>
using Box = std::array<Interval, N>;

// ---------------------------------------------------------------------------
// Summation
// ---------------------------------------------------------------------------

namespace detail {

template <class T>
T zero_like(const T& sample)
{
    if constexpr (std::is_arithmetic_v<T>) {
        (void)sample;
        return T(0);
    } else {
        T z = sample;
        z.setZero();
        return z;
    }
}

template <class T>
T pairwise_sum_range(std::span<const T> xs)
{
    constexpr std::size_t kBlock = 8;
    if (xs.size() <= kBlock) {
        T acc = zero_like(xs.front());
        for (const auto& x : xs) acc += x;
        return acc;
    }
    const std::size_t half = xs.size() / 2;
    T left = pairwise_sum_range(xs.first(half));
    T right = pairwise_sum_range(xs.subspan(half));
    return left + right;
}

template <class T, class = void>
struct plain {
    using type = T;
};

template <class T>
struct plain<T, std::void_t<typename T::PlainObject>> {
    using type = typename T::PlainObject;
};

// Eigen expression templates collapse to their concrete matrix type.
template <class T>
using plain_t = typename plain<std::decay_t<T>>::type;

template <class T>
double magnitude(const T& x)
{
    if constexpr (std::is_arithmetic_v<T>) {
        return std::abs(static_cast<double>(x));
    } else {
        return x.template lpNorm<Eigen::Infinity>();
    }
}

template <class T>
bool all_finite(const T& x)
{
    if constexpr (std::is_arithmetic_v<T>) {
        return std::isfinite(x);
    } else {
        return x.allFinite();
    }
}

}  // namespace detail

/// Pairwise (cascade) sum with a fixed reduction tree, so the result depends
/// only on the sequence, never on how it was produced.
template <class T>
T pairwise_sum(std::span<const T> xs)
{
    if (xs.empty()) {
        if constexpr (std::is_arithmetic_v<T>) {
            return T(0);
        } else {
            throw ContractViolation("pairwise_sum: empty vector-valued sequence");
        }
    }
    return detail::pairwise_sum_range(xs);
}

inline double pairwise_sum(const std::vector<double>& xs)
{
    return pairwise_sum(std::span<const double>(xs));
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

struct QuadratureRule {
    int order = 0;
    std::vector<double> nodes;    // ascending, in [-1, 1]
    std::vector<double> weights;  // positive
};

/// Gauss-Legendre rule with `order` points, computed by Newton iteration on
/// the three-term Legendre recurrence.
inline QuadratureRule gauss_legendre(int order)
{
    if (order < 1) throw ParameterError("gauss_legendre: order must be positive");

    if (order == 1) return {1, {0.0}, {2.0}};

    QuadratureRule rule;
    rule.order = order;
    rule.nodes.assign(order, 0.0);
    rule.weights.assign(order, 0.0);

    const int m = (order + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Tricomi initial guess for the i-th largest root.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) <= 1e-16) break;
        }
        // Recompute the derivative at the converged root.
        {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[order - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[order - 1 - i] = w;
    }
    if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
    return rule;
}

namespace detail {

template <int N>
std::string describe_node(const Param<N>& u)
{
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (int i = 0; i < N; ++i) os << (i ? ", " : "") << u[i];
    os << ')';
    return os.str();
}

}  // namespace detail

template <int N>
struct TensorNode {
    Param<N> u;
    double weight = 0.0;
};

/// Nodes and weights of the tensor-product rule mapped onto `box`, in
/// row-major order (last axis fastest).
template <int N>
std::vector<TensorNode<N>> tensor_nodes(const Box<N>& box, int order = kDefaultOrder)
{
    if (order < 2) throw ParameterError("integrate_box: order must be at least 2");
    for (const auto& iv : box) {
        if (!(iv.hi > iv.lo) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi)) {
            throw ParameterError("integrate_box: degenerate parameter box");
        }
    }

    const QuadratureRule rule = gauss_legendre(order);
    std::size_t total = 1;
    for (int d = 0; d < N; ++d) total *= static_cast<std::size_t>(order);

    std::vector<TensorNode<N>> out;
    out.reserve(total);
    std::array<int, N> idx{};
    for (std::size_t flat = 0; flat < total; ++flat) {
        TensorNode<N> node;
        node.weight = 1.0;
        for (int d = 0; d < N; ++d) {
            const double half = 0.5 * box[d].width();
            node.u[d] = box[d].lo + half * (rule.nodes[idx[d]] + 1.0);
            node.weight *= half * rule.weights[idx[d]];
        }
        out.push_back(node);
        for (int d = N - 1; d >= 0; --d) {
            if (++idx[d] < order) break;
            idx[d] = 0;
        }
    }
    return out;
}

/// Tensor-product Gauss-Legendre estimate of the integral of `f` over `box`.
/// `f` may return a scalar or a fixed-size Eigen vector.
template <int N, class F>
auto integrate_box(F&& f, const Box<N>& box, int order = kDefaultOrder)
{
    using Result = detail::plain_t<std::invoke_result_t<F&, const Param<N>&>>;
    const auto nodes = tensor_nodes<N>(box, order);

    std::vector<Result> terms;
    terms.reserve(nodes.size());
    for (const auto& node : nodes) {
        Result val = f(node.u);
        if (!detail::all_finite(val)) {
            throw EvaluationError("integrate_box: non-finite integrand at node " +
                                  detail::describe_node<N>(node.u));
        }
        terms.push_back(Result(val * node.weight));
    }
    return pairwise_sum(std::span<const Result>(terms));
}

template <class T>
struct QuadratureEstimate {
    T value;
    double error = 0.0;
};

/// Integral plus an error estimate |Q(order) - Q(order/2)| with a rounding
/// floor proportional to the magnitude of the result.
template <int N, class F>
auto integrate_box_estimate(F&& f, const Box<N>& box, int order = kDefaultOrder)
{
    auto fine = integrate_box<N>(f, box, order);
    auto coarse = integrate_box<N>(f, box, std::max(2, order / 2));
    using Result = decltype(fine);
    QuadratureEstimate<Result> est{fine, 0.0};
    const double floor = 1e-13 * (1.0 + detail::magnitude(fine));
    est.error = detail::magnitude(Result(fine - coarse)) + floor;
    return est;
}

// ---------------------------------------------------------------------------
// Finite-difference jets
// ---------------------------------------------------------------------------

/// Position, first partials and second partials of an evaluator at a point.
/// The second partials are stored once per unordered index pair, so
/// `d2(i, j)` and `d2(j, i)` refer to the same object.
template <int N>
struct Jet {
    using Vec = Point<N>;
    static constexpr int kPairs = N * (N + 1) / 2;

    Vec value = Vec::Zero();
    std::array<Vec, N> d1{};
    std::array<Vec, kPairs> d2_packed{};
    double step = 0.0;       // 0 for analytic jets
    bool one_sided = false;  // a one-sided stencil was used on some axis

    static constexpr int pair_index(int i, int j)
    {
        if (i > j) std::swap(i, j);
        return i * N - i * (i - 1) / 2 + (j - i);
    }

    Vec& d2(int i, int j) { return d2_packed[pair_index(i, j)]; }
    const Vec& d2(int i, int j) const { return d2_packed[pair_index(i, j)]; }
};

template <int N>
using PositionFn = std::function<Point<N>(const Param<N>&)>;

namespace detail {

struct Stencil1D {
    std::vector<int> offsets;
    std::vector<double> first;   // multiply by 1/h
    std::vector<double> second;  // multiply by 1/h^2
};

inline Stencil1D central_stencil()
{
    return {{-1, 0, 1}, {-0.5, 0.0, 0.5}, {1.0, -2.0, 1.0}};
}

inline Stencil1D forward_stencil(int dir)
{
    Stencil1D s{{0, 1, 2, 3}, {-1.5, 2.0, -0.5, 0.0}, {2.0, -5.0, 4.0, -1.0}};
    if (dir < 0) {
        for (auto& o : s.offsets) o = -o;
        for (auto& w : s.first) w = -w;
    }
    return s;
}

template <int N>
Jet<N> raw_jet(const PositionFn<N>& X, const Param<N>& u, double h,
               const std::array<Stencil1D, N>& st)
{
    Jet<N> jet;
    jet.value = X(u);
    auto at = [&](int i, int oi, int j, int oj) {
        Param<N> p = u;
        p[i] += oi * h;
        p[j] += oj * h;
        return X(p);
    };
    for (int i = 0; i < N; ++i) {
        Point<N> d = Point<N>::Zero();
        Point<N> dd = Point<N>::Zero();
        const auto& s = st[i];
        for (std::size_t a = 0; a < s.offsets.size(); ++a) {
            if (s.first[a] == 0.0 && s.second[a] == 0.0) continue;
            const Point<N> x = s.offsets[a] == 0 ? jet.value : at(i, s.offsets[a], i, 0);
            d += s.first[a] * x;
            dd += s.second[a] * x;
        }
        jet.d1[i] = d / h;
        jet.d2(i, i) = dd / (h * h);
    }
    for (int i = 0; i < N; ++i) {
        for (int j = i + 1; j < N; ++j) {
            Point<N> acc = Point<N>::Zero();
            for (std::size_t a = 0; a < st[i].offsets.size(); ++a) {
                if (st[i].first[a] == 0.0) continue;
                for (std::size_t b = 0; b < st[j].offsets.size(); ++b) {
                    if (st[j].first[b] == 0.0) continue;
                    acc += st[i].first[a] * st[j].first[b] *
                           at(i, st[i].offsets[a], j, st[j].offsets[b]);
                }
            }
            jet.d2(i, j) = acc / (h * h);
        }
    }
    return jet;
}

}  // namespace detail

/// Finite-difference jet of `X` at `u` with step `h` and one Richardson level.
/// When `box` is given and `u` sits closer than 2h to a face, that axis uses
/// a one-sided second-order stencil pointing into the box and the jet is
/// flagged `one_sided`.
template <int N>
Jet<N> fd_jet(const PositionFn<N>& X, const Param<N>& u, double h = kDefaultStep,
              const Box<N>* box = nullptr)
{
    if (!(h > 0.0) || !std::isfinite(h)) throw ParameterError("fd_jet: step must be positive");

    std::array<detail::Stencil1D, N> st;
    bool one_sided = false;
    for (int i = 0; i < N; ++i) {
        st[i] = detail::central_stencil();
        if (box) {
            const double lo_room = u[i] - (*box)[i].lo;
            const double hi_room = (*box)[i].hi - u[i];
            if (lo_room < 2.0 * h || hi_room < 2.0 * h) {
                one_sided = true;
                st[i] = detail::forward_stencil(lo_room < hi_room ? +1 : -1);
            }
        }
    }

    const Jet<N> coarse = detail::raw_jet<N>(X, u, h, st);
    const Jet<N> fine = detail::raw_jet<N>(X, u, 0.5 * h, st);

    Jet<N> jet;
    jet.value = fine.value;
    jet.step = h;
    jet.one_sided = one_sided;
    for (int i = 0; i < N; ++i) jet.d1[i] = (4.0 * fine.d1[i] - coarse.d1[i]) / 3.0;
    for (int k = 0; k < Jet<N>::kPairs; ++k) {
        jet.d2_packed[k] = (4.0 * fine.d2_packed[k] - coarse.d2_packed[k]) / 3.0;
    }
    return jet;
}

// ---------------------------------------------------------------------------
// Small symmetric eigenproblems
// ---------------------------------------------------------------------------

template <int N>
using SymMatrix = Eigen::Matrix<double, N, N>;

/// Ascending eigenvalues of a symmetric matrix of size 1, 2 or 3.
template <int N>
Eigen::Matrix<double, N, 1> sym_eigen(const SymMatrix<N>& m)
{
    static_assert(N >= 1 && N <= 3, "sym_eigen supports n in {1,2,3}");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw ContractViolation("sym_eigen: input is not symmetric");
    }

    Eigen::Matrix<double, N, 1> ev;
    if constexpr (N == 1) {
        ev[0] = m(0, 0);
    } else if constexpr (N == 2) {
        const double a = m(0, 0);
        const double d = m(1, 1);
        const double b = 0.5 * (m(0, 1) + m(1, 0));
        const double mean = 0.5 * (a + d);
        const double rad = std::hypot(0.5 * (a - d), b);
        ev << mean - rad, mean + rad;
    } else {
        const SymMatrix<N> sym = 0.5 * (m + m.transpose());
        Eigen::SelfAdjointEigenSolver<SymMatrix<N>> solver(sym, Eigen::EigenvaluesOnly);
        ev = solver.eigenvalues();
    }
    std::sort(ev.data(), ev.data() + N);
    return ev;
}

}  // namespace capillary_lab::num

namespace capillary_lab::num {

/// Evaluates sum_k c[k] t^k by Horner's rule.
inline double horner(std::span<const double> coeffs, double t)
{
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * t + *it;
    return acc;
}

inline double binomial(int n, int k)
{
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace capillary_lab::num
