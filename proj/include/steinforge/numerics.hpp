#pragma once

// Deterministic integration, series summation and differencing engine.
// Every expectation, score and Stein-equation solution in the library is
// computed through the routines in this header.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "steinforge/errors.hpp"

namespace steinforge {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Interval on the extended real line; either endpoint may be infinite.
struct Interval {
    double lo = -kInf;
    double hi = kInf;

    Interval() = default;
    Interval(double l, double h) : lo(l), hi(h) {
        if (std::isnan(l) || std::isnan(h) || l > h)
            throw ParameterError("Interval: requires lo <= hi and no NaN endpoints");
    }

    bool contains(double x) const { return x >= lo && x <= hi; }
    bool interior(double x) const { return x > lo && x < hi; }
    bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
    double width() const { return hi - lo; }

    static Interval whole_line() { return {-kInf, kInf}; }
};

// Integer range {lo, ..., hi}; hi may be IntRange::inf for unbounded supports.
struct IntRange {
    static constexpr long long inf = std::numeric_limits<long long>::max();

    long long lo = 0;
    long long hi = inf;

    IntRange() = default;
    IntRange(long long l, long long h) : lo(l), hi(h) {
        if (l > h) throw ParameterError("IntRange: requires lo <= hi");
    }

    bool contains(long long x) const { return x >= lo && x <= hi; }
    bool unbounded() const { return hi == inf; }
};

// Result of a quadrature or summation, with an a-posteriori error estimate.
struct NumericReport {
    double value = 0.0;
    double abs_error_estimate = 0.0;
    long long evaluations = 0;
};

// Quadrature did not reach the requested tolerance within budget. Carries the
// partial estimate accumulated so far.
struct DivergenceError : Error {
    NumericReport partial;
    DivergenceError(const std::string& msg, NumericReport p)
        : Error(msg), partial(p) {}
};

struct QuadOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    int max_panels = 4096;
};

struct SeriesOptions {
    double abs_tol = 1e-10;
    long long max_terms = 2'000'000;
    // Optional monotone tail majorant: majorant(j) >= |sum_{k>j} f(k)|.
    std::function<double(long long)> tail_majorant;
};

namespace detail {

// Gauss-Kronrod 7-15 nodes and weights (QUADPACK dqk15 constants).
inline constexpr double kGkNode[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr double kKronrodW[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

inline constexpr double kGaussW[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct PanelResult {
    double value = 0.0;
    double error = 0.0;
};

// One G7-K15 panel over [a, b]. Throws on NaN; infinite integrand values are
// reported as divergence by the caller.
template <class F>
PanelResult gk15(F& f, double a, double b, bool& saw_inf) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);

    double fv[15];
    double resk = 0.0, resg = 0.0, resabs = 0.0;
    int idx = 0;
    for (int i = 0; i < 8; ++i) {
        const bool is_center = (i == 7);
        const double x1 = center - half * kGkNode[i];
        const double y1 = f(x1);
        if (std::isnan(y1)) throw EvaluationError("integrate: integrand returned NaN");
        if (std::isinf(y1)) saw_inf = true;
        fv[idx++] = y1;
        double pair = y1;
        if (!is_center) {
            const double x2 = center + half * kGkNode[i];
            const double y2 = f(x2);
            if (std::isnan(y2)) throw EvaluationError("integrate: integrand returned NaN");
            if (std::isinf(y2)) saw_inf = true;
            fv[idx++] = y2;
            pair += y2;
        }
        resk += kKronrodW[i] * pair;
        resabs += kKronrodW[i] * (std::fabs(y1) + (is_center ? 0.0 : std::fabs(fv[idx - 1])));
        if (is_center)
            resg += kGaussW[3] * y1;
        else if (i % 2 == 1)
            resg += kGaussW[i / 2] * pair;
    }

    const double mean = resk * 0.5;
    double resasc = 0.0;
    idx = 0;
    for (int i = 0; i < 8; ++i) {
        resasc += kKronrodW[i] * std::fabs(fv[idx++] - mean);
        if (i != 7) resasc += kKronrodW[i] * std::fabs(fv[idx++] - mean);
    }
    resasc *= half;
    resabs *= half;

    PanelResult r;
    r.value = resk * half;
    double err = std::fabs((resk - resg) * half);
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    const double round_floor = 50.0 * std::numeric_limits<double>::epsilon() * resabs;
    r.error = std::max(err, round_floor);
    return r;
}

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

// Adaptive bisection over a finite interval, worst-panel-first.
template <class F>
NumericReport adaptive(F&& f, double a, double b, const QuadOptions& opt,
                       const std::vector<double>& cuts) {
    NumericReport rep;
    if (a == b) {
        rep.evaluations = 1;
        return rep;
    }
    bool saw_inf = false;
    std::vector<Panel> heap;
    auto push_panel = [&](double lo, double hi) {
        PanelResult pr = gk15(f, lo, hi, saw_inf);
        heap.push_back({lo, hi, pr.value, pr.error});
        std::push_heap(heap.begin(), heap.end());
        rep.evaluations += 15;
    };

    double prev = a;
    for (double c : cuts)
        if (c > prev && c < b) {
            push_panel(prev, c);
            prev = c;
        }
    push_panel(prev, b);

    auto totals = [&]() {
        double v = 0.0, e = 0.0;
        for (const auto& p : heap) { v += p.value; e += p.error; }
        return std::pair<double, double>(v, e);
    };

    while (true) {
        auto [value, error] = totals();
        if (saw_inf)
            throw DivergenceError("integrate: integrand is unbounded on the domain",
                                  {value, error, rep.evaluations});
        if (error <= std::max(opt.abs_tol, opt.rel_tol * std::fabs(value))) {
            rep.value = value;
            rep.abs_error_estimate = error;
            return rep;
        }
        if (static_cast<int>(heap.size()) >= opt.max_panels)
            throw DivergenceError("integrate: tolerance not reached within panel budget",
                                  {value, error, rep.evaluations});
        std::pop_heap(heap.begin(), heap.end());
        Panel worst = heap.back();
        heap.pop_back();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b)
            throw DivergenceError("integrate: interval too small to subdivide further",
                                  {totals().first, totals().second, rep.evaluations});
        push_panel(worst.a, mid);
        push_panel(mid, worst.b);
    }
}

} // namespace detail

// Adaptive Gauss-Kronrod integration of f over a possibly unbounded domain.
// Unbounded directions are mapped onto a finite parameter interval by a
// rational change of variables before subdivision, so Gaussian, exponential
// and Student tails are handled uniformly. `cuts` marks known interior kinks
// (indicator edges, support endpoints) so each panel sees a smooth integrand.
template <class F>
NumericReport integrate(F&& f, Interval domain, QuadOptions opt = {},
                        const std::vector<double>& cuts = {}) {
    if (!(opt.abs_tol > 0.0) || !(opt.rel_tol > 0.0))
        throw ParameterError("integrate: tolerances must be positive");

    const bool lo_inf = std::isinf(domain.lo);
    const bool hi_inf = std::isinf(domain.hi);

    std::vector<double> sorted_cuts(cuts);
    std::sort(sorted_cuts.begin(), sorted_cuts.end());

    if (!lo_inf && !hi_inf)
        return detail::adaptive(f, domain.lo, domain.hi, opt, sorted_cuts);

    if (lo_inf && hi_inf) {
        // x = t / (1 - t^2) over t in (-1, 1)
        auto g = [&f](double t) {
            const double d = 1.0 - t * t;
            const double x = t / d;
            return f(x) * (1.0 + t * t) / (d * d);
        };
        std::vector<double> tc;
        for (double c : sorted_cuts) {
            // invert x = t/(1-t^2): t = (sqrt(1+4x^2) - 1) / (2x)
            tc.push_back(c == 0.0 ? 0.0 : (std::sqrt(1.0 + 4.0 * c * c) - 1.0) / (2.0 * c));
        }
        return detail::adaptive(g, -1.0, 1.0, opt, tc);
    }

    if (hi_inf) {
        // x = lo + t / (1 - t) over t in [0, 1)
        const double a = domain.lo;
        auto g = [&f, a](double t) {
            const double d = 1.0 - t;
            return f(a + t / d) / (d * d);
        };
        std::vector<double> tc;
        for (double c : sorted_cuts)
            if (c > a) tc.push_back((c - a) / (1.0 + (c - a)));
        return detail::adaptive(g, 0.0, 1.0, opt, tc);
    }

    // lo == -inf: x = hi - t / (1 - t)
    const double b = domain.hi;
    auto g = [&f, b](double t) {
        const double d = 1.0 - t;
        return f(b - t / d) / (d * d);
    };
    std::vector<double> tc;
    for (double c : sorted_cuts)
        if (c < b) tc.push_back((b - c) / (1.0 + (b - c)));
    return detail::adaptive(g, 0.0, 1.0, opt, tc);
}

// Truncated summation of f over an integer range. Finite ranges are summed
// exactly (compensated); infinite ranges stop once a monotone tail majorant
// drops below abs_tol/10. Default majorant: geometric-ratio heuristic,
// activated only after the terms have been decreasing for a few steps.
template <class F>
NumericReport sum_series(F&& f, IntRange range, SeriesOptions opt = {}) {
    if (!(opt.abs_tol > 0.0))
        throw ParameterError("sum_series: abs_tol must be positive");

    NumericReport rep;
    double sum = 0.0, comp = 0.0;
    auto add = [&](double term) {
        const double y = term - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    };

    if (!range.unbounded()) {
        for (long long j = range.lo; j <= range.hi; ++j) {
            const double term = f(j);
            if (std::isnan(term)) throw EvaluationError("sum_series: term is NaN");
            add(term);
            ++rep.evaluations;
        }
        rep.value = sum;
        rep.abs_error_estimate =
            std::fabs(sum) * 4.0 * std::numeric_limits<double>::epsilon() * double(rep.evaluations + 1);
        return rep;
    }

    const double target = opt.abs_tol / 10.0;
    double prev_abs = kInf;
    int decreasing_run = 0;
    for (long long j = range.lo; j - range.lo < opt.max_terms; ++j) {
        const double term = f(j);
        if (std::isnan(term)) throw EvaluationError("sum_series: term is NaN");
        add(term);
        ++rep.evaluations;

        const double a = std::fabs(term);
        if (opt.tail_majorant) {
            const double tail = opt.tail_majorant(j);
            if (tail < target) {
                rep.value = sum;
                rep.abs_error_estimate = tail;
                return rep;
            }
        } else {
            decreasing_run = (a < prev_abs || (a == 0.0 && prev_abs == 0.0)) ? decreasing_run + 1 : 0;
            if (decreasing_run >= 5 && a < target) {
                const double r = (prev_abs > 0.0) ? a / prev_abs : 0.0;
                if (r < 0.999) {
                    const double tail = a * r / (1.0 - r);
                    if (tail < target) {
                        rep.value = sum;
                        rep.abs_error_estimate = tail + a * 1e-2;
                        return rep;
                    }
                }
            }
            prev_abs = a;
        }
    }
    throw DivergenceError("sum_series: tail bound not reached within term budget",
                          {sum, kInf, rep.evaluations});
}

// Symmetric difference quotient with the standard truncation/rounding
// balanced step h = cbrt(eps) * max(1, |x|, scale).
template <class F>
double central_diff(F&& f, double x, double scale = 1.0) {
    const double h = std::cbrt(std::numeric_limits<double>::epsilon()) *
                     std::max({1.0, std::fabs(x), scale});
    const double hi = f(x + h);
    const double lo = f(x - h);
    if (std::isnan(hi) || std::isnan(lo))
        throw EvaluationError("central_diff: function returned NaN");
    return (hi - lo) / (2.0 * h);
}

// Five-point stencil with caller-chosen step; used where the evaluated
// function is itself an antiderivative known to high absolute accuracy.
template <class F>
double central_diff5(F&& f, double x, double h) {
    const double f1 = f(x - 2.0 * h), f2 = f(x - h), f3 = f(x + h), f4 = f(x + 2.0 * h);
    if (std::isnan(f1) || std::isnan(f2) || std::isnan(f3) || std::isnan(f4))
        throw EvaluationError("central_diff5: function returned NaN");
    return (f1 - 8.0 * f2 + 8.0 * f3 - f4) / (12.0 * h);
}

// Forward difference f(x+1) - f(x) on the integers.
template <class F>
double forward_diff_int(F&& f, long long x) {
    const double a = f(x), b = f(x + 1);
    if (std::isnan(a) || std::isnan(b))
        throw EvaluationError("forward_diff_int: function returned NaN");
    return b - a;
}

} // namespace steinforge
