#pragma once

// Catalog and evaluation of theta-parametric densities g(x; theta): supports,
// parameter scores, cdf/quantile/sampling access, the discrete kernel psi,
// and numeric verdicts for Assumptions A, A' and B.

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "steinforge/errors.hpp"
#include "steinforge/expression.hpp"
#include "steinforge/numerics.hpp"
#include "steinforge/rng.hpp"
#include "steinforge/special.hpp"

namespace steinforge {

using Vec = std::vector<double>;

enum class Kind { continuous, discrete };

struct ParamSpace {
    std::vector<Interval> box;

    std::size_t dim() const { return box.size(); }
    bool interior(const Vec& theta) const {
        if (theta.size() != box.size()) return false;
        for (std::size_t i = 0; i < box.size(); ++i)
            if (!(theta[i] > box[i].lo && theta[i] < box[i].hi)) return false;
        return true;
    }
};

// A theta-parametric density with support access and optional analytic
// extras. All callables take the full parameter vector; discrete densities
// interpret x as an integer and return 0 at non-integral points.
struct ParametricFamily {
    Kind kind = Kind::continuous;
    std::string label;
    ParamSpace param_space;

    std::function<double(double, const Vec&)> density;
    std::function<Interval(const Vec&)> support;      // continuous
    std::function<IntRange(const Vec&)> int_support;  // discrete

    // Optional analytic pieces; numeric fallbacks are used when absent.
    std::function<Vec(double, const Vec&)> param_derivative;           // d/dtheta g
    std::function<double(double, const Vec&)> spatial_log_derivative;  // d/dx log g
    std::function<double(double, const Vec&)> cdf;
    std::function<double(double, const Vec&)> quantile;
    std::function<double(RngStream&, const Vec&)> sampler;

    bool in_support(double x, const Vec& theta) const {
        if (kind == Kind::continuous) return support(theta).contains(x);
        const long long k = std::llround(x);
        return std::fabs(x - k) < 1e-9 && int_support(theta).contains(k);
    }
};

inline double default_neighborhood_radius(double theta0_coord) {
    return std::max(0.1, 0.1 * std::fabs(theta0_coord));
}

// Equispaced parameter probes across the Assumption-A neighborhood, clipped
// to the interior of the parameter space (coordinate `coord` varies, the
// rest stay at theta0).
inline std::vector<Vec> theta_probes(const ParametricFamily& fam, const Vec& theta0,
                                     double radius, int count, std::size_t coord = 0) {
    const Interval box = fam.param_space.box.at(coord);
    const double margin = 1e-9 * (1.0 + std::fabs(theta0[coord]));
    double lo = theta0[coord] - radius, hi = theta0[coord] + radius;
    if (std::isfinite(box.lo)) lo = std::max(lo, box.lo + margin);
    if (std::isfinite(box.hi)) hi = std::min(hi, box.hi - margin);
    std::vector<Vec> probes;
    for (int i = 0; i < count; ++i) {
        Vec t = theta0;
        t[coord] = (count == 1) ? 0.5 * (lo + hi) : lo + (hi - lo) * i / double(count - 1);
        probes.push_back(std::move(t));
    }
    return probes;
}

// ---------------------------------------------------------------------------
// Scores and the discrete kernel psi
// ---------------------------------------------------------------------------

// Standardized score d/dtheta g / g at (x, theta). Uses the registered
// analytic derivative when present, a per-coordinate central difference
// otherwise.
inline Vec param_score(const ParametricFamily& fam, double x, const Vec& theta) {
    if (!fam.in_support(x, theta))
        throw SupportError(fam.label + ": param_score evaluated outside the support");
    const double g = fam.density(x, theta);
    if (!(g > 0.0))
        throw DegeneracyError(fam.label + ": density vanishes at an interior support point");
    if (fam.param_derivative) {
        Vec d = fam.param_derivative(x, theta);
        for (double& v : d) v /= g;
        return d;
    }
    Vec score(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        Vec t = theta;
        score[i] = central_diff([&](double u) {
            t[i] = u;
            return fam.density(x, t);
        }, theta[i]) / g;
    }
    return score;
}

// d/dx log g(x; theta) on the open support interior (numeric fallback).
inline double spatial_score(const ParametricFamily& fam, double x, const Vec& theta) {
    if (fam.spatial_log_derivative) return fam.spatial_log_derivative(x, theta);
    const double g = fam.density(x, theta);
    if (!(g > 0.0))
        throw DegeneracyError(fam.label + ": density vanishes where a spatial score is needed");
    return central_diff([&](double z) { return fam.density(z, theta); }, x) / g;
}

// Discrete kernel psi(x; theta) = d/du ( g(x;u)/g(0;u) ) |_{u=theta}, p = 1.
inline double psi(const ParametricFamily& fam, long long x, const Vec& theta) {
    if (fam.kind != Kind::discrete)
        throw ParameterError(fam.label + ": psi is defined for discrete families only");
    const double gx = fam.density(double(x), theta);
    const double g0 = fam.density(0.0, theta);
    if (!(g0 > 0.0))
        throw DegeneracyError(fam.label + ": g(0; theta) vanishes, psi undefined");
    if (gx == 0.0) return 0.0;  // ratio vanishes identically off the support
    if (fam.param_derivative) {
        const double sx = fam.param_derivative(double(x), theta)[0] / gx;
        const double s0 = fam.param_derivative(0.0, theta)[0] / g0;
        return (gx / g0) * (sx - s0);
    }
    Vec t = theta;
    return central_diff([&](double u) {
        t[0] = u;
        return fam.density(double(x), t) / fam.density(0.0, t);
    }, theta[0]);
}

// ---------------------------------------------------------------------------
// CDF / quantile / sampling with numeric fallbacks
// ---------------------------------------------------------------------------

inline double cdf_value(const ParametricFamily& fam, double x, const Vec& theta,
                        QuadOptions opt = {}) {
    if (fam.cdf) return fam.cdf(x, theta);
    if (fam.kind == Kind::continuous) {
        const Interval s = fam.support(theta);
        if (x <= s.lo) return 0.0;
        if (x >= s.hi) return 1.0;
        return integrate([&](double z) { return fam.density(z, theta); },
                         Interval(s.lo, x), opt).value;
    }
    const IntRange s = fam.int_support(theta);
    if (x < double(s.lo)) return 0.0;
    const long long top = std::min<long long>(s.hi, (long long)std::floor(x));
    return sum_series([&](long long j) { return fam.density(double(j), theta); },
                      IntRange(s.lo, top), {1e-13}).value;
}

// Continuous quantile by analytic inverse when registered, otherwise
// bisection on the cdf over the support.
inline double quantile_value(const ParametricFamily& fam, double u, const Vec& theta) {
    if (!(u > 0.0 && u < 1.0)) throw ParameterError("quantile_value: u must lie in (0,1)");
    if (fam.quantile) return fam.quantile(u, theta);
    if (fam.kind != Kind::continuous)
        throw CapabilityError(fam.label + ": no quantile for discrete family");
    const Interval s = fam.support(theta);
    double lo = s.lo, hi = s.hi;
    if (!std::isfinite(lo)) {
        lo = std::isfinite(hi) ? hi - 1.0 : -1.0;
        while (cdf_value(fam, lo, theta) > u) lo = lo * 2.0 - 1.0;
    }
    if (!std::isfinite(hi)) {
        hi = std::isfinite(s.lo) ? s.lo + 1.0 : 1.0;
        while (cdf_value(fam, hi, theta) < u) hi = hi * 2.0 + 1.0;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-13 * (1.0 + std::fabs(lo) + std::fabs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (cdf_value(fam, mid, theta) < u ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// One draw from g(.; theta). Inverse-cdf for continuous families, a cdf walk
// for discrete ones, unless the family registers its own sampler.
inline double sample(const ParametricFamily& fam, RngStream& rng, const Vec& theta) {
    if (fam.sampler) return fam.sampler(rng, theta);
    if (fam.kind == Kind::continuous) {
        if (fam.quantile || fam.cdf) return quantile_value(fam, rng.next_uniform(), theta);
        throw CapabilityError(fam.label + ": no sampler or cdf registered");
    }
    const IntRange s = fam.int_support(theta);
    const double u = rng.next_uniform();
    double acc = 0.0;
    for (long long j = s.lo;; ++j) {
        acc += fam.density(double(j), theta);
        if (u <= acc || j >= s.hi) return double(j);
        if (j - s.lo > 100'000'000)
            throw CapabilityError(fam.label + ": cdf walk failed to terminate");
    }
}

// ---------------------------------------------------------------------------
// Assumption checks (probe-grid semidecisions, never proofs)
// ---------------------------------------------------------------------------

enum class Assumption { A, APrime, B };
enum class Verdict { pass, fail, inconclusive };

struct AssumptionReport {
    Assumption assumption = Assumption::A;
    Verdict verdict = Verdict::inconclusive;
    std::vector<std::pair<double, Vec>> witness_grid;  // (x, theta) probes
    double max_violation = 0.0;
    std::string detail;
};

struct ProbeSpec {
    int theta_probes = 9;
    int x_probes = 512;
    int event_probes = 5;
};

namespace detail {

// Spread points over the support of g(.; theta0) for event probing.
inline std::vector<double> support_probe_points(const ParametricFamily& fam,
                                                const Vec& theta0, int n) {
    std::vector<double> pts;
    if (fam.kind == Kind::discrete) {
        const IntRange s = fam.int_support(theta0);
        const long long top = s.unbounded() ? s.lo + 20 : std::min(s.hi, s.lo + 20);
        for (long long j = s.lo; j <= top && int(pts.size()) < n; j += std::max<long long>(1, (top - s.lo) / n))
            pts.push_back(double(j));
        return pts;
    }
    const Interval s = fam.support(theta0);
    if (s.bounded()) {
        for (int i = 1; i <= n; ++i) pts.push_back(s.lo + s.width() * i / double(n + 1));
        return pts;
    }
    for (int i = 1; i <= n; ++i) pts.push_back(quantile_value(fam, i / double(n + 1), theta0));
    return pts;
}

// Scan toward each finite support endpoint looking for an unbounded density;
// families like the arcsine blow up there and fail Assumption A once the
// endpoint moves with theta.
inline bool density_blows_up(const ParametricFamily& fam, const Vec& theta,
                             double* where, double* magnitude) {
    const Interval s = fam.support(theta);
    const double w = s.bounded() ? s.width() : 1.0;
    for (int side = 0; side < 2; ++side) {
        const double c = side == 0 ? s.lo : s.hi;
        if (!std::isfinite(c)) continue;
        const double dir = side == 0 ? 1.0 : -1.0;
        double prev = 0.0;
        int growing = 0;
        for (int k = 3; k <= 45; ++k) {
            const double x = c + dir * w * std::ldexp(1.0, -k);
            const double g = fam.density(x, theta);
            if (g > 1e12) {
                *where = x;
                *magnitude = g;
                return true;
            }
            growing = (g > prev) ? growing + 1 : 0;
            prev = g;
        }
        (void)growing;
    }
    return false;
}

} // namespace detail

// Numeric verdict for Assumption A / A' / B in a neighborhood of theta0.
inline AssumptionReport check_assumption(const ParametricFamily& fam, Assumption which,
                                         const Vec& theta0, double radius = -1.0,
                                         ProbeSpec spec = {}) {
    if (!fam.param_space.interior(theta0))
        throw ParameterError(fam.label + ": theta0 must be interior to the parameter space");
    if (radius <= 0.0) radius = default_neighborhood_radius(theta0[0]);

    AssumptionReport rep;
    rep.assumption = which;
    const auto probes = theta_probes(fam, theta0, radius, spec.theta_probes);

    if (which == Assumption::A) {
        if (fam.kind == Kind::continuous) {
            for (const Vec& t : probes) {
                double where = 0.0, mag = 0.0;
                if (detail::density_blows_up(fam, t, &where, &mag)) {
                    rep.verdict = Verdict::fail;
                    rep.max_violation = mag;
                    rep.witness_grid.push_back({where, t});
                    rep.detail = "density unbounded near a support endpoint";
                    return rep;
                }
            }
            // Envelope h(x) = max over probes of g(x; theta); must integrate.
            double lo = kInf, hi = -kInf;
            for (const Vec& t : probes) {
                const Interval s = fam.support(t);
                lo = std::min(lo, s.lo);
                hi = std::max(hi, s.hi);
            }
            auto envelope = [&](double x) {
                double m = 0.0;
                for (const Vec& t : probes) m = std::max(m, fam.density(x, t));
                return m;
            };
            try {
                integrate(envelope, Interval(lo, hi), {1e-6, 1e-6, 2048});
                rep.verdict = Verdict::pass;
            } catch (const DivergenceError& e) {
                rep.verdict = (e.reason == DivergenceError::Reason::unbounded)
                                  ? Verdict::fail
                                  : Verdict::inconclusive;
                rep.max_violation = e.partial.abs_error_estimate;
                rep.detail = e.what();
            }
        } else {
            // Masses are bounded by 1; check the probe envelope is summable.
            const IntRange s = fam.int_support(theta0);
            auto envelope = [&](long long j) {
                double m = 0.0;
                for (const Vec& t : probes) m = std::max(m, fam.density(double(j), t));
                return m;
            };
            try {
                sum_series(envelope, s, {1e-8, 200'000});
                rep.verdict = Verdict::pass;
            } catch (const DivergenceError& e) {
                rep.verdict = Verdict::inconclusive;
                rep.detail = e.what();
            }
        }
        for (const Vec& t : probes) rep.witness_grid.push_back({theta0[0], t});
        return rep;
    }

    if (which == Assumption::B) {
        if (fam.kind != Kind::continuous)
            throw ParameterError("Assumption B applies to continuous families");
        const Interval s0 = fam.support(theta0);
        const auto qs = detail::support_probe_points(fam, theta0, spec.event_probes);
        for (double q : qs) {
            const double pa = cdf_value(fam, q, theta0);
            auto inner_abs = [&](double x) {
                // |int_{x0}^{x} l_A g| with A = (-inf, q], x0 = lower endpoint
                const double F = cdf_value(fam, std::min(x, q), theta0) - pa * cdf_value(fam, x, theta0);
                return std::fabs(F);
            };
            try {
                integrate(inner_abs, s0, {1e-5, 1e-5, 2048}, {q});
            } catch (const DivergenceError& e) {
                rep.verdict = (e.reason == DivergenceError::Reason::unbounded)
                                  ? Verdict::fail
                                  : Verdict::inconclusive;
                rep.witness_grid.push_back({q, theta0});
                rep.detail = e.what();
                return rep;
            }
            rep.witness_grid.push_back({q, theta0});
        }
        rep.verdict = Verdict::pass;
        return rep;
    }

    // Assumption A': forward-difference bound of the discrete corollary.
    if (fam.kind != Kind::discrete)
        throw ParameterError("Assumption A' applies to discrete families");
    const IntRange s = fam.int_support(theta0);
    const auto aprobes = theta_probes(fam, theta0, radius, std::min(spec.theta_probes, 5));
    std::vector<std::vector<long long>> events;
    for (long long top : {0LL, 1LL, 4LL, 9LL}) {
        std::vector<long long> ev;
        for (long long j = s.lo; j <= std::min<long long>(top, s.hi); ++j) ev.push_back(j);
        events.push_back(std::move(ev));
    }
    for (const Vec& t : aprobes) {
        for (const auto& ev : events) {
            double pa = 0.0;
            for (long long j : ev) pa += fam.density(double(j), theta0);
            auto inside = [&](long long x) -> double {
                if (x <= s.lo) return 0.0;
                double S = 0.0;
                for (long long j = s.lo; j < x; ++j) {
                    const bool in_a = std::find(ev.begin(), ev.end(), j) != ev.end();
                    S += ((in_a ? 1.0 : 0.0) - pa) * fam.density(double(j), theta0);
                }
                const double p0 = psi(fam, x, theta0);
                if (p0 == 0.0) {
                    const double pt = psi(fam, x, t);
                    if (pt == 0.0 || S == 0.0) return 0.0;
                    return kInf;
                }
                return psi(fam, x, t) / p0 * S;
            };
            try {
                const auto r = sum_series([&](long long x) { return std::fabs(forward_diff_int(inside, x)); },
                                          s, {1e-6, 50'000});
                rep.max_violation = std::max(rep.max_violation, 0.0 * r.value);
            } catch (const DivergenceError& e) {
                rep.verdict = Verdict::inconclusive;
                rep.witness_grid.push_back({double(ev.size()), t});
                rep.detail = e.what();
                return rep;
            }
            if (!std::isfinite(rep.max_violation)) {
                rep.verdict = Verdict::fail;
                rep.witness_grid.push_back({double(ev.size()), t});
                return rep;
            }
        }
        rep.witness_grid.push_back({theta0[0], t});
    }
    rep.verdict = Verdict::pass;
    return rep;
}

// ---------------------------------------------------------------------------
// Builtin catalog
// ---------------------------------------------------------------------------

struct CatalogEntry {
    std::string name;
    Vec default_params;
    Vec default_theta0;
    std::string default_flavor;  // location | scale | discrete | named
    std::string printed_form;    // plain-text closed form, for reports
    std::function<ParametricFamily(const Vec&)> make;
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw ParameterError(msg);
}

inline ParametricFamily make_gaussian_loc(const Vec& params) {
    const double sigma = params.empty() ? 1.0 : params[0];
    require(sigma > 0.0, "gaussian_loc: sigma must be > 0");
    ParametricFamily f;
    f.kind = Kind::continuous;
    f.label = "gaussian_loc";
    f.param_space.box = {Interval::whole_line()};
    f.density = [sigma](double x, const Vec& th) {
        return norm_pdf((x - th[0]) / sigma) / sigma;
    };
    f.support = [](const Vec&) { return Interval::whole_line(); };
    f.param_derivative = [f, sigma](double x, const Vec& th) {
        return Vec{f.density(x, th) * (x - th[0]) / (sigma * sigma)};
    };
    f.spatial_log_derivative = [sigma](double x, const Vec& th) {
        return -(x - th[0]) / (sigma * sigma);
    };
    f.cdf = [sigma](double x, const Vec& th) { return norm_cdf((x - th[0]) / sigma); };
    f.quantile = [sigma](double u, const Vec& th) { return th[0] + sigma * norm_quantile(u); };
    return f;
}

inline ParametricFamily make_gaussian_scale(const Vec&) {
    // sigma-parametric scale family sigma * g0(sigma x) with g0 standard normal
    ParametricFamily f;
    f.kind = Kind::continuous;
    f.label = "gaussian_scale";
    f.param_space.box = {Interval(0.0, kInf)};
    f.density = [](double x, const Vec& th) { return th[0] * norm_pdf(th[0] * x); };
    f.support = [](const Vec&) { return Interval::whole_line(); };
    f.param_derivative = [f](double x, const Vec& th) {
        return Vec{f.density(x, th) * (1.0 / th[0] - th[0] * x * x)};
    };
    f.spatial_log_derivative = [](double x, const Vec& th) { return -th[0] * th[0] * x; };
    f.cdf = [](double x, const Vec& th) { return norm_cdf(th[0] * x); };
    f.quantile = [](double u, const Vec& th) { return norm_quantile(u) / th[0]; };
    return f;
}

inline ParametricFamily make_exponential_loc(const Vec& params) {
    const double lambda = params.empty() ? 1.0 : params[0];
    require(lambda > 0.0, "exponential_loc: lambda must be > 0");
    ParametricFamily f;
    f.kind = Kind::continuous;
    f.label = "exponential_loc";
    f.param_space.box = {Interval::whole_line()};
    f.density = [lambda](double x, const Vec& th) {
        return x >= th[0] ? lambda * std::exp(-lambda * (x - th[0])) : 0.0;
    };
    f.support = [](const Vec& th) { return Interval(th[0], kInf); };
    f.param_derivative = [f, lambda](double x, const Vec& th) {
        return Vec{f.density(x, th) * lambda};
    };
    f.spatial_log_derivative = [lambda](double, const Vec&) { return -lambda; };
    f.cdf = [lambda](double x, const Vec& th) {
        return x >= th[0] ? -std::expm1(-lambda * (x - th[0])) : 0.0;
    };
    f.quantile = [lambda](double u, const Vec& th) { return th[0] - std::log1p(-u) / lambda; };
    return f;
}

inline ParametricFamily make_exponential_scale(const Vec&) {
    // sigma * g0(sigma x) with g0(x) = e^{-x} on x >= 0, i.e. rate sigma
    ParametricFamily f;
    f.kind = Kind::continuous;
    f.label = "exponential_scale";
    f.param_space.box = {Interval(0.0, kInf)};
    f.density = [](double x, const Vec& th) {
        return x >= 0.0 ? th[0] * std::exp(-th[0] * x) : 0.0;
    };
    f.support = [](const Vec&) { return Interval(0.0, kInf); };
    f.param_derivative = [f](double x, const Vec& th) {
        return Vec{f.density(x, th) * (1.0 / th[0] - x)};
    };
    f.spatial_log_derivative = [](double, const Vec& th) { return -th[0]; };
    f.cdf = [](double x, const Vec& th) { return x >= 0.0 ? -std::expm1(-th[0] * x) : 0.0; };
    f.quantile = [](double u, const Vec& th) { return -std::log1p(-u) / th[0]; };
    return f;
}

inline ParametricFamily make_uniform_a(const Vec& params) {
    const double b = params.empty() ? 1.0 : params[0];
    ParametricFamily f;
    f.kind = Kind::continuous;
    f.label = "uniform_a";
    f.param_space.box = {Interval(-kInf, b)};
    f.density = [b](double x, const Vec& th) {
        require(th[0] < b, "uniform_a: requires a < b");
        return (x >= th[0] && x <= b) ? 1.0 / (b - th[0]) : 0.0;
    };
    f.support = [b](const Vec& th) {
        require(th[0] < b, "uniform_a: requires a < b");
        return Interval(th[0], b);
    };
    f.param_derivative = [b](double x, const Vec& th) {
        return Vec{(x >= th[0] && x <= b) ? 1.0 / ((b - th[0]) * (b - th[0])) : 0.0};
    };
    f.spatial_log_derivative = [](double, const Vec&) { return 0.0; };
    f.cdf = [b](double x, const Vec& th) {
        if (x <= th[0]) return 0.0;
        if (x >= b) return 1.0;
        return (x - th[0]) / (b - th[0]);
    };
    f.quantile = [b](double u, const Vec& th) { return th[0] + u * (b - th[0]); };
    return f;
}

inline ParametricFamily make_uniform_loc(const Vec& params) {
    const double a = params.size() > 0 ? params[0] : 0.0;
    const double b = params.size() > 1 ? params[1] : 1.0;
    require(a < b, "uniform_loc: requires a < b");
    ParametricFamily f;
    f.kind = Kind::continuous;
    f.label = "uniform_loc";
    f.param_space.box = {Interval::whole_line()};
    f.density = [a, b](double x, const Vec& th) {
        return (x >= a + th[0] && x <= b + th[0]) ? 1.0 / (b - a) : 0.0;
    };
    f.support = [a, b](const Vec& th) { return Interval(a + th[0], b + th[0]); };
    f.param_derivative = [](double, const Vec&) { return Vec{0.0}; };
    f.spatial_log_derivative = [](double, const Vec&) { return 0.0; };
    f.cdf = [a, b](double x, const Vec& th) {
        const double z = (x - a - th[0]) / (b - a);
        return std::clamp(z, 0.0, 1.0);
    };
    f.quantile = [a, b](double u, const Vec& th) { return a + th[0] + u * (b - a); };
    return f;
}

inline ParametricFamily make_semicircle_loc(const Vec& params) {
    const double sigma = params.empty() ? 2.0 : params[0];
    require(sigma > 0.0, "semicircle_loc: sigma must be > 0");
    ParametricFamily f;
    f.kind = Kind::continuous;
    f.label = "semicircle_loc";
    f.param_space.box = {Interval::whole_line()};
    const double norm = 2.0 / (3.14159265358979323846 * sigma * sigma);
    f.density = [sigma, norm](double x, const Vec& th) {
        const double z = x - th[0];
        const double d = sigma * sigma - z * z;
        return d > 0.0 ? norm * std::sqrt(d) : 0.0;
    };
    f.support = [sigma](const Vec& th) { return Interval(th[0] - sigma, th[0] + sigma); };
    f.param_derivative = [f, sigma](double x, const Vec& th) {
        const double z = x - th[0];
        const double d = sigma * sigma - z * z;
        return Vec{d > 0.0 ? f.density(x, th) * z / d : 0.0};
    };
    f.spatial_log_derivative = [sigma](double x, const Vec& th) {
        const double z = x - th[0];
        return -z / (sigma * sigma - z * z);
    };
    f.cdf = [sigma](double x, const Vec& th) {
        const double z = std::clamp(x - th[0], -sigma, sigma);
        const double pi = 3.14159265358979323846;
        return 0.5 + z * std::sqrt(sigma * sigma - z * z) / (pi * sigma * sigma) +
               std::asin(z / sigma) / pi;
    };
    return f;
}

inline ParametricFamily make_student_nu(const Vec&) {
    ParametricFamily f;
    f.kind = Kind::continuous;
    f.label = "student_nu";
    f.param_space.box = {Interval(2.0, kInf)};  // nu > 2
    f.density = [](double x, const Vec& th) {
        const double nu = th[0];
        require(nu > 2.0, "student_nu: requires nu > 2");
        const double logc = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                            0.5 * std::log(nu * 3.14159265358979323846);
        return std::exp(logc - 0.5 * (nu + 1.0) * std::log1p(x * x / nu));
    };
    f.support = [](const Vec&) { return Interval::whole_line(); };
    f.spatial_log_derivative = [](double x, const Vec& th) {
        return -(th[0] + 1.0) * x / (th[0] + x * x);
    };
    f.cdf = [](double x, const Vec& th) { return student_cdf(x, th[0]); };
    return f;
}

inline ParametricFamily make_poisson_lambda(const Vec&) {
    ParametricFamily f;
    f.kind = Kind::discrete;
    f.label = "poisson_lambda";
    f.param_space.box = {Interval(0.0, kInf)};
    f.density = [](double x, const Vec& th) {
        const long long k = std::llround(x);
        if (std::fabs(x - k) > 1e-9 || k < 0) return 0.0;
        return std::exp(-th[0] + k * std::log(th[0]) - std::lgamma(double(k) + 1.0));
    };
    f.int_support = [](const Vec&) { return IntRange(0, IntRange::inf); };
    f.param_derivative = [f](double x, const Vec& th) {
        const long long k = std::llround(x);
        if (std::fabs(x - k) > 1e-9 || k < 0) return Vec{0.0};
        return Vec{f.density(x, th) * (double(k) / th[0] - 1.0)};
    };
    f.sampler = [f](RngStream& rng, const Vec& th) {
        const double u = rng.next_uniform();
        double acc = 0.0;
        for (long long j = 0;; ++j) {
            acc += f.density(double(j), th);
            if (u <= acc || j > 10'000'000) return double(j);
        }
    };
    return f;
}

inline ParametricFamily make_geometric_p(const Vec&) {
    ParametricFamily f;
    f.kind = Kind::discrete;
    f.label = "geometric_p";
    f.param_space.box = {Interval(0.0, 1.0)};
    f.density = [](double x, const Vec& th) {
        const long long k = std::llround(x);
        if (std::fabs(x - k) > 1e-9 || k < 0) return 0.0;
        require(th[0] > 0.0 && th[0] < 1.0, "geometric_p: requires p in (0,1)");
        return th[0] * std::pow(1.0 - th[0], double(k));
    };
    f.int_support = [](const Vec&) { return IntRange(0, IntRange::inf); };
    f.param_derivative = [f](double x, const Vec& th) {
        const long long k = std::llround(x);
        if (std::fabs(x - k) > 1e-9 || k < 0) return Vec{0.0};
        return Vec{f.density(x, th) * (1.0 / th[0] - double(k) / (1.0 - th[0]))};
    };
    f.sampler = [](RngStream& rng, const Vec& th) {
        // exact inverse cdf: P(X <= k) = 1 - (1-p)^{k+1}
        const double u = rng.next_uniform();
        return std::floor(std::log1p(-u) / std::log1p(-th[0]));
    };
    return f;
}

inline ParametricFamily make_binomial_p(const Vec& params) {
    const long long n = params.empty() ? 10 : std::llround(params[0]);
    require(n >= 1, "binomial_p: requires n >= 1");
    ParametricFamily f;
    f.kind = Kind::discrete;
    f.label = "binomial_p";
    f.param_space.box = {Interval(0.0, 1.0)};
    f.density = [n](double x, const Vec& th) {
        const long long k = std::llround(x);
        if (std::fabs(x - k) > 1e-9 || k < 0 || k > n) return 0.0;
        require(th[0] > 0.0 && th[0] < 1.0, "binomial_p: requires p in (0,1)");
        return std::exp(log_binomial(n, k) + k * std::log(th[0]) +
                        double(n - k) * std::log1p(-th[0]));
    };
    f.int_support = [n](const Vec&) { return IntRange(0, n); };
    f.param_derivative = [f, n](double x, const Vec& th) {
        const long long k = std::llround(x);
        if (std::fabs(x - k) > 1e-9 || k < 0 || k > n) return Vec{0.0};
        return Vec{f.density(x, th) *
                   (double(k) / th[0] - double(n - k) / (1.0 - th[0]))};
    };
    return f;
}

inline ParametricFamily make_multinomial_p1_slice(const Vec& params) {
    // Univariate p1-slice of the multinomial with the other coordinates held
    // fixed: a Binomial(nbar1, p1/pbar1) law in x1.
    const long long nbar = params.size() > 0 ? std::llround(params[0]) : 5;
    const double pbar = params.size() > 1 ? params[1] : 0.6;
    require(nbar >= 1, "multinomial_p1_slice: requires nbar1 >= 1");
    require(pbar > 0.0 && pbar <= 1.0, "multinomial_p1_slice: requires pbar1 in (0,1]");
    ParametricFamily f;
    f.kind = Kind::discrete;
    f.label = "multinomial_p1_slice";
    f.param_space.box = {Interval(0.0, pbar)};
    f.density = [nbar, pbar](double x, const Vec& th) {
        const long long k = std::llround(x);
        if (std::fabs(x - k) > 1e-9 || k < 0 || k > nbar) return 0.0;
        const double p1 = th[0];
        require(p1 > 0.0 && p1 < pbar, "multinomial_p1_slice: requires 0 < p1 < pbar1");
        return std::exp(log_binomial(nbar, k) + k * std::log(p1 / pbar) +
                        double(nbar - k) * std::log((pbar - p1) / pbar));
    };
    f.int_support = [nbar](const Vec&) { return IntRange(0, nbar); };
    f.param_derivative = [f, nbar, pbar](double x, const Vec& th) {
        const long long k = std::llround(x);
        if (std::fabs(x - k) > 1e-9 || k < 0 || k > nbar) return Vec{0.0};
        return Vec{f.density(x, th) *
                   (double(k) / th[0] - double(nbar - k) / (pbar - th[0]))};
    };
    return f;
}

inline ParametricFamily make_gaussian_multiv_coord(const Vec& params) {
    // Coordinatewise mu1-parametric reduction of a bivariate N(mu, Sigma)
    // with the second coordinate fixed: the conditional N(mu1 + m0, s^2).
    const double s11 = params.size() > 0 ? params[0] : 1.0;
    const double s12 = params.size() > 1 ? params[1] : 0.0;
    const double s22 = params.size() > 2 ? params[2] : 1.0;
    const double x2 = params.size() > 3 ? params[3] : 0.0;
    require(s11 > 0.0 && s22 > 0.0 && s11 * s22 - s12 * s12 > 0.0,
            "gaussian_multiv_coord: covariance must be symmetric positive definite");
    const double m0 = s12 / s22 * x2;
    const double s = std::sqrt(s11 - s12 * s12 / s22);
    ParametricFamily f;
    f.kind = Kind::continuous;
    f.label = "gaussian_multiv_coord";
    f.param_space.box = {Interval::whole_line()};
    f.density = [m0, s](double x, const Vec& th) {
        return norm_pdf((x - th[0] - m0) / s) / s;
    };
    f.support = [](const Vec&) { return Interval::whole_line(); };
    f.param_derivative = [f, m0, s](double x, const Vec& th) {
        return Vec{f.density(x, th) * (x - th[0] - m0) / (s * s)};
    };
    f.spatial_log_derivative = [m0, s](double x, const Vec& th) {
        return -(x - th[0] - m0) / (s * s);
    };
    f.cdf = [m0, s](double x, const Vec& th) { return norm_cdf((x - th[0] - m0) / s); };
    f.quantile = [m0, s](double u, const Vec& th) {
        return th[0] + m0 + s * norm_quantile(u);
    };
    return f;
}

} // namespace detail

inline const std::vector<CatalogEntry>& catalog() {
    static const std::vector<CatalogEntry> entries = {
        {"gaussian_loc", {1.0}, {0.0}, "location",
         "T f0(x) = -f0'(x - mu0) + ((x - mu0)/sigma^2) f0(x - mu0)",
         detail::make_gaussian_loc},
        {"gaussian_scale", {}, {1.0}, "scale",
         "T f0(x) = x f0'(sigma0 x) + (1/sigma0 - sigma0 x^2) f0(sigma0 x)",
         detail::make_gaussian_scale},
        {"exponential_loc", {1.0}, {0.0}, "location",
         "T f0(x) = -f0'(x - mu0) + lambda f0(x - mu0) on [mu0, inf), boundary -lambda f0(0+)",
         detail::make_exponential_loc},
        {"exponential_scale", {}, {1.0}, "scale",
         "T f0(x) = x f0'(sigma0 x) + (1/sigma0 - x) f0(sigma0 x) on (0, inf)",
         detail::make_exponential_scale},
        {"uniform_a", {1.0}, {0.0}, "named",
         "T f0(x) = 1/(b-a) [ ((x-b)/(b-a)) f0'((x-a)/(b-a)) + f0((x-a)/(b-a)) ] 1_[a,b](x) - f0(0)",
         detail::make_uniform_a},
        {"uniform_loc", {0.0, 1.0}, {0.0}, "location",
         "E[f0'(Z)] = (f0(b-) - f0(a+котор))/(b-a); operator -f0'(x - mu0) with boundary terms",
         detail::make_uniform_loc},
        {"semicircle_loc", {2.0}, {0.0}, "location",
         "E[(sigma^2 - X^2) f1'(X) - 3 X f1(X)] = 0 with f0(x) = f1(x)(sigma^2 - x^2)",
         detail::make_semicircle_loc},
        {"student_nu", {}, {3.0}, "named",
         "T f0(x) = xi(x;nu) (2 x^2 f0'(x^2/nu) - f0(x^2/nu) (x^2/(1 + x^2/nu) - nu)), "
         "xi(x;nu) = -Gamma(nu/2) / (2 nu^2 Gamma((nu+1)/2)) (1 + x^2/nu)^{nu/2}",
         detail::make_student_nu},
        {"poisson_lambda", {}, {1.0}, "discrete",
         "T f0(x) = e^{lambda0} (f0(x+1) - (x/lambda0) f0(x)) 1_N(x)",
         detail::make_poisson_lambda},
        {"geometric_p", {}, {0.5}, "discrete",
         "T f0(x) = -(1/p)((x+1) f0(x+1) - (x/(1-p)) f0(x)) 1_N(x)",
         detail::make_geometric_p},
        {"binomial_p", {10.0}, {0.3}, "discrete",
         "T f0(x) = (1-p)^{-n-2}((n-x) f0(x+1) - ((1-p)/p) x f0(x)) 1_[n](x)",
         detail::make_binomial_p},
        {"multinomial_p1_slice", {5.0, 0.6}, {0.2}, "discrete",
         "T f0(x) = xi(x;n)((nbar1 - x) f0(x+1) - ((pbar1 - p1)/p1) x f0(x)), "
         "xi(x;n) = pbar1/(pbar1 - p1)^{nbar1 + 2}",
         detail::make_multinomial_p1_slice},
        {"gaussian_multiv_coord", {1.0, 0.0, 1.0, 0.0}, {0.0}, "location",
         "T_j f0(x) = d/dy_j f0(y_j, X)|_{y_j = X_j} - (Sigma^{-1} X)_j f0(X)",
         detail::make_gaussian_multiv_coord},
    };
    return entries;
}

inline const CatalogEntry& catalog_entry(const std::string& name) {
    for (const auto& e : catalog())
        if (e.name == name) return e;
    throw CatalogError("unknown family '" + name + "'");
}

// Normalization sanity check on a small theta grid around theta0.
inline void validate_normalization(const ParametricFamily& fam, const Vec& theta0) {
    const double radius = default_neighborhood_radius(theta0[0]);
    for (const Vec& t : theta_probes(fam, theta0, radius, 5)) {
        double total;
        if (fam.kind == Kind::continuous)
            total = integrate([&](double x) { return fam.density(x, t); },
                              fam.support(t), {1e-10, 1e-10}).value;
        else
            total = sum_series([&](long long j) { return fam.density(double(j), t); },
                               fam.int_support(t), {1e-12}).value;
        const double tol = fam.kind == Kind::continuous ? 1e-8 : 1e-10;
        if (std::fabs(total - 1.0) > tol)
            throw ParameterError(fam.label + ": density does not normalize to 1 (got " +
                                 std::to_string(total) + ")");
    }
}

// Construct a builtin family by name. Parameter defaults come from the
// catalog; normalization is checked on a registration grid unless skipped.
inline ParametricFamily builtin(const std::string& name, const Vec& params = {},
                                bool check_normalization = true) {
    const CatalogEntry& entry = catalog_entry(name);
    ParametricFamily fam = entry.make(params.empty() ? entry.default_params : params);
    if (check_normalization) validate_normalization(fam, entry.default_theta0);
    return fam;
}

// ---------------------------------------------------------------------------
// Custom families
// ---------------------------------------------------------------------------

struct CustomFamilyDesc {
    std::string name;
    Kind kind = Kind::continuous;
    Vec params;
    std::string support_lo = "-inf";  // expression in theta and p0..p9, or "-inf"
    std::string support_hi = "inf";
    std::string density_expression;
    Vec theta0 = {0.0};
};

// Build a family from a descriptor. Scores fall back to central differences;
// the cdf falls back to quadrature/summation.
inline ParametricFamily make_custom_family(const CustomFamilyDesc& desc,
                                           bool check_normalization = true) {
    if (desc.density_expression.empty())
        throw InputError("custom family '" + desc.name + "': density_expression is required");
    auto dens = std::make_shared<Expression>(Expression::parse(desc.density_expression));
    auto bound = [&](const std::string& text, double inf_sign) -> std::function<double(const Vec&)> {
        if (text == "inf" || text == "+inf") return [](const Vec&) { return kInf; };
        if (text == "-inf") return [](const Vec&) { return -kInf; };
        auto ex = std::make_shared<Expression>(Expression::parse(text));
        (void)inf_sign;
        return [ex](const Vec& th) {
            return (*ex)(0.0, th[0], {});
        };
    };
    auto lo = bound(desc.support_lo, -1.0);
    auto hi = bound(desc.support_hi, 1.0);

    ParametricFamily f;
    f.kind = desc.kind;
    f.label = desc.name;
    f.param_space.box = {Interval::whole_line()};
    const Vec params = desc.params;
    if (desc.kind == Kind::continuous) {
        f.support = [lo, hi](const Vec& th) { return Interval(lo(th), hi(th)); };
        f.density = [dens, params, lo, hi](double x, const Vec& th) {
            if (x < lo(th) || x > hi(th)) return 0.0;
            return (*dens)(x, th[0], params);
        };
    } else {
        f.int_support = [lo, hi](const Vec& th) {
            const double h = hi(th);
            return IntRange(std::llround(lo(th)),
                            std::isfinite(h) ? std::llround(h) : IntRange::inf);
        };
        f.density = [dens, params, f](double x, const Vec& th) {
            const long long k = std::llround(x);
            if (std::fabs(x - k) > 1e-9 || !f.int_support(th).contains(k)) return 0.0;
            return (*dens)(double(k), th[0], params);
        };
    }
    if (check_normalization) validate_normalization(f, desc.theta0);
    return f;
}

namespace detail {

struct CustomRegistry {
    std::mutex mutex;
    std::map<std::string, CustomFamilyDesc> entries;
    static CustomRegistry& instance() {
        static CustomRegistry reg;
        return reg;
    }
};

} // namespace detail

// Registration is serialized; lookups copy the descriptor under the lock.
inline void register_custom_family(const CustomFamilyDesc& desc) {
    make_custom_family(desc);  // validates before publishing
    auto& reg = detail::CustomRegistry::instance();
    std::lock_guard<std::mutex> lock(reg.mutex);
    reg.entries[desc.name] = desc;
}

inline ParametricFamily family_by_name(const std::string& name, const Vec& params = {}) {
    for (const auto& e : catalog())
        if (e.name == name) return builtin(name, params);
    auto& reg = detail::CustomRegistry::instance();
    CustomFamilyDesc desc;
    {
        std::lock_guard<std::mutex> lock(reg.mutex);
        auto it = reg.entries.find(name);
        if (it == reg.entries.end()) throw CatalogError("unknown family '" + name + "'");
        desc = it->second;
    }
    if (!params.empty()) desc.params = params;
    return make_custom_family(desc, false);
}

} // namespace steinforge
