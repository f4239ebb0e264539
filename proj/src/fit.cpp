#include "warmmem/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "warmmem/errors.hpp"

namespace warmmem {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Unconstrained coordinate y ↔ bounded parameter x.
struct BoundMap {
    double lo, hi;

    bool has_lo() const { return std::isfinite(lo); }
    bool has_hi() const { return std::isfinite(hi); }

    double to_x(double y) const {
        if (has_lo() && has_hi()) return lo + (hi - lo) / (1.0 + std::exp(-y));
        if (has_lo()) return lo + std::exp(y);
        if (has_hi()) return hi - std::exp(y);
        return y;
    }

    double dx_dy(double y) const {
        if (has_lo() && has_hi()) {
            const double s = 1.0 / (1.0 + std::exp(-y));
            return (hi - lo) * s * (1.0 - s);
        }
        if (has_lo()) return std::exp(y);
        if (has_hi()) return -std::exp(y);
        return 1.0;
    }

    // Values on a bound are moved just inside, where the map is invertible.
    double to_y(double x) const {
        if (has_lo() && has_hi()) {
            const double s = std::clamp((x - lo) / (hi - lo), 1e-9, 1.0 - 1e-9);
            return std::log(s / (1.0 - s));
        }
        if (has_lo()) return std::log(std::max(x - lo, 1e-12 * std::max(1.0, std::abs(lo))));
        if (has_hi()) return std::log(std::max(hi - x, 1e-12 * std::max(1.0, std::abs(hi))));
        return x;
    }
};

Eigen::VectorXd evaluate(const FitProblem& p, const Eigen::VectorXd& x) {
    Eigen::VectorXd r = p.residuals(x);
    if (!r.allFinite()) throw FitError("fit diverged: non-finite residuals");
    return r;
}

Eigen::MatrixXd jacobian(const FitProblem& p, const Eigen::VectorXd& x, const Eigen::VectorXd& r0,
                         const std::vector<int>& free, const FitOptions& o) {
    Eigen::MatrixXd j(r0.size(), free.size());
    for (std::size_t c = 0; c < free.size(); ++c) {
        const int k = free[c];
        const double h = std::max(o.fd_relative_step * std::abs(x[k]), o.fd_absolute_floor);
        Eigen::VectorXd xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        if (xp[k] > p.upper[k]) {
            j.col(c) = (r0 - evaluate(p, xm)) / h;
        } else if (xm[k] < p.lower[k]) {
            j.col(c) = (evaluate(p, xp) - r0) / h;
        } else {
            j.col(c) = (evaluate(p, xp) - evaluate(p, xm)) / (2.0 * h);
        }
    }
    return j;
}

void validate_problem(const FitProblem& p) {
    const auto n = p.initial_guess.size();
    if (!p.residuals) throw DomainError("fit problem has no residual function");
    if (p.lower.size() != n || p.upper.size() != n) throw DomainError("bounds do not match the parameter count");
    if (!p.fixed.empty() && static_cast<Eigen::Index>(p.fixed.size()) != n)
        throw DomainError("fixed mask does not match the parameter count");
    if (!p.names.empty() && static_cast<Eigen::Index>(p.names.size()) != n)
        throw DomainError("names do not match the parameter count");
    for (Eigen::Index k = 0; k < n; ++k) {
        if (!(p.lower[k] < p.upper[k]) && !(p.fixed.size() && p.fixed[k]))
            throw DomainError("empty bound interval for parameter " + std::to_string(k));
        if (!(p.initial_guess[k] >= p.lower[k] && p.initial_guess[k] <= p.upper[k]))
            throw DomainError("initial guess outside the bounds for parameter " + std::to_string(k));
    }
}

}  // namespace

FitResult least_squares(const FitProblem& problem, const FitOptions& options) {
    validate_problem(problem);
    const Eigen::Index n = problem.initial_guess.size();

    FitResult res;
    for (Eigen::Index k = 0; k < n; ++k)
        res.names.push_back(problem.names.empty() ? "p" + std::to_string(k) : problem.names[k]);

    std::vector<int> free;
    for (Eigen::Index k = 0; k < n; ++k)
        if (problem.fixed.empty() || !problem.fixed[k]) free.push_back(static_cast<int>(k));

    std::vector<BoundMap> maps;
    for (Eigen::Index k = 0; k < n; ++k) maps.push_back({problem.lower[k], problem.upper[k]});

    Eigen::VectorXd x = problem.initial_guess;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    for (int k : free) {
        y[k] = maps[k].to_y(x[k]);
        x[k] = maps[k].to_x(y[k]);
    }

    Eigen::VectorXd r = evaluate(problem, x);
    if (r.size() < static_cast<Eigen::Index>(free.size()))
        throw DomainError("fewer residuals than free parameters");
    double ss = r.squaredNorm();
    res.ss_history.push_back(ss);

    double lambda = 0.0;  // first step is plain Gauss-Newton
    double nu = 2.0;
    bool degenerate = false;

    int iter = 0;
    while (true) {
        if (ss == 0.0) {
            res.converged = true;
            res.termination = "exact fit";
            break;
        }
        if (iter >= options.max_iterations) {
            res.termination = "iteration limit reached";
            break;
        }
        if (free.empty()) {
            res.termination = "no free parameters";
            break;
        }
        ++iter;

        Eigen::MatrixXd jx = jacobian(problem, x, r, free, options);
        // Parameters that do not influence the residuals cannot be determined.
        for (std::size_t c = free.size(); c-- > 0;) {
            if (jx.col(c).cwiseAbs().maxCoeff() == 0.0) {
                res.diagnostics.push_back("parameter '" + res.names[free[c]] +
                                          "' does not affect the residuals; it was held at its current value");
                degenerate = true;
                free.erase(free.begin() + c);
                const Eigen::Index cols = jx.cols();
                if (static_cast<Eigen::Index>(c) + 1 < cols)
                    jx.block(0, c, jx.rows(), cols - c - 1) = jx.rightCols(cols - c - 1).eval();
                jx.conservativeResize(Eigen::NoChange, cols - 1);
            }
        }
        if (free.empty()) {
            res.termination = "no identifiable parameters";
            break;
        }

        const Eigen::Index nf = static_cast<Eigen::Index>(free.size());
        Eigen::VectorXd scale(nf);
        for (Eigen::Index c = 0; c < nf; ++c) scale[c] = maps[free[c]].dx_dy(y[free[c]]);
        const Eigen::MatrixXd jy = jx * scale.asDiagonal();
        const Eigen::VectorXd g = jy.transpose() * r;
        if (g.cwiseAbs().maxCoeff() < options.gradient_tolerance) {
            res.converged = true;
            res.termination = "gradient below tolerance";
            break;
        }
        const Eigen::MatrixXd a = jy.transpose() * jy;
        Eigen::VectorXd d = a.diagonal();
        const double dmax = d.maxCoeff();
        for (Eigen::Index c = 0; c < nf; ++c) d[c] = std::max(d[c], 1e-12 * std::max(dmax, 1e-300));

        bool accepted = false;
        bool stalled = false;
        while (!accepted) {
            Eigen::VectorXd step;
            if (lambda == 0.0) {
                step = jy.completeOrthogonalDecomposition().solve(-r);
            } else {
                const Eigen::MatrixXd damped = a + lambda * Eigen::MatrixXd(d.asDiagonal());
                step = damped.ldlt().solve(-g);
            }
            Eigen::VectorXd y_new = y;
            Eigen::VectorXd x_new = x;
            for (Eigen::Index c = 0; c < nf; ++c) {
                const int k = free[c];
                y_new[k] += step[c];
                x_new[k] = maps[k].to_x(y_new[k]);
            }
            if (step.allFinite() && x_new != x) {
                const Eigen::VectorXd r_new = evaluate(problem, x_new);
                const double ss_new = r_new.squaredNorm();
                if (ss_new < ss) {
                    const double predicted = ss - (r + jy * step).squaredNorm();
                    const double rho = predicted > 0.0 ? (ss - ss_new) / predicted : 0.0;
                    const double rel = (ss - ss_new) / ss;
                    x = x_new;
                    y = y_new;
                    r = r_new;
                    ss = ss_new;
                    res.ss_history.push_back(ss);
                    lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
                    nu = 2.0;
                    accepted = true;
                    if (rel < options.rel_ss_tolerance) {
                        res.converged = true;
                        res.termination = "relative reduction below tolerance";
                    }
                    break;
                }
            }
            if (lambda == 0.0) {
                lambda = 1e-3 * dmax;
            } else {
                lambda *= nu;
                nu *= 2.0;
            }
            if (!(lambda < 1e30 * std::max(dmax, 1e-300))) {
                stalled = true;
                break;
            }
        }
        if (stalled) {
            res.converged = true;
            res.termination = "no step reduces the sum of squares";
            break;
        }
        if (res.converged) break;
    }

    if (degenerate) {
        res.converged = false;
        res.termination = "degenerate problem: " + res.termination;
    }

    res.parameters = x;
    res.residual_norm = ss;
    res.iterations = iter;
    res.covariance_estimate = Eigen::MatrixXd::Zero(n, n);
    res.uncertainties = Eigen::VectorXd::Zero(n);
    if (!free.empty()) {
        const Eigen::MatrixXd jx = jacobian(problem, x, r, free, options);
        const Eigen::Index dof = std::max<Eigen::Index>(1, r.size() - static_cast<Eigen::Index>(free.size()));
        const Eigen::MatrixXd jtj = jx.transpose() * jx;
        const Eigen::MatrixXd cov = (ss / dof) * jtj.completeOrthogonalDecomposition().pseudoInverse();
        for (std::size_t a = 0; a < free.size(); ++a) {
            for (std::size_t b = 0; b < free.size(); ++b) res.covariance_estimate(free[a], free[b]) = cov(a, b);
            res.uncertainties[free[a]] = std::sqrt(std::max(0.0, cov(a, a)));
        }
    }
    return res;
}

FitResult fit_noise_curve(const std::vector<NoisePoint>& data, const NoiseSurface& surface,
                          const NoiseFitOptions& options) {
    if (data.size() < 4) throw DomainError("noise fit needs at least four data points");
    int positive = 0, negative = 0;
    for (const NoisePoint& pt : data) {
        if (!std::isfinite(pt.p_mw) || !std::isfinite(pt.counts)) throw DomainError("noise data must be finite");
        if (!(pt.sigma > 0.0)) throw DomainError("noise data sigma must be > 0");
        positive += pt.p_mw > 0.0;
        negative += pt.p_mw < 0.0;
    }

    FitProblem p;
    p.names = {"p_sat_mw", "kappa"};
    p.lower = Eigen::Vector2d(0.0, 0.0);
    p.upper = Eigen::Vector2d(1e3, 1.0);
    p.initial_guess = Eigen::Vector2d(std::clamp(options.p_sat_guess, 1e-9, 1e3), std::clamp(options.kappa_guess, 1e-9, 1.0));
    const bool pass = options.filter_passes_antistokes;
    p.residuals = [&data, &surface, pass](const Eigen::VectorXd& x) {
        Eigen::VectorXd r(data.size());
        const double ps = x[0];
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double u = data[i].p_mw / ps;
            const double p3 = std::clamp(0.5 * (1.0 + u / (1.0 + std::abs(u))), 0.0, 1.0);
            const NoiseBudget b = surface.budget(p3);
            const double s = x[1] * (pass ? b.s_total : b.stokes());
            r[i] = (s - data[i].counts) / data[i].sigma;
        }
        return r;
    };
    FitResult res = least_squares(p, options.lm);
    if (positive == 0 || negative == 0)
        res.diagnostics.push_back("all data on one pump side; P_s and kappa are poorly conditioned");
    return res;
}

FitResult fit_noise_curve(const std::vector<NoisePoint>& data, const EnsembleParams& params,
                          const ControlPulse& pulse, const Grid& grid, const NoiseFitOptions& options) {
    if (data.size() < 4) throw DomainError("noise fit needs at least four data points");
    const NoiseCalculator calc(params, pulse, grid);
    const NoiseSurface surface(calc);
    return fit_noise_curve(data, surface, options);
}

std::pair<double, double> canonical_field_angles(double theta, double phi) {
    constexpr double pi = std::numbers::pi;
    theta = std::fmod(theta, 2.0 * pi);
    if (theta < 0.0) theta += 2.0 * pi;
    if (theta > pi) {
        theta = 2.0 * pi - theta;
        phi += pi;
    }
    if (theta > 0.5 * pi) {
        theta = pi - theta;
        phi = -phi;
    }
    phi = std::fmod(phi, pi);
    if (phi < 0.0) phi += pi;
    if (phi >= pi) phi = 0.0;
    return {theta, phi};
}

namespace {

double radical_inverse(int index, int base) {
    double result = 0.0;
    double f = 1.0 / base;
    for (int i = index; i > 0; i /= base) {
        result += f * (i % base);
        f /= base;
    }
    return result;
}

}  // namespace

FitResult fit_dephasing_curve(const std::vector<EfficiencyPoint>& data, const SpinSystem& system,
                              const std::vector<double>& populations, const DephasingFitOptions& options) {
    if (data.size() < 5) throw DomainError("dephasing fit needs at least five data points");
    double t_lo = data.front().t_ns, t_hi = data.front().t_ns;
    for (const EfficiencyPoint& pt : data) {
        if (!std::isfinite(pt.t_ns) || !std::isfinite(pt.efficiency) || pt.t_ns < 0.0)
            throw DomainError("efficiency data must be finite with t >= 0");
        if (!(pt.sigma > 0.0)) throw DomainError("efficiency data sigma must be > 0");
        t_lo = std::min(t_lo, pt.t_ns);
        t_hi = std::max(t_hi, pt.t_ns);
    }
    if (t_hi - t_lo < 2000.0) throw DomainError("dephasing fit needs data spanning at least 2 us");
    // Validates the distribution once up front.
    (void)EfficiencyModel(system, MagneticField(), populations);

    constexpr double pi = std::numbers::pi;
    FitProblem p;
    p.names = {"b_gauss", "theta_rad", "phi_rad", "scale"};
    p.lower = Eigen::Vector4d(0.0, 0.0, 0.0, 0.0);
    p.upper = Eigen::Vector4d(1.0, pi, 2.0 * pi, 1.0);
    if (options.fix_b_zero) p.fixed = {true, false, false, false};
    p.residuals = [&](const Eigen::VectorXd& x) {
        const MagneticField field(std::max(0.0, x[0]), x[1], x[2]);
        const EfficiencyModel model(system, field, populations);
        Eigen::VectorXd r(data.size());
        for (std::size_t i = 0; i < data.size(); ++i)
            r[i] = (x[3] * model.eta(data[i].t_ns) / model.eta0() - data[i].efficiency) / data[i].sigma;
        return r;
    };

    std::vector<Eigen::Vector4d> starts;
    if (options.initial_guess) starts.push_back(*options.initial_guess);
    double peak = 0.0;
    for (const EfficiencyPoint& pt : data) peak = std::max(peak, pt.efficiency);
    const double scale_guess = std::clamp(peak, 1e-3, 1.0);
    for (int s = 1; s <= options.extra_starts; ++s)
        starts.push_back(Eigen::Vector4d(0.02 + 0.5 * radical_inverse(s, 2), pi * radical_inverse(s, 3),
                                         2.0 * pi * radical_inverse(s, 5), scale_guess));
    if (starts.empty()) throw DomainError("dephasing fit has no starting point");

    std::optional<FitResult> best;
    for (Eigen::Vector4d start : starts) {
        if (options.fix_b_zero) start[0] = 0.0;
        p.initial_guess = start;
        FitResult r = least_squares(p, options.lm);
        if (!best || r.residual_norm < best->residual_norm) best = std::move(r);
    }
    const auto [theta, phi] = canonical_field_angles(best->parameters[1], best->parameters[2]);
    best->parameters[1] = theta;
    best->parameters[2] = phi;
    best->diagnostics.push_back("angles reported in the canonical range theta in [0, pi/2], phi in [0, pi)");
    if (options.fix_b_zero) best->diagnostics.push_back("B fixed at 0: the model curve is constant");
    return *best;
}

FitResult fit_fluorescence_tail(const std::vector<HistogramBin>& histogram, double t_start, double t_end,
                                const FitOptions& options) {
    if (histogram.empty()) throw DomainError("empty histogram");
    if (!(t_end > t_start)) throw DomainError("fit window is empty");
    double lo = histogram.front().t_ns, hi = histogram.front().t_ns;
    for (const HistogramBin& b : histogram) {
        if (!std::isfinite(b.t_ns) || !std::isfinite(b.counts)) throw DomainError("histogram must be finite");
        if (b.counts < 0.0) throw DomainError("histogram counts must be >= 0");
        lo = std::min(lo, b.t_ns);
        hi = std::max(hi, b.t_ns);
    }
    if (t_start < lo || t_end > hi) throw DomainError("fit window lies outside the histogram support");

    std::vector<HistogramBin> window;
    for (const HistogramBin& b : histogram)
        if (b.t_ns >= t_start && b.t_ns <= t_end) window.push_back(b);
    if (window.size() < 3) throw DomainError("fit window holds fewer than three bins");
    double total = 0.0;
    for (const HistogramBin& b : window) total += b.counts;
    if (total == 0.0) throw FitError("fit window holds no counts");

    // Log-linear regression on the positive bins for the starting point.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int np = 0;
    double peak = 0.0;
    for (const HistogramBin& b : window) {
        peak = std::max(peak, b.counts);
        if (b.counts <= 0.0) continue;
        const double x = b.t_ns - t_start, yv = std::log(b.counts);
        sx += x;
        sy += yv;
        sxx += x * x;
        sxy += x * yv;
        ++np;
    }
    const double span = t_end - t_start;
    double slope = 0.0, intercept = std::log(peak);
    if (np >= 2 && np * sxx - sx * sx > 0.0) {
        slope = (np * sxy - sx * sy) / (np * sxx - sx * sx);
        intercept = (sy - slope * sx) / np;
    }
    const bool decaying = slope < 0.0;
    const double tau_guess = decaying ? -1.0 / slope : 10.0 * span;
    const double amp_guess = decaying ? std::exp(intercept) : peak;

    FitProblem p;
    p.names = {"amplitude", "lifetime_ns"};
    p.lower = Eigen::Vector2d(0.0, 0.0);
    p.upper = Eigen::Vector2d(kInf, kInf);
    p.initial_guess = Eigen::Vector2d(amp_guess, tau_guess);
    p.residuals = [&window, t_start](const Eigen::VectorXd& x) {
        Eigen::VectorXd r(window.size());
        for (std::size_t i = 0; i < window.size(); ++i)
            r[i] = x[0] * std::exp(-(window[i].t_ns - t_start) / x[1]) - window[i].counts;
        return r;
    };
    FitResult res = least_squares(p, options);
    if (!decaying || res.parameters[1] > 100.0 * span) {
        res.converged = false;
        res.diagnostics.push_back("tail does not decay within the window; lifetime is unresolved");
    }
    return res;
}

}  // namespace warmmem
