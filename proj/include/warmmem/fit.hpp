#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "warmmem/dephasing.hpp"
#include "warmmem/noise.hpp"

namespace warmmem {

/// Residual model with box bounds. Infinite bounds are allowed; parameters
/// flagged in `fixed` stay at their initial value.
struct FitProblem {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residuals;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    Eigen::VectorXd initial_guess;
    std::vector<bool> fixed;         ///< empty = all free
    std::vector<std::string> names;  ///< empty = p0, p1, ...
};

struct FitOptions {
    double rel_ss_tolerance = 1e-10;
    double gradient_tolerance = 1e-8;
    int max_iterations = 200;
    double fd_relative_step = 1e-6;
    double fd_absolute_floor = 1e-9;
};

struct FitResult {
    std::vector<std::string> names;
    Eigen::VectorXd parameters;
    Eigen::VectorXd uncertainties;        ///< sqrt of the covariance diagonal
    Eigen::MatrixXd covariance_estimate;  ///< s²(JᵀJ)⁻¹ over the free parameters, zero for fixed ones
    double residual_norm = 0.0;           ///< final sum of squares
    int iterations = 0;
    bool converged = false;
    std::string termination;
    std::vector<std::string> diagnostics;
    std::vector<double> ss_history;  ///< sum of squares after each accepted step, starting at the guess
};

/// Levenberg-Marquardt on logistic/exponential bound transforms with
/// finite-difference Jacobians. Deterministic.
///
/// Throws DomainError for an inconsistent problem (sizes, guess outside the
/// bounds, fewer residuals than free parameters) and FitError when residuals
/// become non-finite. Hitting the iteration cap returns converged = false.
FitResult least_squares(const FitProblem& problem, const FitOptions& options = {});

struct NoisePoint {
    double p_mw = 0.0;
    double counts = 0.0;
    double sigma = 1.0;
};

struct NoiseFitOptions {
    double p_sat_guess = 100.0;
    double kappa_guess = 0.1;
    bool filter_passes_antistokes = true;
    FitOptions lm;
};

/// Fits (P_s, κ) to observed noise. Throws DomainError for fewer than four
/// points; data on one pump sign only adds a conditioning warning.
FitResult fit_noise_curve(const std::vector<NoisePoint>& data, const NoiseSurface& surface,
                          const NoiseFitOptions& options = {});

FitResult fit_noise_curve(const std::vector<NoisePoint>& data, const EnsembleParams& params,
                          const ControlPulse& pulse, const Grid& grid, const NoiseFitOptions& options = {});

struct EfficiencyPoint {
    double t_ns = 0.0;
    double efficiency = 0.0;
    double sigma = 1.0;
};

struct DephasingFitOptions {
    /// (B gauss, θ rad, φ rad, scale); tried first when present.
    std::optional<Eigen::Vector4d> initial_guess;
    int extra_starts = 8;  ///< deterministic starts spread over the box
    bool fix_b_zero = false;
    FitOptions lm;
};

/// Maps (θ, φ) onto the representative of its degeneracy class
/// {(θ, φ), (θ, φ+π), (π−θ, −φ), (π−θ, π−φ)} with θ ∈ [0, π/2], φ ∈ [0, π).
std::pair<double, double> canonical_field_angles(double theta, double phi);

/// Fits (B, θ, φ, scale) to scale·η(t)/η(0). Throws DomainError unless there
/// are at least five points spanning at least 2 µs. Angles in the result are
/// canonicalised.
FitResult fit_dephasing_curve(const std::vector<EfficiencyPoint>& data, const SpinSystem& system,
                              const std::vector<double>& populations, const DephasingFitOptions& options = {});

struct HistogramBin {
    double t_ns = 0.0;
    double counts = 0.0;
};

/// Fits A·exp(−(t − t_start)/τ) on [t_start, t_end]; parameters (amplitude, lifetime_ns).
/// Throws DomainError for a window outside the data or negative counts and
/// FitError if every count in the window is zero. A flat or rising tail returns
/// converged = false with a diagnostic.
FitResult fit_fluorescence_tail(const std::vector<HistogramBin>& histogram, double t_start, double t_end,
                                const FitOptions& options = {});

}  // namespace warmmem
