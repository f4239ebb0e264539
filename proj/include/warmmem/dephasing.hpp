#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "warmmem/types.hpp"

namespace warmmem {

/// Hyperfine manifold F with Landé factor g; basis ordered m = −F..F.
struct SpinManifold {
    double f = 0.0;
    double g_factor = 0.0;

    /// Throws DomainError unless 2F is a nonnegative integer.
    SpinManifold(double f, double g_factor);

    int dim() const;
    double m(int index) const { return -f + index; }
};

struct SpinMatrices {
    Eigen::MatrixXcd x, y, z;
};

/// Angular-momentum matrices in the |F, m> basis, m = −F..F. Throws DomainError
/// unless f is a nonnegative half-integer.
SpinMatrices spin_matrices(double f);

/// <j1 m1; j2 m2 | J M> by the Racah formula. Zero outside the selection rules.
double clebsch_gordan(double j1, double m1, double j2, double m2, double j, double m);

enum class LinearPolarization { Vertical, Horizontal };

std::string to_string(LinearPolarization p);
LinearPolarization parse_polarization(std::string_view text);

/// Linear polarizations of control and signal. The quantization axis is vertical;
/// a horizontal field (perpendicular to propagation) decomposes into σ±.
struct PolarizationConfig {
    LinearPolarization control = LinearPolarization::Vertical;
    LinearPolarization signal = LinearPolarization::Horizontal;
};

/// Two-photon coupling C(m_i, m_f) between F_i = 4 and F_f = 3 through the
/// degenerate excited levels F' = 2..5, normalised to max|C| = 1. Rows index
/// m_i = −4..4, columns m_f = −3..3. Throws DomainError if both fields share a
/// polarization (no Raman coupling in this geometry).
Eigen::MatrixXcd coupling_matrix(const PolarizationConfig& config = {});

/// F_i = 4 (g = 1/4) and F_f = 3 (g = −1/4) with their coupling, on the 16-state
/// direct sum (initial states first).
class SpinSystem {
public:
    explicit SpinSystem(const PolarizationConfig& config = {});

    const SpinManifold& initial() const { return initial_; }
    const SpinManifold& final_manifold() const { return final_; }
    const Eigen::MatrixXcd& coupling() const { return coupling_; }

    /// Σ = Σ C(m_i, m_f) |F_i m_i><F_f m_f|.
    Eigen::MatrixXcd sigma() const;
    /// Blockwise exp(iθ(Y sinφ − X cosφ)).
    Eigen::MatrixXcd rotation(const MagneticField& field) const;
    /// diag(exp(i m g 2π µ_B B t)), t in ns.
    Eigen::MatrixXcd phase(const MagneticField& field, double t_ns) const;

private:
    SpinManifold initial_;
    SpinManifold final_;
    Eigen::MatrixXcd coupling_;
};

/// U = R†ER on the 16-state space. Throws DomainError for t < 0.
Eigen::MatrixXcd evolution_operator(const MagneticField& field, double t_ns, const SpinSystem& system);

/// p_m = 1/9 over m_i = −4..4.
std::vector<double> uniform_populations();

/// Evaluates η(t) = Σ p_m |<m| U†ΣUΣ† |m>|² for one field, reusing the rotations.
class EfficiencyModel {
public:
    /// Throws DomainError unless populations has 9 nonnegative entries summing to 1 (1e-12).
    EfficiencyModel(const SpinSystem& system, const MagneticField& field, std::vector<double> populations);

    /// Any real t (negative t is used by symmetry checks).
    double eta(double t_ns) const;
    double eta0() const { return eta0_; }

private:
    Eigen::MatrixXcd coupling_;
    Eigen::MatrixXcd coupling_adj_;
    Eigen::MatrixXcd r_i_, r_f_;
    Eigen::VectorXd m_i_, m_f_;
    double omega_i_ = 0.0, omega_f_ = 0.0;  // rad/ns per unit m
    std::vector<double> populations_;
    double eta0_ = 0.0;
};

/// Unnormalised retrieval efficiency. Throws DomainError for t < 0 or an invalid distribution.
double retrieval_efficiency(double t_ns, const MagneticField& field, const SpinSystem& system,
                            const std::vector<double>& populations);

struct EfficiencyRow {
    double t_ns = 0.0;
    double eta_relative = 0.0;  ///< η(t)/η(0)
    double eta_scaled = 0.0;    ///< scale·η(t)/η(0)
};

/// Throws DomainError on an empty list, negative time or scale <= 0.
std::vector<EfficiencyRow> efficiency_curve(const std::vector<double>& t_values, const MagneticField& field,
                                            const SpinSystem& system, const std::vector<double>& populations,
                                            double scale);

/// First t in (0, t_max] with η(t)/η(0) <= 1/e, to 1e-6 ns; nullopt if the curve
/// stays above 1/e (always the case for B = 0).
std::optional<double> one_over_e_time(const MagneticField& field, const SpinSystem& system,
                                      const std::vector<double>& populations, double t_max_ns = 20000.0);

}  // namespace warmmem
