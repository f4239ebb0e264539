#pragma once

#include <complex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "warmmem/units.hpp"

namespace warmmem {

using cplx = std::complex<double>;

/// Physical constants of the Λ system. All rates in rad/ns.
///
/// The anti-Stokes detuning and the complex detunings Γ = γ − iΔ are derived
/// on demand and never stored.
struct EnsembleParams {
    double d = 1900.0;          ///< resonant optical depth
    double gamma = 0.0;         ///< homogeneous linewidth of |1>-|2>
    double delta_s = 0.0;       ///< Stokes (signal) detuning Δ_S
    double stokes_shift = 0.0;  ///< ground-state splitting δ

    /// Build from the quoted laboratory values (MHz / GHz).
    static EnsembleParams from_quoted(double d, double gamma_mhz, double detuning_ghz,
                                      double stokes_shift_ghz,
                                      FrequencyConvention convention = FrequencyConvention::Ordinary);

    /// d = 1900, γ = 16 MHz, Δ = 15 GHz, δ = 9.2 GHz.
    static EnsembleParams reference_defaults(FrequencyConvention convention = FrequencyConvention::Ordinary);

    double delta_as() const { return delta_s + stokes_shift; }

    /// Throws DomainError for negative or non-finite values.
    void validate() const;
};

/// (Γ_S, Γ_AS) = (γ − iΔ_S, γ − i(Δ_S + δ)).
std::pair<cplx, cplx> derived_detunings(const EnsembleParams& params);

/// Fractions of atoms in |1> and |3>. p1 is always derived as 1 − p3.
class PumpState {
public:
    /// Throws DomainError unless 0 <= p3 <= 1.
    static PumpState from_p3(double p3);

    double p1() const { return 1.0 - p3_; }
    double p3() const { return p3_; }

private:
    explicit PumpState(double p3) : p3_(p3) {}
    double p3_;
};

/// Uniform τ grid on [tau_min, tau_max] and uniform z grid on [0, 1].
struct Grid {
    int nz = 200;
    int ntau = 800;
    double tau_min = -1.2;
    double tau_max = 1.2;

    /// Default sizes with a τ window of `span_factor` FWHMs centred on zero.
    static Grid for_pulse(double fwhm_ns, int nz = 200, int ntau = 800, double span_factor = 8.0);

    double dtau() const { return (tau_max - tau_min) / (ntau - 1); }
    double dz() const { return 1.0 / (nz - 1); }
    double tau(int k) const { return tau_min + k * dtau(); }
    double z(int n) const { return n * dz(); }

    /// Trapezoidal weights.
    std::vector<double> tau_weights() const;
    std::vector<double> z_weights() const;

    /// Same window with nz and ntau multiplied by `factor`.
    Grid refined(int factor) const;

    /// Throws DomainError if nz < 2, ntau < 2 or the window is empty.
    void validate() const;
};

enum class PulseShape { Gaussian, Square, Sech2 };

std::string to_string(PulseShape shape);
PulseShape parse_pulse_shape(std::string_view text);

/// Tabulated control Rabi frequency Ω(τ) (rad/ns) on a grid's τ points.
///
/// `energy` is W = ∫|Ω|² dτ by the trapezoidal rule on the same points.
struct ControlPulse {
    std::vector<cplx> shape;
    double tau_min = 0.0;
    double tau_max = 0.0;
    double energy = 0.0;

    /// Named envelope with intensity FWHM `fwhm_ns`, normalised so that the
    /// trapezoidal energy equals `energy_rad_per_ns`. Throws DomainError if the
    /// envelope is not contained in the grid window (|Ω| at either end must be
    /// below 1e-6 of the peak).
    ///
    /// Envelopes (amplitude, x = τ/T):
    ///   gaussian  exp(-x²/2),   intensity FWHM = 2√(ln 2)·T
    ///   square    1 on |τ| <= fwhm/2, 0 outside
    ///   sech2     sech²(x),     intensity FWHM = 2·acosh(2^{1/4})·T
    static ControlPulse make(PulseShape shape, double fwhm_ns, double energy_rad_per_ns,
                             const Grid& grid);

    /// Wrap explicit samples on [tau_min, tau_max]. Energy is recomputed.
    static ControlPulse from_samples(std::vector<cplx> samples, double tau_min, double tau_max);

    int size() const { return static_cast<int>(shape.size()); }
    double max_abs() const;

    /// Number of τ samples with |Ω|² >= max|Ω|²/2.
    int samples_above_half_max() const;
};

/// Smallest multiple of the FWHM that contains the named envelope to 1e-6 of its
/// peak amplitude, or `minimum` if that is already enough.
double containment_span_factor(PulseShape shape, double minimum = 8.0);

/// Static field with polar angle θ from the vertical (control polarisation) axis
/// and azimuth φ from the propagation direction. Angles are reduced to
/// θ ∈ [0, π], φ ∈ [0, 2π) on construction.
class MagneticField {
public:
    MagneticField() = default;
    /// Throws DomainError for b < 0 or non-finite input.
    MagneticField(double b_gauss, double theta_rad, double phi_rad);

    static MagneticField from_degrees(double b_gauss, double theta_deg, double phi_deg);

    double b_gauss() const { return b_; }
    double theta() const { return theta_; }
    double phi() const { return phi_; }

private:
    double b_ = 0.0;
    double theta_ = 0.0;
    double phi_ = 0.0;
};

double trapezoid(std::span<const double> values, double step);

}  // namespace warmmem
