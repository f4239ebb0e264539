#pragma once

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "warmmem/maxwell_bloch.hpp"
#include "warmmem/types.hpp"

namespace warmmem {

/// Photon numbers per pulse scattered into the Stokes and anti-Stokes modes,
/// before mode-overlap scaling.
struct NoiseBudget {
    double s_stokes_spont = 0.0;      ///< p₃ ∫∫|L_S|²
    double s_stokes_fwm = 0.0;        ///< ∫∫|G_S|²
    double s_antistokes_spont = 0.0;  ///< p₁ ∫∫|L_AS|²
    double s_antistokes_fwm = 0.0;    ///< ∫∫|G_AS|²
    double s_total = 0.0;             ///< sum of the four components

    static NoiseBudget from_components(double stokes_spont, double stokes_fwm, double as_spont, double as_fwm);

    double stokes() const { return s_stokes_spont + s_stokes_fwm; }
    double antistokes() const { return s_antistokes_spont + s_antistokes_fwm; }
};

struct NoiseModelParams {
    double p_sat_mw = 84.0;                 ///< saturation power P_s
    double kappa = 0.12;                    ///< mode-overlap scaling, 0 < κ <= 1
    bool filter_passes_antistokes = true;   ///< false: anti-Stokes light is blocked

    /// Throws DomainError unless p_sat > 0 and 0 < κ <= 1. κ = 0 is accepted when
    /// `allow_zero_kappa` is set, for what-if evaluation.
    void validate(bool allow_zero_kappa = false) const;
};

/// p₃ = ½[1 + (P/P_s)/(1 + |P|/P_s)]. Positive P pumps on the red transition
/// (towards |3>), negative P on the blue one. Throws DomainError if p_sat <= 0.
PumpState pump_populations(double p_mw, double p_sat_mw);

/// Evaluates the four quadratures on precomputed kernels.
NoiseBudget budget_from_kernels(const GreensKernels& kernels, const PumpState& pump);

/// Builds the kernels for `pump` and evaluates the budget.
NoiseBudget raman_noise(const EnsembleParams& params, const ControlPulse& pulse, const PumpState& pump,
                        const Grid& grid);

/// κ times the Stokes components, plus the anti-Stokes components if the filter passes them.
double observed_from_budget(const NoiseBudget& budget, const NoiseModelParams& model);

/// Noise evaluator for a fixed ensemble, pulse and grid with a thread-safe
/// memo of budgets keyed on p₃ rounded to 1e-6.
class NoiseCalculator {
public:
    NoiseCalculator(EnsembleParams params, ControlPulse pulse, Grid grid);

    NoiseBudget budget(const PumpState& pump) const;
    NoiseBudget budget_at_power(double p_mw, double p_sat_mw) const;
    double observed(double p_mw, const NoiseModelParams& model) const;

    const EnsembleParams& params() const { return params_; }
    const ControlPulse& pulse() const { return pulse_; }
    const Grid& grid() const { return grid_; }
    std::size_t cache_size() const;

private:
    EnsembleParams params_;
    ControlPulse pulse_;
    Grid grid_;
    mutable std::mutex mutex_;
    mutable std::map<long long, NoiseBudget> cache_;
};

/// observed_noise without an explicit calculator; solves once.
double observed_noise(double p_mw, const NoiseModelParams& model, const EnsembleParams& params,
                      const ControlPulse& pulse, const Grid& grid);

struct NoiseRow {
    double pump_mw = 0.0;
    double p1 = 0.0;
    double p3 = 0.0;
    NoiseBudget budget;
    double s_observed = 0.0;
};

/// One row per pump power. Throws DomainError on an empty list.
std::vector<NoiseRow> noise_curve(const std::vector<double>& p_values, const NoiseModelParams& model,
                                  const NoiseCalculator& calc);

struct FractionRow {
    double pump_mw = 0.0;
    double stokes_fraction = 0.0;
    double antistokes_fraction = 0.0;
};

/// Stokes / anti-Stokes shares of S at each pump power (κ cancels). Throws
/// DomainError on an empty list or where S vanishes.
std::vector<FractionRow> stokes_fraction_curve(const std::vector<double>& p_values, double p_sat_mw,
                                               const NoiseCalculator& calc);

/// Plain ratio. Throws DomainError unless noise_floor > 0.
double snr_estimate(double retrieved_signal_photons, double noise_floor);

/// Smooth interpolant of the four budget components over p₃ ∈ [0, 1], built from
/// direct solves at Chebyshev-Lobatto nodes. Used where derivatives in P_s are
/// needed (least-squares fits).
class NoiseSurface {
public:
    static constexpr int kDefaultNodes = 17;

    explicit NoiseSurface(const NoiseCalculator& calc, int nodes = kDefaultNodes);

    NoiseBudget budget(double p3) const;
    double observed(double p_mw, const NoiseModelParams& model) const;
    const std::vector<double>& nodes() const { return nodes_; }

private:
    std::vector<double> nodes_;
    std::vector<double> bary_weights_;
    std::vector<std::array<double, 4>> values_;
};

}  // namespace warmmem
