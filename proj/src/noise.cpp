#include "warmmem/noise.hpp"

#include <cmath>
#include <numbers>

#include "warmmem/errors.hpp"

namespace warmmem {

NoiseBudget NoiseBudget::from_components(double stokes_spont, double stokes_fwm, double as_spont,
                                         double as_fwm) {
    NoiseBudget b;
    b.s_stokes_spont = stokes_spont;
    b.s_stokes_fwm = stokes_fwm;
    b.s_antistokes_spont = as_spont;
    b.s_antistokes_fwm = as_fwm;
    b.s_total = stokes_spont + stokes_fwm + as_spont + as_fwm;
    return b;
}

void NoiseModelParams::validate(bool allow_zero_kappa) const {
    if (!(p_sat_mw > 0.0) || !std::isfinite(p_sat_mw)) throw DomainError("saturation power must be > 0");
    const bool kappa_ok = allow_zero_kappa ? (kappa >= 0.0 && kappa <= 1.0) : (kappa > 0.0 && kappa <= 1.0);
    if (!kappa_ok) throw DomainError("kappa must lie in (0, 1]");
}

PumpState pump_populations(double p_mw, double p_sat_mw) {
    if (!(p_sat_mw > 0.0)) throw DomainError("saturation power must be > 0");
    if (!std::isfinite(p_mw)) throw DomainError("pump power must be finite");
    const double x = p_mw / p_sat_mw;
    return PumpState::from_p3(0.5 * (1.0 + x / (1.0 + std::abs(x))));
}

NoiseBudget budget_from_kernels(const GreensKernels& k, const PumpState& pump) {
    return NoiseBudget::from_components(pump.p3() * k.double_integral(k.l_s, k.z_weights),
                                        k.double_integral(k.g_s, k.tau_weights),
                                        pump.p1() * k.double_integral(k.l_as, k.z_weights),
                                        k.double_integral(k.g_as, k.tau_weights));
}

NoiseBudget raman_noise(const EnsembleParams& params, const ControlPulse& pulse, const PumpState& pump,
                        const Grid& grid) {
    return budget_from_kernels(greens_kernels(params, pulse, pump, grid), pump);
}

double observed_from_budget(const NoiseBudget& budget, const NoiseModelParams& model) {
    model.validate(true);
    const double passed = model.filter_passes_antistokes ? budget.s_total : budget.stokes();
    return model.kappa * passed;
}

NoiseCalculator::NoiseCalculator(EnsembleParams params, ControlPulse pulse, Grid grid)
    : params_(params), pulse_(std::move(pulse)), grid_(grid) {
    params_.validate();
    grid_.validate();
}

NoiseBudget NoiseCalculator::budget(const PumpState& pump) const {
    const long long key = std::llround(pump.p3() * 1e6);
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    // Solve at the rounded populations so the cached value does not depend on
    // which caller filled it.
    const PumpState rounded = PumpState::from_p3(static_cast<double>(key) * 1e-6);
    const NoiseBudget b = raman_noise(params_, pulse_, rounded, grid_);
    std::lock_guard lock(mutex_);
    return cache_.emplace(key, b).first->second;
}

NoiseBudget NoiseCalculator::budget_at_power(double p_mw, double p_sat_mw) const {
    return budget(pump_populations(p_mw, p_sat_mw));
}

double NoiseCalculator::observed(double p_mw, const NoiseModelParams& model) const {
    model.validate(true);
    return observed_from_budget(budget_at_power(p_mw, model.p_sat_mw), model);
}

std::size_t NoiseCalculator::cache_size() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
}

double observed_noise(double p_mw, const NoiseModelParams& model, const EnsembleParams& params,
                      const ControlPulse& pulse, const Grid& grid) {
    model.validate(true);
    return observed_from_budget(raman_noise(params, pulse, pump_populations(p_mw, model.p_sat_mw), grid), model);
}

std::vector<NoiseRow> noise_curve(const std::vector<double>& p_values, const NoiseModelParams& model,
                                  const NoiseCalculator& calc) {
    if (p_values.empty()) throw DomainError("noise curve needs at least one pump power");
    model.validate(true);
    std::vector<NoiseRow> rows;
    rows.reserve(p_values.size());
    for (double p : p_values) {
        NoiseRow r;
        r.pump_mw = p;
        const PumpState pump = pump_populations(p, model.p_sat_mw);
        r.p1 = pump.p1();
        r.p3 = pump.p3();
        r.budget = calc.budget(pump);
        r.s_observed = observed_from_budget(r.budget, model);
        rows.push_back(r);
    }
    return rows;
}

std::vector<FractionRow> stokes_fraction_curve(const std::vector<double>& p_values, double p_sat_mw,
                                               const NoiseCalculator& calc) {
    if (p_values.empty()) throw DomainError("fraction curve needs at least one pump power");
    std::vector<FractionRow> rows;
    rows.reserve(p_values.size());
    for (double p : p_values) {
        const NoiseBudget b = calc.budget_at_power(p, p_sat_mw);
        if (!(b.s_total > 0.0)) throw DomainError("noise vanishes; Stokes fraction undefined");
        FractionRow r;
        r.pump_mw = p;
        r.stokes_fraction = b.stokes() / b.s_total;
        r.antistokes_fraction = 1.0 - r.stokes_fraction;
        rows.push_back(r);
    }
    return rows;
}

double snr_estimate(double retrieved_signal_photons, double noise_floor) {
    if (!(noise_floor > 0.0)) throw DomainError("noise floor must be > 0 for an SNR");
    return retrieved_signal_photons / noise_floor;
}

NoiseSurface::NoiseSurface(const NoiseCalculator& calc, int nodes) {
    if (nodes < 2) throw DomainError("noise surface needs at least two nodes");
    const int n = nodes - 1;
    nodes_.resize(nodes);
    bary_weights_.resize(nodes);
    values_.resize(nodes);
    for (int j = 0; j <= n; ++j) {
        // Lobatto points mapped onto [0, 1]; endpoints hit exactly.
        nodes_[j] = j == 0 ? 0.0 : j == n ? 1.0 : 0.5 * (1.0 - std::cos(std::numbers::pi * j / n));
        bary_weights_[j] = (j % 2 ? -1.0 : 1.0) * ((j == 0 || j == n) ? 0.5 : 1.0);
        // Exact nodes: the calculator's cache rounds p₃.
        const NoiseBudget b = raman_noise(calc.params(), calc.pulse(), PumpState::from_p3(nodes_[j]), calc.grid());
        values_[j] = {b.s_stokes_spont, b.s_stokes_fwm, b.s_antistokes_spont, b.s_antistokes_fwm};
    }
}

NoiseBudget NoiseSurface::budget(double p3) const {
    if (!(p3 >= 0.0 && p3 <= 1.0)) throw DomainError("population p3 must lie in [0, 1]");
    std::array<double, 4> num{};
    double den = 0.0;
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
        const double diff = p3 - nodes_[j];
        if (diff == 0.0) {
            const auto& v = values_[j];
            return NoiseBudget::from_components(v[0], v[1], v[2], v[3]);
        }
        const double w = bary_weights_[j] / diff;
        den += w;
        for (int c = 0; c < 4; ++c) num[c] += w * values_[j][c];
    }
    return NoiseBudget::from_components(num[0] / den, num[1] / den, num[2] / den, num[3] / den);
}

double NoiseSurface::observed(double p_mw, const NoiseModelParams& model) const {
    model.validate(true);
    return observed_from_budget(budget(pump_populations(p_mw, model.p_sat_mw).p3()), model);
}

}  // namespace warmmem
