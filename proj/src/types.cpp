#include "warmmem/types.hpp"

#include <algorithm>
#include <cmath>

#include "warmmem/errors.hpp"

namespace warmmem {

EnsembleParams EnsembleParams::from_quoted(double d, double gamma_mhz, double detuning_ghz,
                                           double stokes_shift_ghz,
                                           FrequencyConvention convention) {
    EnsembleParams p;
    p.d = d;
    p.gamma = unit_convert(gamma_mhz, Unit::MHz, Unit::RadPerNs, convention);
    p.delta_s = unit_convert(detuning_ghz, Unit::GHz, Unit::RadPerNs, convention);
    p.stokes_shift = unit_convert(stokes_shift_ghz, Unit::GHz, Unit::RadPerNs, convention);
    p.validate();
    return p;
}

EnsembleParams EnsembleParams::reference_defaults(FrequencyConvention convention) {
    return from_quoted(1900.0, 16.0, 15.0, 9.2, convention);
}

void EnsembleParams::validate() const {
    if (!std::isfinite(d) || !std::isfinite(gamma) || !std::isfinite(delta_s) ||
        !std::isfinite(stokes_shift))
        throw DomainError("ensemble parameters must be finite");
    if (d < 0.0) throw DomainError("optical depth d must be >= 0");
    if (gamma < 0.0) throw DomainError("linewidth gamma must be >= 0");
    if (stokes_shift < 0.0) throw DomainError("Stokes shift must be >= 0");
}

std::pair<cplx, cplx> derived_detunings(const EnsembleParams& params) {
    const cplx i{0.0, 1.0};
    return {params.gamma - i * params.delta_s, params.gamma - i * params.delta_as()};
}

PumpState PumpState::from_p3(double p3) {
    if (!(p3 >= 0.0 && p3 <= 1.0)) throw DomainError("population p3 must lie in [0, 1]");
    return PumpState(p3);
}

Grid Grid::for_pulse(double fwhm_ns, int nz, int ntau, double span_factor) {
    Grid g;
    g.nz = nz;
    g.ntau = ntau;
    g.tau_min = -0.5 * span_factor * fwhm_ns;
    g.tau_max = 0.5 * span_factor * fwhm_ns;
    g.validate();
    return g;
}

std::vector<double> Grid::tau_weights() const {
    std::vector<double> w(ntau, dtau());
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
}

std::vector<double> Grid::z_weights() const {
    std::vector<double> w(nz, dz());
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
}

Grid Grid::refined(int factor) const {
    Grid g = *this;
    g.nz = nz * factor;
    g.ntau = ntau * factor;
    return g;
}

void Grid::validate() const {
    if (nz < 2) throw DomainError("grid needs nz >= 2");
    if (ntau < 2) throw DomainError("grid needs ntau >= 2");
    if (!(tau_max > tau_min)) throw DomainError("grid tau window is empty");
}

std::string to_string(PulseShape shape) {
    switch (shape) {
        case PulseShape::Gaussian: return "gaussian";
        case PulseShape::Square: return "square";
        case PulseShape::Sech2: return "sech2";
    }
    return "?";
}

PulseShape parse_pulse_shape(std::string_view text) {
    if (text == "gaussian") return PulseShape::Gaussian;
    if (text == "square") return PulseShape::Square;
    if (text == "sech2") return PulseShape::Sech2;
    throw DomainError("unknown pulse shape '" + std::string(text) +
                      "' (expected gaussian, square or sech2)");
}

namespace {

constexpr double kContainment = 1e-6;

// Intensity FWHM in units of the envelope width T.
double fwhm_over_width(PulseShape shape) {
    switch (shape) {
        case PulseShape::Gaussian: return 2.0 * std::sqrt(std::log(2.0));
        case PulseShape::Sech2: return 2.0 * std::acosh(std::pow(2.0, 0.25));
        case PulseShape::Square: return 1.0;
    }
    return 1.0;
}

double envelope(PulseShape shape, double tau, double fwhm) {
    switch (shape) {
        case PulseShape::Gaussian: {
            const double x = tau * fwhm_over_width(shape) / fwhm;
            return std::exp(-0.5 * x * x);
        }
        case PulseShape::Sech2: {
            const double x = tau * fwhm_over_width(shape) / fwhm;
            const double s = 1.0 / std::cosh(x);
            return s * s;
        }
        case PulseShape::Square: return std::abs(tau) <= 0.5 * fwhm ? 1.0 : 0.0;
    }
    return 0.0;
}

double trapezoid_intensity(const std::vector<cplx>& samples, double step) {
    std::vector<double> intensity(samples.size());
    std::transform(samples.begin(), samples.end(), intensity.begin(),
                   [](cplx v) { return std::norm(v); });
    return trapezoid(intensity, step);
}

}  // namespace

double containment_span_factor(PulseShape shape, double minimum) {
    double half_width_in_t = 0.0;
    switch (shape) {
        case PulseShape::Gaussian: half_width_in_t = std::sqrt(-2.0 * std::log(kContainment)); break;
        case PulseShape::Sech2: half_width_in_t = std::acosh(1.0 / std::sqrt(kContainment)); break;
        case PulseShape::Square: return minimum;
    }
    // 2% margin so the end samples sit strictly inside the threshold.
    const double factor = 1.02 * 2.0 * half_width_in_t / fwhm_over_width(shape);
    return std::max(minimum, factor);
}

ControlPulse ControlPulse::make(PulseShape shape, double fwhm_ns, double energy_rad_per_ns,
                                const Grid& grid) {
    grid.validate();
    if (!(fwhm_ns > 0.0)) throw DomainError("pulse FWHM must be > 0");
    if (!(energy_rad_per_ns >= 0.0)) throw DomainError("pulse energy must be >= 0");

    std::vector<cplx> samples(grid.ntau);
    for (int k = 0; k < grid.ntau; ++k) samples[k] = envelope(shape, grid.tau(k), fwhm_ns);

    const double raw = trapezoid_intensity(samples, grid.dtau());
    if (raw <= 0.0) throw DomainError("pulse has no support on the grid");
    const double peak = std::abs(*std::max_element(
        samples.begin(), samples.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); }));
    if (std::abs(samples.front()) >= kContainment * peak ||
        std::abs(samples.back()) >= kContainment * peak)
        throw DomainError(to_string(shape) + " pulse is not contained in the tau window; use a span of at least " +
                          std::to_string(containment_span_factor(shape)) + " FWHM");

    const double scale = std::sqrt(energy_rad_per_ns / raw);
    for (auto& s : samples) s *= scale;
    return from_samples(std::move(samples), grid.tau_min, grid.tau_max);
}

ControlPulse ControlPulse::from_samples(std::vector<cplx> samples, double tau_min, double tau_max) {
    if (samples.size() < 2) throw DomainError("pulse needs at least two samples");
    if (!(tau_max > tau_min)) throw DomainError("pulse window is empty");
    ControlPulse p;
    p.shape = std::move(samples);
    p.tau_min = tau_min;
    p.tau_max = tau_max;
    p.energy = trapezoid_intensity(p.shape, (tau_max - tau_min) / (p.size() - 1));
    return p;
}

double ControlPulse::max_abs() const {
    double m = 0.0;
    for (cplx v : shape) m = std::max(m, std::abs(v));
    return m;
}

int ControlPulse::samples_above_half_max() const {
    double peak = 0.0;
    for (cplx v : shape) peak = std::max(peak, std::norm(v));
    return static_cast<int>(
        std::count_if(shape.begin(), shape.end(), [&](cplx v) { return std::norm(v) >= 0.5 * peak; }));
}

MagneticField::MagneticField(double b_gauss, double theta_rad, double phi_rad) {
    if (!std::isfinite(b_gauss) || !std::isfinite(theta_rad) || !std::isfinite(phi_rad))
        throw DomainError("magnetic field parameters must be finite");
    if (b_gauss < 0.0) throw DomainError("magnetic field strength must be >= 0");

    double theta = std::fmod(theta_rad, kTwoPi);
    if (theta < 0.0) theta += kTwoPi;
    double phi = phi_rad;
    if (theta > std::numbers::pi) {
        // Same direction reached through the other side of the pole.
        theta = kTwoPi - theta;
        phi += std::numbers::pi;
    }
    phi = std::fmod(phi, kTwoPi);
    if (phi < 0.0) phi += kTwoPi;
    if (phi >= kTwoPi) phi = 0.0;

    b_ = b_gauss;
    theta_ = theta;
    phi_ = phi;
}

MagneticField MagneticField::from_degrees(double b_gauss, double theta_deg, double phi_deg) {
    constexpr double deg = std::numbers::pi / 180.0;
    return MagneticField(b_gauss, theta_deg * deg, phi_deg * deg);
}

double trapezoid(std::span<const double> values, double step) {
    if (values.size() < 2) return 0.0;
    double sum = 0.5 * (values.front() + values.back());
    for (std::size_t i = 1; i + 1 < values.size(); ++i) sum += values[i];
    return sum * step;
}

}  // namespace warmmem
