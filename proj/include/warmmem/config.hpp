#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "warmmem/dephasing.hpp"
#include "warmmem/noise.hpp"
#include "warmmem/types.hpp"

namespace warmmem {

/// Everything a command needs, in the quoted laboratory units of the config file.
///
/// File format: one `key = value` per line, `#` starts a comment, blank lines
/// are ignored, every key at most once. Keys are the member names below.
struct RunConfig {
    double d = 1900.0;
    double gamma_mhz = 16.0;
    double detuning_ghz = 15.0;
    double stokes_shift_ghz = 9.2;
    FrequencyConvention convention = FrequencyConvention::Ordinary;

    PulseShape pulse_shape = PulseShape::Gaussian;
    double pulse_fwhm_ns = 0.3;
    double pulse_energy_ghz = 30.0;

    int nz = 200;
    int ntau = 800;
    std::optional<double> tau_span_ns;  ///< default: 8 FWHM, wider if the shape needs it

    double p_sat_mw = 84.0;
    double kappa = 0.12;
    bool antistokes_pass = true;

    double b_gauss = 0.13;
    double theta_deg = 30.0;
    double phi_deg = 25.0;
    double scale = 0.30;
    PolarizationConfig polarization;

    EnsembleParams ensemble() const;
    Grid grid() const;
    ControlPulse pulse() const;
    NoiseModelParams noise_model() const;
    MagneticField field() const;

    /// Throws DomainError naming the offending key.
    void validate() const;

    /// Sorted `key = value` lines with round-trip number formatting.
    std::string canonical_text() const;
    /// FNV-1a 64 of canonical_text().
    std::uint64_t hash() const;
};

/// Sets one key from its text value. Throws ParseError naming the key.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);

/// Reads a config file on top of the defaults. Throws ParseError with the line
/// number on malformed lines, unknown or repeated keys; DomainError after
/// loading if the values are inconsistent.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(std::string_view text, const std::string& source = "config");

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

/// Locale-independent parse of a whole string; throws ParseError naming `what`.
double parse_double(std::string_view text, std::string_view what);

}  // namespace warmmem
