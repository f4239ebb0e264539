#pragma once

#include <numbers>
#include <string>
#include <string_view>

namespace warmmem {

/// Bohr magneton over Planck's constant, µ_B/h, in MHz per Gauss (CODATA 2018).
/// This is the Larmor frequency of a g = 1 level in a 1 G field.
inline constexpr double kBohrMagnetonMHzPerGauss = 1.399624;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// How quoted "MHz"/"GHz" values map onto the internal angular unit rad/ns.
///
/// Ordinary: the quoted number is an ordinary frequency and is multiplied by 2π.
/// Angular: the quoted number is already an angular frequency and is taken verbatim.
/// The choice is applied uniformly to every rate (linewidth, detunings, pulse energy).
enum class FrequencyConvention { Ordinary, Angular };

/// Factor applied to a quoted frequency in GHz to obtain rad/ns.
constexpr double angular_factor(FrequencyConvention convention) {
    return convention == FrequencyConvention::Ordinary ? kTwoPi : 1.0;
}

std::string to_string(FrequencyConvention convention);
FrequencyConvention parse_convention(std::string_view text);

enum class Unit { MHz, GHz, RadPerNs, Ns, Us, Gauss, MilliWatt };

std::string to_string(Unit unit);
Unit parse_unit(std::string_view text);

/// Exact linear conversion inside the fixed unit set.
///
/// Frequencies (MHz, GHz, rad/ns) convert among each other; the ordinary/angular
/// step uses `convention`. Gauss converts to a frequency as the g = 1 Larmor
/// frequency B·µ_B/h and back. ns and µs convert among each other; mW only to mW.
/// Any other pair throws UnitError.
double unit_convert(double value, Unit from, Unit to,
                    FrequencyConvention convention = FrequencyConvention::Ordinary);

}  // namespace warmmem
