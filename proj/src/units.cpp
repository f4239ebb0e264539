#include "warmmem/units.hpp"

#include "warmmem/errors.hpp"

namespace warmmem {

namespace {

enum class Dimension { Frequency, Time, Field, Power };

Dimension dimension_of(Unit unit) {
    switch (unit) {
        case Unit::MHz:
        case Unit::GHz:
        case Unit::RadPerNs: return Dimension::Frequency;
        case Unit::Ns:
        case Unit::Us: return Dimension::Time;
        case Unit::Gauss: return Dimension::Field;
        case Unit::MilliWatt: return Dimension::Power;
    }
    throw UnitError("unknown unit");
}

// Scale to the base unit of each dimension: rad/ns, ns, Gauss, mW.
double to_base(double value, Unit unit, FrequencyConvention convention) {
    switch (unit) {
        case Unit::MHz: return value * 1e-3 * angular_factor(convention);
        case Unit::GHz: return value * angular_factor(convention);
        case Unit::RadPerNs: return value;
        case Unit::Ns: return value;
        case Unit::Us: return value * 1e3;
        case Unit::Gauss: return value;
        case Unit::MilliWatt: return value;
    }
    throw UnitError("unknown unit");
}

double from_base(double value, Unit unit, FrequencyConvention convention) {
    switch (unit) {
        case Unit::MHz: return value / (1e-3 * angular_factor(convention));
        case Unit::GHz: return value / angular_factor(convention);
        case Unit::RadPerNs: return value;
        case Unit::Ns: return value;
        case Unit::Us: return value * 1e-3;
        case Unit::Gauss: return value;
        case Unit::MilliWatt: return value;
    }
    throw UnitError("unknown unit");
}

}  // namespace

std::string to_string(FrequencyConvention convention) {
    return convention == FrequencyConvention::Ordinary ? "ordinary" : "angular";
}

FrequencyConvention parse_convention(std::string_view text) {
    if (text == "ordinary") return FrequencyConvention::Ordinary;
    if (text == "angular") return FrequencyConvention::Angular;
    throw UnitError("unknown frequency convention '" + std::string(text) +
                    "' (expected 'ordinary' or 'angular')");
}

std::string to_string(Unit unit) {
    switch (unit) {
        case Unit::MHz: return "MHz";
        case Unit::GHz: return "GHz";
        case Unit::RadPerNs: return "rad/ns";
        case Unit::Ns: return "ns";
        case Unit::Us: return "us";
        case Unit::Gauss: return "G";
        case Unit::MilliWatt: return "mW";
    }
    return "?";
}

Unit parse_unit(std::string_view text) {
    if (text == "MHz") return Unit::MHz;
    if (text == "GHz") return Unit::GHz;
    if (text == "rad/ns") return Unit::RadPerNs;
    if (text == "ns") return Unit::Ns;
    if (text == "us" || text == "µs") return Unit::Us;
    if (text == "G" || text == "Gauss") return Unit::Gauss;
    if (text == "mW") return Unit::MilliWatt;
    throw UnitError("unsupported unit '" + std::string(text) + "'");
}

double unit_convert(double value, Unit from, Unit to, FrequencyConvention convention) {
    const Dimension df = dimension_of(from);
    const Dimension dt = dimension_of(to);
    if (df == dt) return from_base(to_base(value, from, convention), to, convention);

    // Larmor conversion, g = 1.
    if (df == Dimension::Field && dt == Dimension::Frequency) {
        const double mhz = value * kBohrMagnetonMHzPerGauss;
        return unit_convert(mhz, Unit::MHz, to, convention);
    }
    if (df == Dimension::Frequency && dt == Dimension::Field) {
        const double mhz = unit_convert(value, from, Unit::MHz, convention);
        return mhz / kBohrMagnetonMHzPerGauss;
    }
    throw UnitError("cannot convert " + to_string(from) + " to " + to_string(to));
}

}  // namespace warmmem
