#include "warmmem/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

#include "warmmem/errors.hpp"

namespace warmmem {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

int parse_int(std::string_view text, std::string_view what) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw ParseError(std::string(what) + ": expected an integer, got '" + std::string(text) + "'");
    return v;
}

bool parse_bool(std::string_view text, std::string_view what) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ParseError(std::string(what) + ": expected true or false, got '" + std::string(text) + "'");
}

std::string polarization_text(const PolarizationConfig& p) {
    return p.control == LinearPolarization::Vertical ? "control-vertical" : "signal-vertical";
}

struct Key {
    const char* name;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define WARMMEM_DOUBLE_KEY(member)                                                                   \
    Key {                                                                                            \
        #member, [](RunConfig& c, std::string_view v) { c.member = parse_double(v, #member); },     \
            [](const RunConfig& c) { return format_double(c.member); }                               \
    }

const std::vector<Key>& keys() {
    static const std::vector<Key> table = {
        WARMMEM_DOUBLE_KEY(d),
        WARMMEM_DOUBLE_KEY(gamma_mhz),
        WARMMEM_DOUBLE_KEY(detuning_ghz),
        WARMMEM_DOUBLE_KEY(stokes_shift_ghz),
        {"convention",
         [](RunConfig& c, std::string_view v) {
             try {
                 c.convention = parse_convention(v);
             } catch (const std::exception& e) {
                 throw ParseError(std::string("convention: ") + e.what());
             }
         },
         [](const RunConfig& c) { return to_string(c.convention); }},
        {"pulse_shape",
         [](RunConfig& c, std::string_view v) {
             try {
                 c.pulse_shape = parse_pulse_shape(v);
             } catch (const std::exception& e) {
                 throw ParseError(std::string("pulse_shape: ") + e.what());
             }
         },
         [](const RunConfig& c) { return to_string(c.pulse_shape); }},
        WARMMEM_DOUBLE_KEY(pulse_fwhm_ns),
        WARMMEM_DOUBLE_KEY(pulse_energy_ghz),
        {"nz", [](RunConfig& c, std::string_view v) { c.nz = parse_int(v, "nz"); },
         [](const RunConfig& c) { return std::to_string(c.nz); }},
        {"ntau", [](RunConfig& c, std::string_view v) { c.ntau = parse_int(v, "ntau"); },
         [](const RunConfig& c) { return std::to_string(c.ntau); }},
        {"tau_span_ns",
         [](RunConfig& c, std::string_view v) {
             if (v == "auto")
                 c.tau_span_ns.reset();
             else
                 c.tau_span_ns = parse_double(v, "tau_span_ns");
         },
         [](const RunConfig& c) { return c.tau_span_ns ? format_double(*c.tau_span_ns) : std::string("auto"); }},
        WARMMEM_DOUBLE_KEY(p_sat_mw),
        WARMMEM_DOUBLE_KEY(kappa),
        {"antistokes_pass",
         [](RunConfig& c, std::string_view v) { c.antistokes_pass = parse_bool(v, "antistokes_pass"); },
         [](const RunConfig& c) { return std::string(c.antistokes_pass ? "true" : "false"); }},
        WARMMEM_DOUBLE_KEY(b_gauss),
        WARMMEM_DOUBLE_KEY(theta_deg),
        WARMMEM_DOUBLE_KEY(phi_deg),
        WARMMEM_DOUBLE_KEY(scale),
        {"polarization",
         [](RunConfig& c, std::string_view v) {
             if (v == "control-vertical")
                 c.polarization = {LinearPolarization::Vertical, LinearPolarization::Horizontal};
             else if (v == "signal-vertical")
                 c.polarization = {LinearPolarization::Horizontal, LinearPolarization::Vertical};
             else
                 throw ParseError("polarization: expected control-vertical or signal-vertical, got '" +
                                  std::string(v) + "'");
         },
         [](const RunConfig& c) { return polarization_text(c.polarization); }},
    };
    return table;
}

#undef WARMMEM_DOUBLE_KEY

const Key* find_key(std::string_view name) {
    for (const Key& k : keys())
        if (name == k.name) return &k;
    return nullptr;
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
    return std::string(buf, ptr);
}

double parse_double(std::string_view text, std::string_view what) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v))
        throw ParseError(std::string(what) + ": expected a number, got '" + std::string(text) + "'");
    return v;
}

EnsembleParams RunConfig::ensemble() const {
    return EnsembleParams::from_quoted(d, gamma_mhz, detuning_ghz, stokes_shift_ghz, convention);
}

Grid RunConfig::grid() const {
    if (tau_span_ns) {
        Grid g{nz, ntau, -0.5 * *tau_span_ns, 0.5 * *tau_span_ns};
        g.validate();
        return g;
    }
    return Grid::for_pulse(pulse_fwhm_ns, nz, ntau, containment_span_factor(pulse_shape));
}

ControlPulse RunConfig::pulse() const {
    const double energy = unit_convert(pulse_energy_ghz, Unit::GHz, Unit::RadPerNs, convention);
    return ControlPulse::make(pulse_shape, pulse_fwhm_ns, energy, grid());
}

NoiseModelParams RunConfig::noise_model() const { return {p_sat_mw, kappa, antistokes_pass}; }

MagneticField RunConfig::field() const { return MagneticField::from_degrees(b_gauss, theta_deg, phi_deg); }

void RunConfig::validate() const {
    const auto need = [](bool ok, const char* key, const char* rule) {
        if (!ok) throw DomainError(std::string(key) + ": " + rule);
    };
    need(d >= 0.0, "d", "must be >= 0");
    need(gamma_mhz >= 0.0, "gamma_mhz", "must be >= 0");
    need(stokes_shift_ghz >= 0.0, "stokes_shift_ghz", "must be >= 0");
    need(pulse_fwhm_ns > 0.0, "pulse_fwhm_ns", "must be > 0");
    need(pulse_energy_ghz >= 0.0, "pulse_energy_ghz", "must be >= 0");
    need(nz >= 2, "nz", "must be >= 2");
    need(ntau >= 2, "ntau", "must be >= 2");
    need(!tau_span_ns || *tau_span_ns > 0.0, "tau_span_ns", "must be > 0");
    need(p_sat_mw > 0.0, "p_sat_mw", "must be > 0");
    need(kappa > 0.0 && kappa <= 1.0, "kappa", "must lie in (0, 1]");
    need(b_gauss >= 0.0, "b_gauss", "must be >= 0");
    need(scale > 0.0, "scale", "must be > 0");
    // Builds the derived objects once so that window and containment problems
    // surface before any computation.
    ensemble();
    try {
        pulse();
    } catch (const DomainError& e) {
        throw DomainError(std::string("pulse_shape/tau_span_ns: ") + e.what());
    }
}

std::string RunConfig::canonical_text() const {
    std::vector<std::pair<std::string, std::string>> entries;
    for (const Key& k : keys()) entries.emplace_back(k.name, k.get(*this));
    std::sort(entries.begin(), entries.end());
    std::string out;
    for (const auto& [k, v] : entries) out += k + " = " + v + "\n";
    return out;
}

std::uint64_t RunConfig::hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical_text()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
    const Key* k = find_key(trim(key));
    if (!k) throw ParseError("unknown config key '" + std::string(trim(key)) + "'");
    k->set(config, trim(value));
}

RunConfig parse_config(std::string_view text, const std::string& source) {
    RunConfig config;
    std::set<std::string> seen;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = source + ":" + std::to_string(line_no) + ": ";
        if (eq == std::string_view::npos) throw ParseError(where + "expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        if (!seen.insert(key).second) throw ParseError(where + "key '" + key + "' given twice");
        try {
            set_config_value(config, key, line.substr(eq + 1));
        } catch (const ParseError& e) {
            throw ParseError(where + e.what());
        }
    }
    config.validate();
    return config;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.string());
}

}  // namespace warmmem
