#include "warmmem/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <memory>
#include <optional>
#include <sstream>

#include "warmmem/config.hpp"
#include "warmmem/csv.hpp"
#include "warmmem/errors.hpp"
#include "warmmem/fit.hpp"
#include "warmmem/maxwell_bloch.hpp"
#include "warmmem/noise.hpp"

namespace warmmem {

namespace {

// Bad arguments or unreadable input: exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Finished but did not succeed (non-converged fit): exit code 1.
class ComputationFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr double kPulseBandwidthGhz = 1.5;

struct CommonOptions {
    std::string config_path;
    std::optional<double> d, gamma_mhz, detuning_ghz, stokes_shift_ghz, pulse_energy_ghz;
    std::string output;
    bool stamp = false;
};

void add_common(CLI::App* app, CommonOptions& o, bool with_output = true) {
    app->add_option("--config", o.config_path, "Config file (key = value)");
    app->add_option("--d", o.d, "Override optical depth");
    app->add_option("--gamma-mhz", o.gamma_mhz, "Override linewidth (MHz)");
    app->add_option("--detuning-ghz", o.detuning_ghz, "Override Stokes detuning (GHz)");
    app->add_option("--stokes-shift-ghz", o.stokes_shift_ghz, "Override Stokes shift (GHz)");
    app->add_option("--pulse-energy-ghz", o.pulse_energy_ghz, "Override control energy W (GHz)");
    if (with_output) {
        app->add_option("-o,--output", o.output, "Output CSV path (default: standard output)");
        app->add_flag("--stamp", o.stamp, "Add a timestamp line to the output header");
    }
}

RunConfig resolve_config(const CommonOptions& o) {
    RunConfig c;
    if (!o.config_path.empty()) {
        if (!std::filesystem::exists(o.config_path))
            throw UsageError("config file not found: '" + o.config_path + "'");
        c = load_config(o.config_path);
    }
    if (o.d) c.d = *o.d;
    if (o.gamma_mhz) c.gamma_mhz = *o.gamma_mhz;
    if (o.detuning_ghz) c.detuning_ghz = *o.detuning_ghz;
    if (o.stokes_shift_ghz) c.stokes_shift_ghz = *o.stokes_shift_ghz;
    if (o.pulse_energy_ghz) c.pulse_energy_ghz = *o.pulse_energy_ghz;
    c.validate();
    return c;
}

std::string hex64(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string header(const std::string& command, const RunConfig& c, bool stamp,
                   const std::vector<std::string>& extra = {}) {
    const Grid g = c.grid();
    std::string h = "# generated-by: warmmem " + command + "\n";
    h += "# config-hash: " + hex64(c.hash()) + "\n";
    h += "# convention: " + to_string(c.convention) + "\n";
    h += "# grid: nz=" + std::to_string(g.nz) + " ntau=" + std::to_string(g.ntau) + " tau_ns=[" +
         format_double(g.tau_min) + "," + format_double(g.tau_max) + "]\n";
    for (const std::string& e : extra) h += "# " + e + "\n";
    if (stamp) h += "# timestamp: " + utc_timestamp() + "\n";
    return h;
}

std::string join(const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
    return s + "\n";
}

// Writes to the output file if one was named, else to `out`. Summary text goes
// to `out` when the table went to a file and to `err` otherwise.
struct Sink {
    std::ostream& table;
    std::ostream& summary;
    std::unique_ptr<std::ofstream> file;
};

Sink open_sink(const std::string& path, std::ostream& out, std::ostream& err) {
    if (path.empty()) return {out, err, nullptr};
    auto f = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*f) throw UsageError("cannot write output file '" + path + "'");
    std::ostream& ref = *f;
    return {ref, out, std::move(f)};
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
    std::vector<double> values;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const std::string cell = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (cell.find_first_not_of(" \t") != std::string::npos) values.push_back(parse_double(cell, what));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return values;
}

std::vector<double> parse_range(const std::string& text) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto colon = text.find(':', start);
        parts.push_back(text.substr(start, colon == std::string::npos ? std::string::npos : colon - start));
        if (colon == std::string::npos) break;
        start = colon + 1;
    }
    if (parts.size() != 3) throw UsageError("--pump-range expects start:stop:count");
    const double a = parse_double(parts[0], "--pump-range start");
    const double b = parse_double(parts[1], "--pump-range stop");
    const double n = parse_double(parts[2], "--pump-range count");
    if (n < 1 || n != std::floor(n)) throw UsageError("--pump-range count must be a positive integer");
    std::vector<double> v;
    const int count = static_cast<int>(n);
    for (int i = 0; i < count; ++i) v.push_back(count == 1 ? a : a + (b - a) * i / (count - 1));
    return v;
}

// ---- simulate-noise -------------------------------------------------------

struct NoiseOptions {
    CommonOptions common;
    std::string pump;
    std::string pump_range;
    bool no_antistokes = false;
    std::optional<double> p_sat_mw, kappa;
    std::string dump_kernels;
    std::string fractions;
};

int cmd_simulate_noise(const NoiseOptions& o, std::ostream& out, std::ostream& err) {
    std::vector<double> powers = parse_list(o.pump, "--pump");
    if (!o.pump_range.empty()) {
        const auto r = parse_range(o.pump_range);
        powers.insert(powers.end(), r.begin(), r.end());
    }
    if (powers.empty()) throw UsageError("empty pump sweep: give --pump P1,P2,... or --pump-range start:stop:count");

    RunConfig c = resolve_config(o.common);
    if (o.no_antistokes) c.antistokes_pass = false;
    if (o.p_sat_mw) c.p_sat_mw = *o.p_sat_mw;
    if (o.kappa) c.kappa = *o.kappa;
    c.validate();

    const NoiseModelParams model = c.noise_model();
    const NoiseCalculator calc(c.ensemble(), c.pulse(), c.grid());
    const std::vector<NoiseRow> rows = noise_curve(powers, model, calc);

    std::string pump_text;
    for (double p : powers) pump_text += (pump_text.empty() ? "" : ",") + format_double(p);
    Sink sink = open_sink(o.common.output, out, err);
    sink.table << header("simulate-noise", c, o.common.stamp,
                         {"pump_mw: " + pump_text, std::string("antistokes_pass: ") + (c.antistokes_pass ? "true" : "false")});
    sink.table << "pump_mw,p1,p3,s_stokes_spont,s_stokes_fwm,s_as_spont,s_as_fwm,s_total,s_observed\n";
    for (const NoiseRow& r : rows)
        sink.table << join({format_double(r.pump_mw), format_double(r.p1), format_double(r.p3),
                            format_double(r.budget.s_stokes_spont), format_double(r.budget.s_stokes_fwm),
                            format_double(r.budget.s_antistokes_spont), format_double(r.budget.s_antistokes_fwm),
                            format_double(r.budget.s_total), format_double(r.s_observed)});
    sink.table.flush();

    if (!o.fractions.empty()) {
        const auto frac = stokes_fraction_curve(powers, c.p_sat_mw, calc);
        std::ofstream f(o.fractions, std::ios::binary);
        if (!f) throw UsageError("cannot write fractions file '" + o.fractions + "'");
        f << header("simulate-noise fractions", c, o.common.stamp, {"pump_mw: " + pump_text});
        f << "pump_mw,stokes_fraction,antistokes_fraction\n";
        for (const FractionRow& r : frac)
            f << join({format_double(r.pump_mw), format_double(r.stokes_fraction), format_double(r.antistokes_fraction)});
    }

    if (!o.dump_kernels.empty()) {
        const PumpState pump = pump_populations(powers.front(), c.p_sat_mw);
        const GreensKernels k = greens_kernels(c.ensemble(), c.pulse(), pump, c.grid());
        nlohmann::ordered_json h;
        h["format"] = "warmmem-kernels-1";
        h["config_hash"] = hex64(c.hash());
        h["convention"] = to_string(c.convention);
        h["d"] = c.d;
        h["gamma_mhz"] = c.gamma_mhz;
        h["detuning_ghz"] = c.detuning_ghz;
        h["stokes_shift_ghz"] = c.stokes_shift_ghz;
        h["pulse_shape"] = to_string(c.pulse_shape);
        h["pulse_fwhm_ns"] = c.pulse_fwhm_ns;
        h["pulse_energy_ghz"] = c.pulse_energy_ghz;
        h["pump_mw"] = powers.front();
        h["p1"] = pump.p1();
        h["p3"] = pump.p3();
        write_kernels(o.dump_kernels, k, h.dump());
        for (const std::string& w : k.warnings) sink.summary << "warning: " << w << "\n";
    }

    // Summary at the most strongly blue-pumped point of the sweep.
    const NoiseRow* low = &rows.front();
    for (const NoiseRow& r : rows)
        if (r.pump_mw < low->pump_mw) low = &r;
    const std::string label = low->pump_mw < 0.0 ? "plateau" : "lowest pump power";
    sink.summary << label << " (P = " << format_double(low->pump_mw) << " mW): observed noise "
                 << format_double(low->s_observed) << " photons/pulse\n";
    if (low->budget.s_total > 0.0)
        sink.summary << "anti-Stokes fraction at P = " << format_double(low->pump_mw)
                     << " mW: " << format_double(low->budget.antistokes() / low->budget.s_total) << "\n";
    return 0;
}

// ---- simulate-dephasing ---------------------------------------------------

struct DephasingOptions {
    CommonOptions common;
    std::optional<double> b_gauss, theta_deg, phi_deg, scale;
    double t_max_us = 4.0;
    int n_points = 201;
    std::string polarization;
};

int cmd_simulate_dephasing(const DephasingOptions& o, std::ostream& out, std::ostream& err) {
    RunConfig c = resolve_config(o.common);
    if (o.b_gauss) c.b_gauss = *o.b_gauss;
    if (o.theta_deg) c.theta_deg = *o.theta_deg;
    if (o.phi_deg) c.phi_deg = *o.phi_deg;
    if (o.scale) c.scale = *o.scale;
    if (!o.polarization.empty()) set_config_value(c, "polarization", o.polarization);
    c.validate();
    if (!(o.t_max_us > 0.0)) throw UsageError("--t-max-us must be > 0");
    if (o.n_points < 2) throw UsageError("--n-points must be >= 2");

    const SpinSystem system(c.polarization);
    const MagneticField field = c.field();
    const double t_max_ns = o.t_max_us * 1e3;
    std::vector<double> times;
    for (int i = 0; i < o.n_points; ++i) times.push_back(t_max_ns * i / (o.n_points - 1));
    const auto rows = efficiency_curve(times, field, system, uniform_populations(), c.scale);

    Sink sink = open_sink(o.common.output, out, err);
    sink.table << header("simulate-dephasing", c, o.common.stamp,
                         {"field: b_gauss=" + format_double(c.b_gauss) + " theta_deg=" + format_double(c.theta_deg) +
                          " phi_deg=" + format_double(c.phi_deg) + " scale=" + format_double(c.scale)});
    sink.table << "t_ns,eta_relative,eta_scaled\n";
    for (const auto& r : rows)
        sink.table << join({format_double(r.t_ns), format_double(r.eta_relative), format_double(r.eta_scaled)});
    sink.table.flush();

    const double search_ns = std::max(t_max_ns, 20000.0);
    const auto t_e = one_over_e_time(field, system, uniform_populations(), search_ns);
    if (t_e) {
        sink.summary << "1/e time: " << format_double(*t_e * 1e-3) << " us\n";
        sink.summary << "time-bandwidth product: " << format_double(*t_e * kPulseBandwidthGhz) << " (1/e time x "
                     << format_double(kPulseBandwidthGhz) << " GHz)\n";
    } else {
        sink.summary << "1/e time: unbounded (no decay to 1/e within " << format_double(search_ns * 1e-3)
                     << " us)\n";
    }
    return 0;
}

// ---- fit ------------------------------------------------------------------

struct FitCommandOptions {
    CommonOptions common;
    std::string data;
    std::string report;
    bool fix_b_zero = false;
    std::optional<double> t_start, t_end;
};

CsvTable read_data(const std::string& path, const std::vector<std::string>& required,
                   const std::vector<std::string>& optional) {
    if (path.empty()) throw UsageError("--data is required");
    if (!std::filesystem::exists(path)) throw UsageError("data file not found: '" + path + "'");
    try {
        return ingest_csv(path, required, optional);
    } catch (const ParseError&) {
        throw;
    } catch (const std::runtime_error& e) {
        throw UsageError(e.what());
    }
}

double cell(const CsvTable& t, std::size_t row, const std::string& name, double fallback) {
    const int c = t.column(name);
    return c < 0 ? fallback : t.rows[row][c];
}

int report_fit(const std::string& kind, const FitResult& r, const FitCommandOptions& o, std::ostream& out) {
    out << "fit: " << kind << "\n";
    for (Eigen::Index k = 0; k < r.parameters.size(); ++k)
        out << r.names[k] << " = " << format_double(r.parameters[k]) << " +/- " << format_double(r.uncertainties[k])
            << "\n";
    out << "residual_norm = " << format_double(r.residual_norm) << "\n";
    out << "iterations = " << r.iterations << "\n";
    out << "converged = " << (r.converged ? "true" : "false") << "\n";
    out << "termination = " << r.termination << "\n";
    for (const std::string& d : r.diagnostics) out << "diagnostic: " << d << "\n";

    if (!o.report.empty()) {
        nlohmann::ordered_json j;
        j["fit"] = kind;
        for (Eigen::Index k = 0; k < r.parameters.size(); ++k) {
            j["parameters"][r.names[k]] = r.parameters[k];
            j["uncertainties"][r.names[k]] = r.uncertainties[k];
        }
        j["residual_norm"] = r.residual_norm;
        j["iterations"] = r.iterations;
        j["converged"] = r.converged;
        j["termination"] = r.termination;
        j["diagnostics"] = r.diagnostics;
        std::vector<std::vector<double>> cov;
        for (Eigen::Index a = 0; a < r.covariance_estimate.rows(); ++a) {
            cov.emplace_back();
            for (Eigen::Index b = 0; b < r.covariance_estimate.cols(); ++b) cov.back().push_back(r.covariance_estimate(a, b));
        }
        j["covariance"] = cov;
        std::ofstream f(o.report, std::ios::binary);
        if (!f) throw UsageError("cannot write report '" + o.report + "'");
        f << j.dump(2) << "\n";
    }
    if (!r.converged) throw ComputationFailure("fit did not converge: " + r.termination);
    return 0;
}

int cmd_fit_noise(const FitCommandOptions& o, std::ostream& out) {
    const RunConfig c = resolve_config(o.common);
    const CsvTable t = read_data(o.data, {"pump_mw", "counts"}, {"sigma"});
    std::vector<NoisePoint> data;
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        data.push_back({cell(t, i, "pump_mw", 0), cell(t, i, "counts", 0), cell(t, i, "sigma", 1.0)});
    if (data.size() < 4) throw UsageError("noise fit needs at least four data rows");
    NoiseFitOptions opts;
    opts.p_sat_guess = c.p_sat_mw;
    opts.kappa_guess = c.kappa;
    opts.filter_passes_antistokes = c.antistokes_pass;
    const NoiseCalculator calc(c.ensemble(), c.pulse(), c.grid());
    const NoiseSurface surface(calc);
    return report_fit("noise", fit_noise_curve(data, surface, opts), o, out);
}

int cmd_fit_dephasing(const FitCommandOptions& o, std::ostream& out) {
    const RunConfig c = resolve_config(o.common);
    const CsvTable t = read_data(o.data, {"t_ns", "efficiency"}, {"sigma"});
    std::vector<EfficiencyPoint> data;
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        data.push_back({cell(t, i, "t_ns", 0), cell(t, i, "efficiency", 0), cell(t, i, "sigma", 1.0)});
    if (data.size() < 5) throw UsageError("dephasing fit needs at least five data rows");
    DephasingFitOptions opts;
    const MagneticField f = c.field();
    opts.initial_guess = Eigen::Vector4d(std::min(c.b_gauss, 1.0), f.theta(), f.phi(), std::min(c.scale, 1.0));
    opts.fix_b_zero = o.fix_b_zero;
    const SpinSystem system(c.polarization);
    FitResult r = fit_dephasing_curve(data, system, uniform_populations(), opts);
    return report_fit("dephasing", r, o, out);
}

int cmd_fit_fluorescence(const FitCommandOptions& o, std::ostream& out) {
    const CsvTable t = read_data(o.data, {"t_ns", "counts"}, {});
    if (t.rows.empty()) throw UsageError("histogram has no rows");
    std::vector<HistogramBin> bins;
    std::size_t peak = 0;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        bins.push_back({cell(t, i, "t_ns", 0), cell(t, i, "counts", 0)});
        if (bins[i].counts > bins[peak].counts) peak = i;
    }
    double last = bins.front().t_ns;
    for (const auto& b : bins) last = std::max(last, b.t_ns);
    const double start = o.t_start.value_or(bins[peak].t_ns);
    const double end = o.t_end.value_or(last);
    return report_fit("fluorescence", fit_fluorescence_tail(bins, start, end), o, out);
}

// ---- sweep ----------------------------------------------------------------

struct SweepOptions {
    CommonOptions common;
    std::vector<std::string> params;
    std::string target = "noise";
    double pump_mw = 0.0;
};

int cmd_sweep(const SweepOptions& o, std::ostream& out, std::ostream& err) {
    if (o.params.empty()) throw UsageError("sweep needs at least one --param key=v1,v2,...");
    if (o.target != "noise" && o.target != "dephasing") throw UsageError("--target must be noise or dephasing");
    const RunConfig base = resolve_config(o.common);

    std::vector<std::string> keys;
    std::vector<std::vector<std::string>> values;
    for (const std::string& spec : o.params) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--param expects key=v1,v2,... got '" + spec + "'");
        keys.push_back(spec.substr(0, eq));
        std::vector<std::string> vs;
        std::string rest = spec.substr(eq + 1);
        std::size_t start = 0;
        while (true) {
            const auto comma = rest.find(',', start);
            const std::string v = rest.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            if (!v.empty()) vs.push_back(v);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (vs.empty()) throw UsageError("--param '" + keys.back() + "' has no values");
        RunConfig probe = base;
        for (const std::string& v : vs) set_config_value(probe, keys.back(), v);
        values.push_back(vs);
    }

    Sink sink = open_sink(o.common.output, out, err);
    std::vector<std::string> extra;
    for (const std::string& spec : o.params) extra.push_back("param: " + spec);
    extra.push_back("target: " + o.target);
    if (o.target == "noise") extra.push_back("pump_mw: " + format_double(o.pump_mw));
    sink.table << header("sweep", base, o.common.stamp, extra);
    std::vector<std::string> head = keys;
    if (o.target == "noise") {
        for (const char* h : {"pump_mw", "p3", "s_stokes_spont", "s_stokes_fwm", "s_as_spont", "s_as_fwm", "s_total",
                              "s_observed"})
            head.push_back(h);
    } else {
        head.push_back("t_one_over_e_ns");
        head.push_back("eta_scaled_1us");
    }
    sink.table << join(head);

    std::vector<std::size_t> idx(keys.size(), 0);
    while (true) {
        RunConfig c = base;
        std::vector<std::string> row;
        for (std::size_t k = 0; k < keys.size(); ++k) {
            set_config_value(c, keys[k], values[k][idx[k]]);
            row.push_back(values[k][idx[k]]);
        }
        c.validate();
        if (o.target == "noise") {
            const PumpState pump = pump_populations(o.pump_mw, c.p_sat_mw);
            const NoiseBudget b = raman_noise(c.ensemble(), c.pulse(), pump, c.grid());
            for (double v : {o.pump_mw, pump.p3(), b.s_stokes_spont, b.s_stokes_fwm, b.s_antistokes_spont,
                             b.s_antistokes_fwm, b.s_total, observed_from_budget(b, c.noise_model())})
                row.push_back(format_double(v));
        } else {
            const SpinSystem system(c.polarization);
            const auto t_e = one_over_e_time(c.field(), system, uniform_populations());
            row.push_back(t_e ? format_double(*t_e) : "inf");
            row.push_back(format_double(
                efficiency_curve({1000.0}, c.field(), system, uniform_populations(), c.scale)[0].eta_scaled));
        }
        sink.table << join(row);

        // Odometer over the value lists; the last key varies fastest.
        std::size_t k = keys.size();
        while (k > 0) {
            --k;
            if (++idx[k] < values[k].size()) break;
            idx[k] = 0;
            if (k == 0) return 0;
        }
        if (keys.empty()) return 0;
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Raman memory noise and dephasing toolkit", "warmmem"};
    app.require_subcommand(1);

    NoiseOptions noise;
    CLI::App* sim_noise = app.add_subcommand("simulate-noise", "Noise floor versus pump power");
    add_common(sim_noise, noise.common);
    sim_noise->add_option("--pump", noise.pump, "Comma-separated pump powers (mW, negative = blue)");
    sim_noise->add_option("--pump-range", noise.pump_range, "Linear sweep start:stop:count (mW)");
    sim_noise->add_flag("--no-antistokes-filter-pass", noise.no_antistokes, "Filter blocks anti-Stokes light");
    sim_noise->add_option("--p-sat-mw", noise.p_sat_mw, "Override saturation power (mW)");
    sim_noise->add_option("--kappa", noise.kappa, "Override mode-overlap scaling");
    sim_noise->add_option("--dump-kernels", noise.dump_kernels, "Write the kernels of the first pump point");
    sim_noise->add_option("--fractions", noise.fractions, "Write the Stokes/anti-Stokes fraction table");

    DephasingOptions deph;
    CLI::App* sim_deph = app.add_subcommand("simulate-dephasing", "Retrieval efficiency versus storage time");
    add_common(sim_deph, deph.common);
    sim_deph->add_option("--b-gauss", deph.b_gauss, "Field strength (G)");
    sim_deph->add_option("--theta-deg", deph.theta_deg, "Polar angle from vertical (deg)");
    sim_deph->add_option("--phi-deg", deph.phi_deg, "Azimuth from propagation (deg)");
    sim_deph->add_option("--scale", deph.scale, "Efficiency at t = 0");
    sim_deph->add_option("--t-max-us", deph.t_max_us, "Last storage time (us)");
    sim_deph->add_option("--n-points", deph.n_points, "Number of time points");
    sim_deph->add_option("--polarization", deph.polarization, "control-vertical or signal-vertical");

    FitCommandOptions fit_noise, fit_deph, fit_fluor;
    CLI::App* fit = app.add_subcommand("fit", "Least-squares fits");
    fit->require_subcommand(1);
    CLI::App* f_noise = fit->add_subcommand("noise", "Fit P_s and kappa (columns pump_mw,counts[,sigma])");
    CLI::App* f_deph = fit->add_subcommand("dephasing", "Fit B, theta, phi, scale (columns t_ns,efficiency[,sigma])");
    CLI::App* f_fluor = fit->add_subcommand("fluorescence", "Fit the fluorescence tail (columns t_ns,counts)");
    for (auto [sub, opts] : {std::pair{f_noise, &fit_noise}, {f_deph, &fit_deph}, {f_fluor, &fit_fluor}}) {
        add_common(sub, opts->common, false);
        sub->add_option("--data", opts->data, "Input CSV")->required();
        sub->add_option("--report", opts->report, "JSON report path");
    }
    f_deph->add_flag("--fix-b-zero", fit_deph.fix_b_zero, "Hold the field at zero");
    f_fluor->add_option("--t-start", fit_fluor.t_start, "Window start (ns, default: peak bin)");
    f_fluor->add_option("--t-end", fit_fluor.t_end, "Window end (ns, default: last bin)");

    SweepOptions sweep;
    CLI::App* sw = app.add_subcommand("sweep", "Cartesian parameter sweep, one row per point");
    add_common(sw, sweep.common);
    sw->add_option("--param", sweep.params, "key=v1,v2,... (repeatable)");
    sw->add_option("--target", sweep.target, "noise or dephasing");
    sw->add_option("--pump", sweep.pump_mw, "Pump power for noise targets (mW)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim_noise->parsed()) return cmd_simulate_noise(noise, out, err);
        if (sim_deph->parsed()) return cmd_simulate_dephasing(deph, out, err);
        if (f_noise->parsed()) return cmd_fit_noise(fit_noise, out);
        if (f_deph->parsed()) return cmd_fit_dephasing(fit_deph, out);
        if (f_fluor->parsed()) return cmd_fit_fluorescence(fit_fluor, out);
        if (sw->parsed()) return cmd_sweep(sweep, out, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const UnitError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const ComputationFailure& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace warmmem
