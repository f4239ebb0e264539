// Acceptance report: one PASS/FAIL line per criterion, informational lines
// indented below it. Exit status is nonzero if any criterion fails.
//
// Usage: acceptance <path to warmmem executable>

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "test_support.hpp"
#include "warmmem/config.hpp"
#include "warmmem/dephasing.hpp"
#include "warmmem/fit.hpp"
#include "warmmem/maxwell_bloch.hpp"
#include "warmmem/noise.hpp"

using namespace warmmem;
namespace fs = std::filesystem;

namespace {

constexpr double kPs = 84.0;
constexpr double kKappa = 0.12;
constexpr double kDeg = std::numbers::pi / 180.0;

int g_failures = 0;

void verdict(int id, bool pass, const std::string& text) {
    std::printf("[%s] %2d %s\n", pass ? "PASS" : "FAIL", id, text.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void info(const std::string& text) {
    std::printf("       %s\n", text.c_str());
    std::fflush(stdout);
}

std::string num(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

bool in_range(double v, double lo, double hi) { return v >= lo && v <= hi; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

NoiseModelParams reference_model(bool antistokes_pass = true) {
    NoiseModelParams m;
    m.p_sat_mw = kPs;
    m.kappa = kKappa;
    m.filter_passes_antistokes = antistokes_pass;
    return m;
}

struct ReferenceSetup {
    EnsembleParams params = EnsembleParams::reference_defaults();
    Grid grid = testing::reference_grid();
    ControlPulse pulse = testing::reference_pulse(grid);
};

// ---- 1, 2 -------------------------------------------------------------------

void plateau_and_fractions(const ReferenceSetup& s, const NoiseCalculator& calc) {
    const double p = -10.0 * kPs;
    const auto t0 = std::chrono::steady_clock::now();
    const double observed = calc.observed(p, reference_model());
    const double runtime = seconds_since(t0);

    verdict(1, in_range(observed, 0.15, 0.35) && runtime <= 300.0,
            "noise plateau at P = -10 Ps: observed " + num(observed) + " photons/pulse, required [0.15, 0.35]; runtime " +
                num(runtime, 3) + " s (limit 300 s)");
    const NoiseBudget b = calc.budget_at_power(p, kPs);
    info("S_total = " + num(b.s_total) + " (Stokes " + num(b.stokes()) + ", anti-Stokes " + num(b.antistokes()) +
         "), kappa = " + num(kKappa));
    info("observed at P = -Ps: " + num(calc.observed(-kPs, reference_model())) +
         ", at P = -Ps/2: " + num(calc.observed(-0.5 * kPs, reference_model())));
    info("grid " + std::to_string(s.grid.nz) + " x " + std::to_string(s.grid.ntau));

    const double fraction = b.antistokes() / b.s_total;
    const double filtered = calc.observed(p, reference_model(false));
    const double snr = snr_estimate(1.0, filtered);
    verdict(2, in_range(fraction, 0.50, 0.70) && in_range(filtered, 0.06, 0.14) && in_range(snr, 7.0, 14.0),
            "anti-Stokes fraction " + num(fraction) + " (req [0.50, 0.70]); filtered noise " + num(filtered) +
                " (req [0.06, 0.14]); SNR " + num(snr) + " (req [7, 14])");
}

// ---- 3 ----------------------------------------------------------------------

void red_branch(const NoiseCalculator& calc) {
    std::vector<double> p, y;
    for (int k = 1; k <= 12; ++k) {
        p.push_back(3.0 * kPs * k / 12.0);
        y.push_back(calc.observed(p.back(), reference_model()));
    }
    bool increasing = true;
    for (std::size_t k = 1; k < y.size(); ++k) increasing &= y[k] > y[k - 1];

    const int n = static_cast<int>(p.size());
    Eigen::MatrixXd a(n, 2);
    Eigen::VectorXd v(n);
    for (int k = 0; k < n; ++k) {
        a(k, 0) = 1.0;
        a(k, 1) = p[k];
        v[k] = y[k];
    }
    const Eigen::Vector2d coef = a.colPivHouseholderQr().solve(v);
    const double ss_res = (a * coef - v).squaredNorm();
    const double ss_tot = (v.array() - v.mean()).square().sum();
    const double r2 = 1.0 - ss_res / ss_tot;
    verdict(3, increasing && r2 > 0.95,
            "red branch over (0, 3 Ps] (12 points): strictly increasing = " + std::string(increasing ? "yes" : "no") +
                ", linear R^2 = " + num(r2) + " (req > 0.95)");
    info("observed from " + num(y.front()) + " at " + num(p.front()) + " mW to " + num(y.back()) + " at " +
         num(p.back()) + " mW; slope " + num(coef[1]) + " per mW");
}

// ---- 4 ----------------------------------------------------------------------

void dephasing_lifetime() {
    const auto t0 = std::chrono::steady_clock::now();
    const SpinSystem system;
    const MagneticField field = MagneticField::from_degrees(0.13, 30.0, 25.0);
    const auto t_e = one_over_e_time(field, system, uniform_populations());
    const double at_1us = efficiency_curve({1000.0}, field, system, uniform_populations(), 0.30)[0].eta_scaled;
    const double runtime = seconds_since(t0);
    const bool ok = t_e && in_range(*t_e, 1100.0, 1900.0) && in_range(at_1us, 0.15, 0.25) && runtime <= 10.0;
    verdict(4, ok,
            "dephasing: 1/e time " + (t_e ? num(*t_e * 1e-3) + " us" : std::string("none")) +
                " (req [1.1, 1.9] us); scaled efficiency at 1 us " + num(at_1us) + " (req [0.15, 0.25]); runtime " +
                num(runtime, 3) + " s (limit 10 s)");
    if (t_e) info("time-bandwidth product " + num(*t_e * 1.5) + " (1/e time x 1.5 GHz)");
}

// ---- 5 ----------------------------------------------------------------------

void shape_invariance(const ReferenceSetup& s, const NoiseCalculator& gaussian) {
    const Grid g = Grid::for_pulse(testing::kPulseFwhmNs, s.grid.nz, s.grid.ntau,
                                   containment_span_factor(PulseShape::Square));
    const NoiseCalculator square(s.params, testing::reference_pulse(g, PulseShape::Square), g);
    const NoiseBudget a = gaussian.budget_at_power(-10.0 * kPs, kPs);
    const NoiseBudget b = square.budget_at_power(-10.0 * kPs, kPs);
    const double ca[] = {a.s_stokes_spont, a.s_stokes_fwm, a.s_antistokes_spont, a.s_antistokes_fwm, a.s_total};
    const double cb[] = {b.s_stokes_spont, b.s_stokes_fwm, b.s_antistokes_spont, b.s_antistokes_fwm, b.s_total};
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) worst = std::max(worst, std::abs(cb[k] / ca[k] - 1.0));
    verdict(5, worst < 0.01,
            "pulse shape: largest relative difference gaussian vs square over all budget components " + num(worst) +
                " (req < 0.01)");
}

// ---- 6 ----------------------------------------------------------------------

std::vector<double> commutators(const EnsembleParams& params, const Grid& grid) {
    const ControlPulse pulse = testing::reference_pulse(grid);
    const GreensKernels k = greens_kernels(params, pulse, PumpState::from_p3(0.0), grid);
    std::vector<double> out;
    for (double frac : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
        const double tau = frac * testing::kPulseFwhmNs;
        const int i = static_cast<int>(std::lround((tau - grid.tau_min) / grid.dtau()));
        out.push_back(k.stokes_commutator(i));
    }
    return out;
}

double max_deviation(const std::vector<double>& c) {
    double m = 0.0;
    for (double v : c) m = std::max(m, std::abs(v - 1.0));
    return m;
}

std::string list(const std::vector<double>& c) {
    std::string s;
    for (double v : c) s += (s.empty() ? "" : ", ") + num(v, 8);
    return s;
}

void commutation(const ReferenceSetup& s) {
    const Grid doubled = s.grid.refined(2);
    const auto c1 = commutators(s.params, s.grid);
    const auto c2 = commutators(s.params, doubled);
    const double e1 = max_deviation(c1), e2 = max_deviation(c2);
    verdict(6, e1 <= 1e-3 && e2 <= 2.5e-4,
            "commutation at p1 = 1, 5 output times in [-FWHM, FWHM]: max |C - 1| = " + num(e1) +
                " (req <= 1e-3) at default grid, " + num(e2) + " (req <= 2.5e-4) at doubled grid");
    info("default grid: " + list(c1));
    info("doubled grid: " + list(c2));

    const double loss = 1.0 - std::exp(-2.0 * s.params.d * s.params.gamma * s.params.gamma /
                                       (s.params.gamma * s.params.gamma + s.params.delta_s * s.params.delta_s));
    info("optical absorption of the Stokes mode through the cell, 1 - exp(-2 d gamma^2/|Gamma_S|^2) = " + num(loss));

    const EnsembleParams lossless = testing::lossless_params();
    const double l1 = max_deviation(commutators(lossless, s.grid));
    const double l2 = max_deviation(commutators(lossless, doubled));
    info("lossless limit (gamma -> 0 at fixed d gamma): max |C - 1| = " + num(l1) + " default, " + num(l2) +
         " doubled");
}

// ---- 7 ----------------------------------------------------------------------

void exact_invariants() {
    const SpinSystem system;
    double scaling = 0.0, unitarity = 0.0, flat = 0.0;
    for (auto [theta, phi] : {std::pair{30.0, 25.0}, {70.0, 140.0}, {10.0, 300.0}}) {
        const MagneticField f1 = MagneticField::from_degrees(0.13, theta, phi);
        const MagneticField f2 = MagneticField::from_degrees(0.26, theta, phi);
        const MagneticField f0 = MagneticField::from_degrees(0.0, theta, phi);
        const double e0 = retrieval_efficiency(0.0, f0, system, uniform_populations());
        for (double t : {0.0, 250.0, 1000.0, 3700.0, 12000.0}) {
            scaling = std::max(scaling, std::abs(retrieval_efficiency(t, f1, system, uniform_populations()) -
                                                 retrieval_efficiency(t / 2.0, f2, system, uniform_populations())));
            const Eigen::MatrixXcd u = evolution_operator(f1, t, system);
            const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(u.rows(), u.cols());
            unitarity = std::max(unitarity, (u.adjoint() * u - id).cwiseAbs().maxCoeff());
            flat = std::max(flat, std::abs(retrieval_efficiency(t, f0, system, uniform_populations()) - e0));
        }
    }
    const double pump0 = std::abs(pump_populations(0.0, kPs).p3() - 0.5);
    const double pump1 = std::abs(pump_populations(kPs, kPs).p3() - 0.75);
    const bool ok = scaling < 1e-12 && unitarity < 1e-10 && flat < 1e-12 && pump0 <= 1e-12 && pump1 <= 1e-12;
    verdict(7, ok,
            "exact invariants: B t scaling " + num(scaling, 3) + " (< 1e-12), unitarity " + num(unitarity, 3) +
                " (< 1e-10), B = 0 constancy " + num(flat, 3) + " (< 1e-12), p3(0) error " + num(pump0, 3) +
                ", p3(Ps) error " + num(pump1, 3) + " (<= 1e-12)");
}

// ---- 8 ----------------------------------------------------------------------

bool within(double value, double truth, double rel) { return std::abs(value / truth - 1.0) <= rel; }

int noise_round_trips(const NoiseCalculator& calc) {
    const std::vector<double> powers = {-840, -420, -168, -84, -42, 21, 42, 84, 168, 252};
    std::vector<double> clean;
    for (double p : powers) clean.push_back(calc.observed(p, reference_model()));
    const NoiseSurface surface(calc);
    int ok = 0;
    for (int seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(7000 + seed);
        std::normal_distribution<double> noise(0.0, 0.02);
        std::uniform_real_distribution<double> offset(-0.5, 0.5);
        std::vector<NoisePoint> data;
        for (std::size_t k = 0; k < powers.size(); ++k) data.push_back({powers[k], clean[k] * (1.0 + noise(rng))});
        NoiseFitOptions opts;
        opts.p_sat_guess = kPs * (1.0 + offset(rng));
        opts.kappa_guess = kKappa * (1.0 + offset(rng));
        const FitResult r = fit_noise_curve(data, surface, opts);
        ok += r.converged && within(r.parameters[0], kPs, 0.1) && within(r.parameters[1], kKappa, 0.1);
    }
    return ok;
}

int dephasing_round_trips(double t_max_ns, int n_points) {
    const SpinSystem system;
    const MagneticField truth = MagneticField::from_degrees(0.13, 30.0, 25.0);
    const Eigen::Vector4d p0(0.13, 30.0 * kDeg, 25.0 * kDeg, 0.30);
    std::vector<double> times;
    for (int k = 0; k < n_points; ++k) times.push_back(t_max_ns * k / (n_points - 1));
    const auto clean = efficiency_curve(times, truth, system, uniform_populations(), 0.30);
    int ok = 0;
    for (int seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(1000 + seed);
        std::normal_distribution<double> noise(0.0, 0.02);
        std::uniform_real_distribution<double> offset(-0.5, 0.5);
        std::vector<EfficiencyPoint> data;
        for (const auto& row : clean) data.push_back({row.t_ns, row.eta_scaled * (1.0 + noise(rng))});
        DephasingFitOptions opts;
        Eigen::Vector4d guess;
        for (int k = 0; k < 4; ++k) guess[k] = p0[k] * (1.0 + offset(rng));
        opts.initial_guess = guess;
        const FitResult r = fit_dephasing_curve(data, system, uniform_populations(), opts);
        bool good = r.converged;
        for (int k = 0; k < 4; ++k) good &= within(r.parameters[k], p0[k], 0.1);
        ok += good;
    }
    return ok;
}

std::vector<HistogramBin> fluorescence_histogram(double amplitude, double lifetime, std::mt19937_64* rng) {
    std::normal_distribution<double> noise(0.0, 0.02);
    std::vector<HistogramBin> bins;
    for (int k = 0; k < 300; ++k) {
        const double t = 0.5 * k;
        const double clean = amplitude * std::exp(-t / lifetime);
        bins.push_back({t, rng ? clean * (1.0 + noise(*rng)) : clean});
    }
    return bins;
}

void round_trips(const NoiseCalculator& calc) {
    const int noise_ok = noise_round_trips(calc);
    const int deph_ok = dephasing_round_trips(8000.0, 81);

    int fluor_ok = 0;
    for (int seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(3000 + seed);
        const FitResult r = fit_fluorescence_tail(fluorescence_histogram(1000.0, 30.5, &rng), 0.0, 149.5);
        fluor_ok += r.converged && within(r.parameters[0], 1000.0, 0.1) && within(r.parameters[1], 30.5, 0.1);
    }
    const FitResult exact = fit_fluorescence_tail(fluorescence_histogram(1000.0, 30.5, nullptr), 0.0, 149.5);
    const double exact_err = std::abs(exact.parameters[1] / 30.5 - 1.0);

    const bool ok = noise_ok >= 19 && deph_ok >= 19 && fluor_ok >= 19 && exact.converged && exact_err <= 1e-6;
    verdict(8, ok,
            "round-trip fits within 10% (req >= 19/20 seeds): noise " + std::to_string(noise_ok) + "/20, dephasing " +
                std::to_string(deph_ok) + "/20, fluorescence " + std::to_string(fluor_ok) +
                "/20; noiseless 30.5 ns lifetime relative error " + num(exact_err, 3) + " (req <= 1e-6)");
    info("dephasing data 0-8 us, 81 points; noise data at 10 pump powers from -10 Ps to 3 Ps");
    info("dephasing with 0-4 us data only (41 points): " + std::to_string(dephasing_round_trips(4000.0, 41)) +
         "/20 seeds recovered");
}

// ---- 9 ----------------------------------------------------------------------

void grid_convergence(const ReferenceSetup& s, const NoiseCalculator& calc) {
    const Grid doubled = s.grid.refined(2);
    const PumpState pump = pump_populations(-10.0 * kPs, kPs);
    const double fine = raman_noise(s.params, testing::reference_pulse(doubled), pump, doubled).s_total;
    const double coarse = calc.budget(pump).s_total;
    const double change = std::abs(fine / coarse - 1.0);
    verdict(9, change < 0.01,
            "grid convergence at P = -10 Ps: S_total " + num(coarse, 8) + " -> " + num(fine, 8) +
                " on doubling nz and ntau, relative change " + num(change, 3) + " (req < 0.01)");
}

// ---- 10 ---------------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

// Runs `args` in `dir` with stdout/stderr captured; returns the concatenation of
// both streams and every listed output file.
std::string run_capture(const std::string& exe, const fs::path& dir, const std::string& args,
                        const std::vector<std::string>& outputs, int* status) {
    for (const auto& o : outputs) fs::remove(dir / o);
    const std::string cmd = "cd '" + dir.string() + "' && '" + exe + "' " + args + " > stdout.txt 2> stderr.txt";
    *status = std::system(cmd.c_str());
    std::string all = slurp(dir / "stdout.txt") + "\x1f" + slurp(dir / "stderr.txt");
    for (const auto& o : outputs) all += "\x1f" + slurp(dir / o);
    return all;
}

void reproducibility(const std::string& exe) {
    if (exe.empty() || !fs::exists(exe)) {
        verdict(10, false, "reproducibility: warmmem executable not given or missing ('" + exe + "')");
        return;
    }
    const fs::path dir = fs::temp_directory_path() / ("warmmem_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "small.cfg");
        cfg << "# reduced grid for fast repeated runs\nnz = 60\nntau = 240\n";
        std::ofstream fl(dir / "fluor.csv");
        fl << "t_ns,counts\n";
        for (int k = 0; k < 200; ++k) fl << format_double(0.5 * k) << "," << format_double(800.0 * std::exp(-0.5 * k / 30.5) + 3.0) << "\n";
    }
    // Inputs for the fit commands come from the simulators themselves.
    int status = 0;
    run_capture(exe, dir, "simulate-noise --config small.cfg --pump -840,-420,-168,-84,-42,21,42,84,168,252 -o noise_sim.csv",
                {}, &status);
    {
        std::ifstream in(dir / "noise_sim.csv");
        std::ofstream outf(dir / "noise.csv");
        outf << "pump_mw,counts\n";
        for (std::string line; std::getline(in, line);) {
            if (line.empty() || line[0] == '#' || line[0] == 'p') continue;
            outf << line.substr(0, line.find(',')) << "," << line.substr(line.rfind(',') + 1) << "\n";
        }
    }
    run_capture(exe, dir, "simulate-dephasing --t-max-us 8 --n-points 81 -o deph_sim.csv", {}, &status);
    {
        std::ifstream in(dir / "deph_sim.csv");
        std::ofstream outf(dir / "deph.csv");
        outf << "t_ns,efficiency\n";
        for (std::string line; std::getline(in, line);) {
            if (line.empty() || line[0] == '#' || line[0] == 't') continue;
            outf << line.substr(0, line.find(',')) << "," << line.substr(line.rfind(',') + 1) << "\n";
        }
    }

    struct Command {
        std::string args;
        std::vector<std::string> outputs;
    };
    const std::vector<Command> commands = {
        {"simulate-noise --config small.cfg --pump-range -420:252:5 -o n.csv --fractions f.csv --dump-kernels k.bin",
         {"n.csv", "f.csv", "k.bin"}},
        {"simulate-noise --config small.cfg --pump -84 --no-antistokes-filter-pass", {}},
        {"simulate-dephasing --t-max-us 4 --n-points 201 -o d.csv", {"d.csv"}},
        {"fit noise --config small.cfg --data noise.csv --report fn.json", {"fn.json"}},
        {"fit dephasing --data deph.csv --report fd.json", {"fd.json"}},
        {"fit fluorescence --data fluor.csv --report ff.json", {"ff.json"}},
        {"sweep --config small.cfg --param kappa=0.1,0.12 --param d=1000,1900 --target noise --pump -84", {}},
        {"sweep --param b_gauss=0.1,0.13 --param theta_deg=20,30 --target dephasing -o s.csv", {"s.csv"}},
    };
    int identical = 0, succeeded = 0;
    std::vector<std::string> failures;
    for (const Command& c : commands) {
        int s1 = 0, s2 = 0;
        const std::string a = run_capture(exe, dir, c.args, c.outputs, &s1);
        const std::string b = run_capture(exe, dir, c.args, c.outputs, &s2);
        if (a == b) ++identical;
        else failures.push_back(c.args);
        if (s1 == 0 && s2 == 0) ++succeeded;
        else failures.push_back("(exit status " + std::to_string(s1) + ") " + c.args);
    }
    const int n = static_cast<int>(commands.size());
    verdict(10, identical == n && succeeded == n,
            "reproducibility: " + std::to_string(identical) + "/" + std::to_string(n) +
                " commands byte-identical across two runs (stdout, stderr and output files), " +
                std::to_string(succeeded) + "/" + std::to_string(n) + " exited 0");
    for (const auto& f : failures) info("differs or failed: " + f);
    std::error_code ec;
    fs::remove_all(dir, ec);
}

}  // namespace

int main(int argc, char** argv) {
    const std::string exe = argc > 1 ? fs::absolute(argv[1]).string() : "";
    const auto t0 = std::chrono::steady_clock::now();
    std::printf("acceptance criteria (d = 1900, gamma = 16 MHz, Delta = 15 GHz, W = 30 GHz, Ps = 84 mW, kappa = 0.12)\n");

    try {
        const ReferenceSetup setup;
        const NoiseCalculator calc(setup.params, setup.pulse, setup.grid);
        plateau_and_fractions(setup, calc);
        red_branch(calc);
        dephasing_lifetime();
        shape_invariance(setup, calc);
        commutation(setup);
        exact_invariants();
        round_trips(calc);
        grid_convergence(setup, calc);
        reproducibility(exe);
    } catch (const std::exception& e) {
        std::printf("[FAIL] aborted: %s\n", e.what());
        return 1;
    }

    std::printf("%d of 10 criteria failed; total time %.1f s\n", g_failures, seconds_since(t0));
    return g_failures == 0 ? 0 : 1;
}
