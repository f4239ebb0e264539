#include <chrono>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "test_support.hpp"
#include "warmmem/errors.hpp"
#include "warmmem/maxwell_bloch.hpp"

using namespace warmmem;

namespace {

Eigen::VectorXcd smooth_profile(const Grid& g, double center, double width, cplx amplitude) {
    Eigen::VectorXcd v(g.ntau);
    for (int k = 0; k < g.ntau; ++k) {
        const double x = (g.tau(k) - center) / width;
        v[k] = amplitude * std::exp(-x * x);
    }
    return v;
}

Eigen::VectorXcd spin_profile(const Grid& g) {
    Eigen::VectorXcd v(g.nz);
    for (int n = 0; n < g.nz; ++n) v[n] = cplx{std::sin(3.0 * g.z(n)), 0.5 * g.z(n) * g.z(n)};
    return v;
}

double rel_diff(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

ControlPulse zero_pulse(const Grid& g) {
    return ControlPulse::from_samples(std::vector<cplx>(g.ntau, 0.0), g.tau_min, g.tau_max);
}

}  // namespace

TEST_CASE("no control field gives pointwise Beer-Lambert attenuation") {
    const Grid g = testing::reference_grid(50, 200);
    const auto params = EnsembleParams::reference_defaults();
    const auto pump = PumpState::from_p3(0.2);
    BoundaryData in = BoundaryData::zeros(g);
    in.a_s_in = smooth_profile(g, 0.1, 0.3, {1.0, 0.4});
    in.a_as_dag_in = smooth_profile(g, -0.2, 0.2, {0.0, 1.0});

    const FieldState st = propagate_fields(params, zero_pulse(g), pump, in, g);
    const auto [gs, gas] = derived_detunings(params);
    const double dg = params.d * params.gamma;
    const cplx ts = std::exp(-dg * pump.p1() / gs);
    const cplx tas = std::exp(dg * pump.p3() / std::conj(gas));
    const Eigen::VectorXcd out_s = st.a_s.row(g.nz - 1).transpose();
    const Eigen::VectorXcd out_as = st.a_as_dag.row(g.nz - 1).transpose();
    CHECK(rel_diff(out_s, ts * in.a_s_in) < 1e-13);
    CHECK(rel_diff(out_as, tas * in.a_as_dag_in) < 1e-13);
    CHECK(st.b.norm() == 0.0);

    const GreensKernels k = greens_kernels(params, zero_pulse(g), pump, g);
    CHECK(k.g_s.norm() == 0.0);
    CHECK(k.g_as.norm() == 0.0);
    CHECK(k.l_s.norm() == 0.0);
    CHECK(k.l_as.norm() == 0.0);
    const Eigen::MatrixXcd expected = ts * Eigen::MatrixXcd::Identity(g.ntau, g.ntau);
    CHECK((k.k_s - expected).norm() < 1e-13 * expected.norm());
}

TEST_CASE("zero optical depth leaves fields unchanged") {
    const Grid g = testing::reference_grid(40, 400);
    EnsembleParams params = EnsembleParams::reference_defaults();
    params.d = 0.0;
    const auto pulse = testing::reference_pulse(g);
    BoundaryData in = BoundaryData::zeros(g);
    in.a_s_in = smooth_profile(g, 0.0, 0.3, {1.0, 0.0});
    in.a_as_dag_in = smooth_profile(g, 0.2, 0.3, {0.3, -0.2});
    in.b_in = spin_profile(g);

    const FieldState st = propagate_fields(params, pulse, PumpState::from_p3(0.5), in, g);
    CHECK((st.a_s.row(g.nz - 1).transpose() - in.a_s_in).norm() == 0.0);
    CHECK((st.a_as_dag.row(g.nz - 1).transpose() - in.a_as_dag_in).norm() == 0.0);

    // B only picks up exp(∫|Ω|²(1/Γ_S − 1/Γ*_AS)dτ).
    const auto [gs, gas] = derived_detunings(params);
    const cplx shift = 1.0 / gs - 1.0 / std::conj(gas);
    const cplx factor = std::exp(pulse.energy * shift);
    const Eigen::VectorXcd b_out = st.b.col(g.ntau - 1);
    CHECK(rel_diff(b_out, factor * in.b_in) < 1e-3);

    // The trapezoidal step reproduces its own discrete propagator exactly.
    cplx discrete = 1.0;
    const double h = 0.5 * g.dtau();
    for (int k = 1; k < g.ntau; ++k)
        discrete *= (1.0 + h * std::norm(pulse.shape[k - 1]) * shift) / (1.0 - h * std::norm(pulse.shape[k]) * shift);
    CHECK(rel_diff(b_out, discrete * in.b_in) < 1e-12);
}

TEST_CASE("solver input validation") {
    const Grid g = testing::reference_grid(20, 200);
    const auto pulse = testing::reference_pulse(g);
    const auto pump = PumpState::from_p3(0.0);

    EnsembleParams singular{10.0, 0.0, 0.0, 1.0};
    CHECK_THROWS_AS(greens_kernels(singular, pulse, pump, g), SingularDetuningError);

    const Grid coarse = testing::reference_grid(20, 100);
    CHECK_THROWS_AS(greens_kernels(EnsembleParams::reference_defaults(), testing::reference_pulse(coarse), pump, coarse),
                    ResolutionError);

    const Grid other = testing::reference_grid(20, 300);
    CHECK_THROWS_AS(greens_kernels(EnsembleParams::reference_defaults(), pulse, pump, other), DomainError);

    BoundaryData bad = BoundaryData::zeros(g);
    bad.b_in.resize(3);
    CHECK_THROWS_AS(propagate_fields(EnsembleParams::reference_defaults(), pulse, pump, bad, g), DomainError);
}

TEST_CASE("strong control raises the adiabaticity warning") {
    const Grid g = testing::reference_grid(20, 200);
    auto params = EnsembleParams::reference_defaults();
    const auto weak = greens_kernels(params, testing::reference_pulse(g), PumpState::from_p3(0.0), g);
    CHECK(weak.warnings.empty());
    const auto strong_pulse = ControlPulse::make(PulseShape::Gaussian, 0.3, 1e5, g);
    const auto strong = greens_kernels(params, strong_pulse, PumpState::from_p3(0.0), g);
    CHECK(strong.warnings.size() == 1);
}

TEST_CASE("kernels reproduce a direct solve and are linear") {
    const Grid g = testing::reference_grid(60, 240);
    const auto params = EnsembleParams::reference_defaults();
    const auto pulse = testing::reference_pulse(g);
    const auto pump = PumpState::from_p3(0.3);
    const GreensKernels k = greens_kernels(params, pulse, pump, g);

    BoundaryData u = BoundaryData::zeros(g);
    u.a_s_in = smooth_profile(g, -0.1, 0.25, {1.0, 0.2});
    u.a_as_dag_in = smooth_profile(g, 0.15, 0.2, {-0.4, 0.7});
    u.b_in = spin_profile(g);
    BoundaryData v = BoundaryData::zeros(g);
    v.a_s_in = smooth_profile(g, 0.3, 0.1, {0.0, 2.0});
    v.a_as_dag_in = smooth_profile(g, -0.3, 0.4, {1.0, 0.0});
    for (int n = 0; n < g.nz; ++n) v.b_in[n] = std::cos(5.0 * g.z(n));

    const FieldState st = propagate_fields(params, pulse, pump, u, g);
    const OutputFields out = k.apply(u);
    CHECK(rel_diff(out.a_s_out, st.a_s.row(g.nz - 1).transpose()) < 1e-8);
    CHECK(rel_diff(out.a_as_dag_out, st.a_as_dag.row(g.nz - 1).transpose()) < 1e-8);

    const cplx alpha{0.7, -1.3}, beta{-2.0, 0.25};
    BoundaryData w = BoundaryData::zeros(g);
    w.a_s_in = alpha * u.a_s_in + beta * v.a_s_in;
    w.a_as_dag_in = alpha * u.a_as_dag_in + beta * v.a_as_dag_in;
    w.b_in = alpha * u.b_in + beta * v.b_in;
    const FieldState su = st;
    const FieldState sv = propagate_fields(params, pulse, pump, v, g);
    const FieldState sw = propagate_fields(params, pulse, pump, w, g);
    const Eigen::MatrixXcd combo = alpha * su.a_s + beta * sv.a_s;
    CHECK((sw.a_s - combo).norm() <= 1e-10 * combo.norm());
    const Eigen::MatrixXcd combo_b = alpha * su.b + beta * sv.b;
    CHECK((sw.b - combo_b).norm() <= 1e-10 * combo_b.norm());
}

TEST_CASE("kernels are causal") {
    const Grid g = testing::reference_grid(60, 240);
    const GreensKernels k =
        greens_kernels(EnsembleParams::reference_defaults(), testing::reference_pulse(g), PumpState::from_p3(0.4), g);
    for (const Eigen::MatrixXcd* m : {&k.k_s, &k.g_s, &k.k_as, &k.g_as}) {
        const double peak = m->cwiseAbs().maxCoeff();
        double acausal = 0.0;
        for (int i = 0; i < g.ntau; ++i)
            for (int j = i + 2; j < g.ntau; ++j) acausal = std::max(acausal, std::abs((*m)(i, j)));
        CHECK(acausal <= 1e-8 * peak);
    }
}

TEST_CASE("commutation sum is one in the lossless limit") {
    const Grid g = testing::reference_grid(100, 400);
    const GreensKernels k = greens_kernels(testing::lossless_params(), testing::reference_pulse(g), PumpState::from_p3(0.0), g);
    for (double frac : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const int i = static_cast<int>(frac * (g.ntau - 1));
        CHECK(std::abs(k.stokes_commutator(i) - 1.0) < 1e-3);
    }
}

TEST_CASE("commutation deficit at finite linewidth equals the optical absorption") {
    const Grid g = testing::reference_grid(100, 400);
    const auto params = EnsembleParams::reference_defaults();
    const GreensKernels k = greens_kernels(params, testing::reference_pulse(g), PumpState::from_p3(0.0), g);
    const auto [gs, gas] = derived_detunings(params);
    const double loss = 1.0 - std::exp(-2.0 * (params.d * params.gamma / gs).real());
    const int i = g.ntau / 2;
    CHECK(1.0 - k.stokes_commutator(i) == doctest::Approx(loss).epsilon(0.05));
}

TEST_CASE("relabelling Stokes and anti-Stokes maps the kernels onto each other") {
    // Lossless limit with real Ω: swapping Δ_S ↔ Δ_AS and p₁ ↔ p₃ exchanges the
    // roles of A_S and A†_AS and flips the sign of B.
    const Grid g = testing::reference_grid(60, 240);
    const auto pulse = testing::reference_pulse(g);
    const EnsembleParams base = testing::lossless_params();
    // Δ'_S = −Δ_AS and Δ'_AS = −Δ_S is the conjugate of the plain relabelling,
    // which leaves kernel magnitudes unchanged for real Ω.
    EnsembleParams swapped = base;
    swapped.delta_s = -base.delta_as();
    REQUIRE(swapped.delta_as() == doctest::Approx(-base.delta_s));

    const auto pump = PumpState::from_p3(0.3);
    const auto pump_swapped = PumpState::from_p3(0.7);
    const GreensKernels a = greens_kernels(base, pulse, pump, g);
    const GreensKernels b = greens_kernels(swapped, pulse, pump_swapped, g);
    const auto close = [](const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& y) {
        return (x.cwiseAbs() - y.cwiseAbs()).norm() / std::max(y.norm(), 1e-300);
    };
    CHECK(close(b.k_s, a.k_as) < 1e-6);
    CHECK(close(b.g_s, a.g_as) < 1e-6);
    CHECK(close(b.l_s, a.l_as) < 1e-6);
    CHECK(close(b.k_as, a.k_s) < 1e-6);
}

TEST_CASE("smooth Stokes input converges under fourfold refinement") {
    const auto params = EnsembleParams::reference_defaults();
    const auto pump = PumpState::from_p3(0.0);
    const Grid coarse = testing::reference_grid();
    Grid fine = coarse;
    fine.nz = 4 * (coarse.nz - 1) + 1;
    fine.ntau = 4 * (coarse.ntau - 1) + 1;

    const auto run = [&](const Grid& g) {
        BoundaryData in = BoundaryData::zeros(g);
        in.a_s_in = smooth_profile(g, 0.0, 0.15, {1.0, 0.0});
        const FieldState st = propagate_fields(params, testing::reference_pulse(g), pump, in, g);
        return Eigen::VectorXcd(st.a_s.row(g.nz - 1).transpose());
    };
    const Eigen::VectorXcd c = run(coarse);
    const Eigen::VectorXcd f = run(fine);
    Eigen::VectorXcd f_on_coarse(coarse.ntau);
    for (int k = 0; k < coarse.ntau; ++k) f_on_coarse[k] = f[4 * k];
    CHECK(rel_diff(c, f_on_coarse) < 1e-3);
}

TEST_CASE("kernel dump round trip") {
    const Grid g = testing::reference_grid(20, 200);
    const GreensKernels k =
        greens_kernels(EnsembleParams::reference_defaults(), testing::reference_pulse(g), PumpState::from_p3(0.2), g);
    const auto path = std::filesystem::temp_directory_path() / "warmmem_kernel_dump_test.bin";
    write_kernels(path, k, R"({"grid":"test"})");
    const KernelDump d = read_kernels(path);
    std::filesystem::remove(path);
    CHECK(d.header_json == R"({"grid":"test"})");
    CHECK(d.kernels.grid.ntau == g.ntau);
    CHECK(d.kernels.k_s == k.k_s);
    CHECK(d.kernels.l_as == k.l_as);
    CHECK(d.kernels.tau_weights.isApprox(k.tau_weights));
}
