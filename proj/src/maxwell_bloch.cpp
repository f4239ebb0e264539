#include "warmmem/maxwell_bloch.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "warmmem/errors.hpp"

namespace warmmem {

namespace {

constexpr int kBlockColumns = 16;
constexpr int kMinSamplesPerFwhm = 16;

// phi1(x) = (1 - e^{-x})/x and phi2(x) = (x - 1 + e^{-x})/x², by series near zero.
void phi_functions(cplx x, cplx& phi1, cplx& phi2) {
    if (std::abs(x) < 0.5) {
        cplx term1 = 1.0;  // (-x)^k / (k+1)!
        cplx term2 = 0.5;  // (-x)^k / (k+2)!
        phi1 = 0.0;
        phi2 = 0.0;
        for (int k = 0; k < 30; ++k) {
            phi1 += term1;
            phi2 += term2;
            term1 *= -x / double(k + 2);
            term2 *= -x / double(k + 3);
        }
        return;
    }
    const cplx e = std::exp(-x);
    phi1 = (1.0 - e) / x;
    phi2 = (x - 1.0 + e) / (x * x);
}

// Exact one-step integrator for y' = -a·y + f(z), f linear across the step h:
// y1 = decay·y0 + w0·f0 + w1·f1.
struct ZStep {
    cplx decay, w0, w1;

    ZStep(cplx a, double h) {
        const cplx x = a * h;
        cplx phi1, phi2;
        phi_functions(x, phi1, phi2);
        decay = std::exp(-x);
        w1 = h * phi2;
        w0 = h * (phi1 - phi2);
    }
};

struct LevelCoefficients {
    cplx lambda;  // |Ω|²(1/Γ_S − 1/Γ*_AS)
    cplx k_s;     // −√(dγ) Ω* (p₁/Γ_S + p₃/Γ*_S)
    cplx k_as;    // −√(dγ) Ω  (p₁/Γ_AS + p₃/Γ*_AS)
    cplx src_s;   // Ω√(dγ)/Γ_S
    cplx src_as;  // Ω*√(dγ)/Γ*_AS
    // Derived per-level constants of the implicit z-march.
    cplx m_s, q_s, m_as, q_as;  // A_n = decay·A_{n-1} + m·B_{n-1} + q·B_n
    cplx inv_first, inv_rest;   // 1/(1 − h/2(λ + k_s q_s + k_as q_as)), first point has q = 0
};

// Splits the hot loop into real arithmetic over contiguous column arrays.
struct CArr {
    std::vector<double> re, im;
    explicit CArr(std::size_t n = 0) : re(n, 0.0), im(n, 0.0) {}
    void zero() {
        std::fill(re.begin(), re.end(), 0.0);
        std::fill(im.begin(), im.end(), 0.0);
    }
};

// Feeds boundary values of level k into (a_s, a_as_dag) arrays of a block.
using LevelInput = std::function<void(int level, CArr& a_s, CArr& a_as_dag)>;
// Receives z = 1 outputs of level k.
using LevelOutput = std::function<void(int level, const CArr& a_s, const CArr& a_as_dag)>;
// Receives the interior solution of level k (rows of all three fields).
using InteriorSink = std::function<void(int level, int n, int column, cplx a_s, cplx a_as_dag, cplx b)>;

class Marcher {
public:
    Marcher(const EnsembleParams& params, const ControlPulse& pulse, const PumpState& pump,
            const Grid& grid)
        : grid_(grid) {
        grid.validate();
        params.validate();
        if (pulse.size() != grid.ntau)
            throw DomainError("control pulse has " + std::to_string(pulse.size()) +
                              " samples but the grid has ntau = " + std::to_string(grid.ntau));
        const double tol = 1e-9 * (grid.tau_max - grid.tau_min);
        if (std::abs(pulse.tau_min - grid.tau_min) > tol || std::abs(pulse.tau_max - grid.tau_max) > tol)
            throw DomainError("control pulse window does not match the grid window");

        const auto [gs, gas] = derived_detunings(params);
        if (gs == cplx{0.0} || gas == cplx{0.0})
            throw SingularDetuningError("complex detuning vanishes (gamma = 0 with zero detuning)");

        if (pulse.max_abs() > 0.0 && pulse.samples_above_half_max() < kMinSamplesPerFwhm)
            throw ResolutionError("tau grid resolves the control pulse FWHM with only " +
                                  std::to_string(pulse.samples_above_half_max()) + " points (need " +
                                  std::to_string(kMinSamplesPerFwhm) + ")");
        if (pulse.max_abs() > std::abs(params.delta_s) / 3.0)
            warnings_.push_back("max |Omega| exceeds Delta_S/3; adiabatic elimination may be inaccurate");

        const double p1 = pump.p1();
        const double p3 = pump.p3();
        const double dg = params.d * params.gamma;
        const double root_dg = std::sqrt(dg);
        const double h = grid.dz();
        half_dt_ = 0.5 * grid.dtau();

        step_s_ = ZStep(dg * p1 / gs, h);
        step_as_ = ZStep(-dg * p3 / std::conj(gas), h);

        const cplx alpha_s = p1 / gs + p3 / std::conj(gs);
        const cplx alpha_as = p1 / gas + p3 / std::conj(gas);
        const cplx shift = 1.0 / gs - 1.0 / std::conj(gas);

        levels_.resize(grid.ntau);
        for (int k = 0; k < grid.ntau; ++k) {
            const cplx om = pulse.shape[k];
            LevelCoefficients& c = levels_[k];
            c.lambda = std::norm(om) * shift;
            c.k_s = -root_dg * std::conj(om) * alpha_s;
            c.k_as = -root_dg * om * alpha_as;
            c.src_s = om * root_dg / gs;
            c.src_as = std::conj(om) * root_dg / std::conj(gas);
            c.m_s = -c.src_s * step_s_.w0;
            c.q_s = -c.src_s * step_s_.w1;
            c.m_as = -c.src_as * step_as_.w0;
            c.q_as = -c.src_as * step_as_.w1;
            c.inv_first = 1.0 / (1.0 - half_dt_ * c.lambda);
            c.inv_rest = 1.0 / (1.0 - half_dt_ * (c.lambda + c.k_s * c.q_s + c.k_as * c.q_as));
        }
    }

    const std::vector<std::string>& warnings() const { return warnings_; }

    /// Marches `ncols` independent columns from level `start`. Every column is
    /// zero before `start`; if start == 0 the spin wave at level 0 is `b_init`
    /// (nz × ncols, column-fastest), otherwise it is zero.
    template <bool kInterior>
    void run(int ncols, int start, const std::vector<cplx>* b_init, const LevelInput& input,
             const LevelOutput& output, const InteriorSink* sink = nullptr) const {
        const int nz = grid_.nz;
        const std::size_t nc = static_cast<std::size_t>(ncols);
        CArr r(static_cast<std::size_t>(nz) * nc);  // explicit half of the trapezoid, per z point
        CArr a(nc), c(nc), b(nc);                    // running values at the previous z point
        CArr in_a(nc), in_c(nc);

        const double ds_re = step_s_.decay.real(), ds_im = step_s_.decay.imag();
        const double da_re = step_as_.decay.real(), da_im = step_as_.decay.imag();
        const double hdt = half_dt_;

        for (int k = start; k < grid_.ntau; ++k) {
            const LevelCoefficients& L = levels_[k];
            in_a.zero();
            in_c.zero();
            input(k, in_a, in_c);

            const double lam_re = L.lambda.real(), lam_im = L.lambda.imag();
            const double ks_re = L.k_s.real(), ks_im = L.k_s.imag();
            const double ka_re = L.k_as.real(), ka_im = L.k_as.imag();

            if (k == 0) {
                // Spin wave given; fields follow from the z-march alone.
                const double w0s_re = -(L.src_s * step_s_.w0).real(), w0s_im = -(L.src_s * step_s_.w0).imag();
                const double w1s_re = -(L.src_s * step_s_.w1).real(), w1s_im = -(L.src_s * step_s_.w1).imag();
                const double w0a_re = -(L.src_as * step_as_.w0).real(), w0a_im = -(L.src_as * step_as_.w0).imag();
                const double w1a_re = -(L.src_as * step_as_.w1).real(), w1a_im = -(L.src_as * step_as_.w1).imag();
                for (int n = 0; n < nz; ++n) {
                    double* rr = r.re.data() + n * nc;
                    double* ri = r.im.data() + n * nc;
                    for (std::size_t j = 0; j < nc; ++j) {
                        const double bn_re = b_init ? (*b_init)[n * nc + j].real() : 0.0;
                        const double bn_im = b_init ? (*b_init)[n * nc + j].imag() : 0.0;
                        double an_re, an_im, cn_re, cn_im;
                        if (n == 0) {
                            an_re = in_a.re[j];
                            an_im = in_a.im[j];
                            cn_re = in_c.re[j];
                            cn_im = in_c.im[j];
                        } else {
                            an_re = ds_re * a.re[j] - ds_im * a.im[j] + w0s_re * b.re[j] - w0s_im * b.im[j] +
                                    w1s_re * bn_re - w1s_im * bn_im;
                            an_im = ds_re * a.im[j] + ds_im * a.re[j] + w0s_re * b.im[j] + w0s_im * b.re[j] +
                                    w1s_re * bn_im + w1s_im * bn_re;
                            cn_re = da_re * c.re[j] - da_im * c.im[j] + w0a_re * b.re[j] - w0a_im * b.im[j] +
                                    w1a_re * bn_re - w1a_im * bn_im;
                            cn_im = da_re * c.im[j] + da_im * c.re[j] + w0a_re * b.im[j] + w0a_im * b.re[j] +
                                    w1a_re * bn_im + w1a_im * bn_re;
                        }
                        a.re[j] = an_re; a.im[j] = an_im;
                        c.re[j] = cn_re; c.im[j] = cn_im;
                        b.re[j] = bn_re; b.im[j] = bn_im;
                        // s = k_s A + k_as C ; r = B + h(λB + s)
                        const double s_re = ks_re * an_re - ks_im * an_im + ka_re * cn_re - ka_im * cn_im;
                        const double s_im = ks_re * an_im + ks_im * an_re + ka_re * cn_im + ka_im * cn_re;
                        rr[j] = bn_re + hdt * (lam_re * bn_re - lam_im * bn_im + s_re);
                        ri[j] = bn_im + hdt * (lam_re * bn_im + lam_im * bn_re + s_im);
                        if constexpr (kInterior)
                            (*sink)(k, n, int(j), {an_re, an_im}, {cn_re, cn_im}, {bn_re, bn_im});
                    }
                }
            } else {
                const double ms_re = L.m_s.real(), ms_im = L.m_s.imag();
                const double qs_re = L.q_s.real(), qs_im = L.q_s.imag();
                const double ma_re = L.m_as.real(), ma_im = L.m_as.imag();
                const double qa_re = L.q_as.real(), qa_im = L.q_as.imag();
                for (int n = 0; n < nz; ++n) {
                    double* rr = r.re.data() + n * nc;
                    double* ri = r.im.data() + n * nc;
                    const cplx inv = n == 0 ? L.inv_first : L.inv_rest;
                    const double iv_re = inv.real(), iv_im = inv.imag();
                    for (std::size_t j = 0; j < nc; ++j) {
                        double pa_re, pa_im, pc_re, pc_im;
                        double qa_s_re = 0.0, qa_s_im = 0.0, qc_re = 0.0, qc_im = 0.0;
                        if (n == 0) {
                            pa_re = in_a.re[j];
                            pa_im = in_a.im[j];
                            pc_re = in_c.re[j];
                            pc_im = in_c.im[j];
                        } else {
                            pa_re = ds_re * a.re[j] - ds_im * a.im[j] + ms_re * b.re[j] - ms_im * b.im[j];
                            pa_im = ds_re * a.im[j] + ds_im * a.re[j] + ms_re * b.im[j] + ms_im * b.re[j];
                            pc_re = da_re * c.re[j] - da_im * c.im[j] + ma_re * b.re[j] - ma_im * b.im[j];
                            pc_im = da_re * c.im[j] + da_im * c.re[j] + ma_re * b.im[j] + ma_im * b.re[j];
                            qa_s_re = qs_re; qa_s_im = qs_im;
                            qc_re = qa_re; qc_im = qa_im;
                        }
                        // B_n = (r_n + h(k_s P_A + k_as P_C)) / denom
                        const double t_re = rr[j] + hdt * (ks_re * pa_re - ks_im * pa_im + ka_re * pc_re - ka_im * pc_im);
                        const double t_im = ri[j] + hdt * (ks_re * pa_im + ks_im * pa_re + ka_re * pc_im + ka_im * pc_re);
                        const double bn_re = t_re * iv_re - t_im * iv_im;
                        const double bn_im = t_re * iv_im + t_im * iv_re;
                        const double an_re = pa_re + qa_s_re * bn_re - qa_s_im * bn_im;
                        const double an_im = pa_im + qa_s_re * bn_im + qa_s_im * bn_re;
                        const double cn_re = pc_re + qc_re * bn_re - qc_im * bn_im;
                        const double cn_im = pc_im + qc_re * bn_im + qc_im * bn_re;
                        a.re[j] = an_re; a.im[j] = an_im;
                        c.re[j] = cn_re; c.im[j] = cn_im;
                        b.re[j] = bn_re; b.im[j] = bn_im;
                        const double s_re = ks_re * an_re - ks_im * an_im + ka_re * cn_re - ka_im * cn_im;
                        const double s_im = ks_re * an_im + ks_im * an_re + ka_re * cn_im + ka_im * cn_re;
                        rr[j] = bn_re + hdt * (lam_re * bn_re - lam_im * bn_im + s_re);
                        ri[j] = bn_im + hdt * (lam_re * bn_im + lam_im * bn_re + s_im);
                        if constexpr (kInterior)
                            (*sink)(k, n, int(j), {an_re, an_im}, {cn_re, cn_im}, {bn_re, bn_im});
                    }
                }
            }
            output(k, a, c);
        }
    }

private:
    Grid grid_;
    double half_dt_ = 0.0;
    ZStep step_s_{0.0, 1.0};
    ZStep step_as_{0.0, 1.0};
    std::vector<LevelCoefficients> levels_;
    std::vector<std::string> warnings_;
};

void parallel_for(int count, const std::function<void(int)>& body) {
    const int workers = std::max(1u, std::thread::hardware_concurrency());
    if (workers == 1 || count <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < std::min(workers, count); ++w)
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) body(i);
        });
}

void check_sizes(const BoundaryData& inputs, const Grid& grid) {
    if (inputs.a_s_in.size() != grid.ntau || inputs.a_as_dag_in.size() != grid.ntau ||
        inputs.b_in.size() != grid.nz)
        throw DomainError("boundary data does not match the grid sizes");
}

}  // namespace

BoundaryData BoundaryData::zeros(const Grid& grid) {
    return {Eigen::VectorXcd::Zero(grid.ntau), Eigen::VectorXcd::Zero(grid.ntau),
            Eigen::VectorXcd::Zero(grid.nz)};
}

FieldState propagate_fields(const EnsembleParams& params, const ControlPulse& pulse,
                            const PumpState& pump, const BoundaryData& inputs, const Grid& grid) {
    const Marcher marcher(params, pulse, pump, grid);
    check_sizes(inputs, grid);

    FieldState state;
    state.grid = grid;
    state.warnings = marcher.warnings();
    state.a_s.resize(grid.nz, grid.ntau);
    state.a_as_dag.resize(grid.nz, grid.ntau);
    state.b.resize(grid.nz, grid.ntau);

    std::vector<cplx> b_init(inputs.b_in.data(), inputs.b_in.data() + grid.nz);
    const LevelInput input = [&](int k, CArr& a, CArr& c) {
        a.re[0] = inputs.a_s_in[k].real();
        a.im[0] = inputs.a_s_in[k].imag();
        c.re[0] = inputs.a_as_dag_in[k].real();
        c.im[0] = inputs.a_as_dag_in[k].imag();
    };
    const LevelOutput output = [](int, const CArr&, const CArr&) {};
    const InteriorSink sink = [&](int k, int n, int, cplx a, cplx c, cplx b) {
        state.a_s(n, k) = a;
        state.a_as_dag(n, k) = c;
        state.b(n, k) = b;
    };
    marcher.run<true>(1, 0, &b_init, input, output, &sink);
    return state;
}

GreensKernels greens_kernels(const EnsembleParams& params, const ControlPulse& pulse,
                             const PumpState& pump, const Grid& grid) {
    const Marcher marcher(params, pulse, pump, grid);
    const int ntau = grid.ntau;
    const int nz = grid.nz;

    GreensKernels out;
    out.grid = grid;
    out.warnings = marcher.warnings();
    const std::vector<double> wt = grid.tau_weights();
    const std::vector<double> wz = grid.z_weights();
    out.tau_weights = Eigen::Map<const Eigen::VectorXd>(wt.data(), ntau);
    out.z_weights = Eigen::Map<const Eigen::VectorXd>(wz.data(), nz);

    // Solver columns: A_S impulses give k_s and conj(g_as); A†_AS impulses give
    // g_s and conj(k_as); spin-wave impulses give l_s and conj(l_as).
    out.k_s.setZero(ntau, ntau);
    out.g_as.setZero(ntau, ntau);
    out.g_s.setZero(ntau, ntau);
    out.k_as.setZero(ntau, ntau);
    out.l_s.setZero(ntau, nz);
    out.l_as.setZero(ntau, nz);

    const int tau_blocks = (ntau + kBlockColumns - 1) / kBlockColumns;
    const int z_blocks = (nz + kBlockColumns - 1) / kBlockColumns;
    const int total = 2 * tau_blocks + z_blocks;

    parallel_for(total, [&](int block) {
        if (block < 2 * tau_blocks) {
            const bool stokes = block < tau_blocks;
            const int first = (stokes ? block : block - tau_blocks) * kBlockColumns;
            const int ncols = std::min(kBlockColumns, ntau - first);
            Eigen::MatrixXcd& same = stokes ? out.k_s : out.k_as;
            Eigen::MatrixXcd& cross = stokes ? out.g_as : out.g_s;
            const LevelInput input = [&](int k, CArr& a, CArr& c) {
                const int j = k - first;
                if (j < 0 || j >= ncols) return;
                (stokes ? a : c).re[j] = 1.0 / wt[k];
            };
            const LevelOutput output = [&](int k, const CArr& a, const CArr& c) {
                for (int j = 0; j < ncols; ++j) {
                    const double w = wt[first + j];
                    const cplx vs{a.re[j] * w, a.im[j] * w};
                    const cplx vc{c.re[j] * w, c.im[j] * w};
                    if (stokes) {
                        same(k, first + j) = vs;
                        cross(k, first + j) = std::conj(vc);
                    } else {
                        same(k, first + j) = std::conj(vc);
                        cross(k, first + j) = vs;
                    }
                }
            };
            marcher.run<false>(ncols, first, nullptr, input, output);
        } else {
            const int first = (block - 2 * tau_blocks) * kBlockColumns;
            const int ncols = std::min(kBlockColumns, nz - first);
            std::vector<cplx> b_init(static_cast<std::size_t>(nz) * ncols, cplx{0.0});
            for (int j = 0; j < ncols; ++j) b_init[(first + j) * ncols + j] = 1.0 / wz[first + j];
            const LevelInput input = [](int, CArr&, CArr&) {};
            const LevelOutput output = [&](int k, const CArr& a, const CArr& c) {
                for (int j = 0; j < ncols; ++j) {
                    const double w = wz[first + j];
                    out.l_s(k, first + j) = cplx{a.re[j] * w, a.im[j] * w};
                    out.l_as(k, first + j) = std::conj(cplx{c.re[j] * w, c.im[j] * w});
                }
            };
            marcher.run<false>(ncols, 0, &b_init, input, output);
        }
    });
    return out;
}

OutputFields GreensKernels::apply(const BoundaryData& inputs) const {
    check_sizes(inputs, grid);
    OutputFields o;
    o.a_s_out = k_s * inputs.a_s_in + g_s * inputs.a_as_dag_in + l_s * inputs.b_in;
    // A_AS,out = k_as A_AS,in + g_as A†_S,in + l_as B†_in, returned conjugated.
    const Eigen::VectorXcd a_as_out =
        k_as * inputs.a_as_dag_in.conjugate() + g_as * inputs.a_s_in.conjugate() + l_as * inputs.b_in.conjugate();
    o.a_as_dag_out = a_as_out.conjugate();
    return o;
}

double GreensKernels::stokes_commutator(int i) const {
    if (i < 0 || i >= grid.ntau) throw DomainError("output index out of range");
    const auto row_norm = [&](const Eigen::MatrixXcd& m, const Eigen::VectorXd& w) {
        return (m.row(i).cwiseAbs2().transpose().array() / w.array()).sum();
    };
    return tau_weights[i] *
           (row_norm(k_s, tau_weights) - row_norm(g_s, tau_weights) + row_norm(l_s, z_weights));
}

double GreensKernels::double_integral(const Eigen::MatrixXcd& kernel,
                                      const Eigen::VectorXd& column_weights) const {
    // Σ_i w_i Σ_j w_j |K_ij|², with the stored matrix holding K_ij·w_j.
    const Eigen::VectorXd row_sums = kernel.cwiseAbs2() * column_weights.cwiseInverse();
    return tau_weights.dot(row_sums);
}

namespace {

constexpr char kMagic[8] = {'W', 'M', 'K', 'E', 'R', 'N', '0', '1'};

void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t read_u64(std::istream& is) {
    unsigned char bytes[8];
    is.read(reinterpret_cast<char*>(bytes), 8);
    if (!is) throw ParseError("kernel dump truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(bytes[i]) << (8 * i);
    return v;
}

void write_f64(std::ostream& os, double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, 8);
    write_u64(os, bits);
}

double read_f64(std::istream& is) {
    const std::uint64_t bits = read_u64(is);
    double x;
    std::memcpy(&x, &bits, 8);
    return x;
}

void write_matrix(std::ostream& os, const std::string& name, const Eigen::MatrixXcd& m) {
    write_u64(os, name.size());
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(os, static_cast<std::uint64_t>(m.rows()));
    write_u64(os, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            write_f64(os, m(i, j).real());
            write_f64(os, m(i, j).imag());
        }
}

std::pair<std::string, Eigen::MatrixXcd> read_matrix(std::istream& is) {
    const std::uint64_t len = read_u64(is);
    if (len > 64) throw ParseError("kernel dump: bad matrix name length");
    std::string name(len, '\0');
    is.read(name.data(), static_cast<std::streamsize>(len));
    const auto rows = static_cast<Eigen::Index>(read_u64(is));
    const auto cols = static_cast<Eigen::Index>(read_u64(is));
    Eigen::MatrixXcd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
            const double re = read_f64(is);
            const double im = read_f64(is);
            m(i, j) = {re, im};
        }
    return {name, m};
}

}  // namespace

void write_kernels(const std::filesystem::path& path, const GreensKernels& kernels,
                   const std::string& header_json) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    os.write(kMagic, sizeof kMagic);
    write_u64(os, header_json.size());
    os.write(header_json.data(), static_cast<std::streamsize>(header_json.size()));
    const Grid& g = kernels.grid;
    write_u64(os, static_cast<std::uint64_t>(g.nz));
    write_u64(os, static_cast<std::uint64_t>(g.ntau));
    write_f64(os, g.tau_min);
    write_f64(os, g.tau_max);
    write_matrix(os, "k_s", kernels.k_s);
    write_matrix(os, "g_s", kernels.g_s);
    write_matrix(os, "l_s", kernels.l_s);
    write_matrix(os, "k_as", kernels.k_as);
    write_matrix(os, "g_as", kernels.g_as);
    write_matrix(os, "l_as", kernels.l_as);
    if (!os) throw std::runtime_error("write failed for '" + path.string() + "'");
}

KernelDump read_kernels(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("cannot open kernel dump '" + path.string() + "'");
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0) throw ParseError("not a kernel dump: bad magic");
    KernelDump dump;
    const std::uint64_t hlen = read_u64(is);
    dump.header_json.resize(hlen);
    is.read(dump.header_json.data(), static_cast<std::streamsize>(hlen));
    Grid& g = dump.kernels.grid;
    g.nz = static_cast<int>(read_u64(is));
    g.ntau = static_cast<int>(read_u64(is));
    g.tau_min = read_f64(is);
    g.tau_max = read_f64(is);
    g.validate();
    const std::vector<double> wt = g.tau_weights();
    const std::vector<double> wz = g.z_weights();
    dump.kernels.tau_weights = Eigen::Map<const Eigen::VectorXd>(wt.data(), g.ntau);
    dump.kernels.z_weights = Eigen::Map<const Eigen::VectorXd>(wz.data(), g.nz);
    for (int m = 0; m < 6; ++m) {
        auto [name, mat] = read_matrix(is);
        if (name == "k_s") dump.kernels.k_s = std::move(mat);
        else if (name == "g_s") dump.kernels.g_s = std::move(mat);
        else if (name == "l_s") dump.kernels.l_s = std::move(mat);
        else if (name == "k_as") dump.kernels.k_as = std::move(mat);
        else if (name == "g_as") dump.kernels.g_as = std::move(mat);
        else if (name == "l_as") dump.kernels.l_as = std::move(mat);
        else throw ParseError("kernel dump: unknown matrix '" + name + "'");
    }
    return dump;
}

}  // namespace warmmem
