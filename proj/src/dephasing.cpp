#include "warmmem/dephasing.hpp"

#include <cmath>
#include <numeric>

#include "warmmem/errors.hpp"
#include "warmmem/units.hpp"

namespace warmmem {

namespace {

constexpr double kFInitial = 4.0;
constexpr double kFFinal = 3.0;
constexpr double kGInitial = 0.25;
constexpr double kGFinal = -0.25;

bool is_half_integer(double x) {
    const double twice = 2.0 * x;
    return std::isfinite(x) && x >= 0.0 && std::abs(twice - std::round(twice)) < 1e-12;
}

bool is_integer(double x) { return std::abs(x - std::round(x)) < 1e-12; }

double factorial(double n) { return std::tgamma(std::round(n) + 1.0); }

// Weighted spherical components (q, amplitude) of a linear polarization.
struct Component {
    int q;
    double w;
};

std::vector<Component> components(LinearPolarization p) {
    if (p == LinearPolarization::Vertical) return {{0, 1.0}};
    const double h = 1.0 / std::sqrt(2.0);
    return {{-1, h}, {1, h}};
}

Eigen::MatrixXcd rotation_block(const SpinMatrices& s, double theta, double phi) {
    const Eigen::MatrixXcd gen = s.y * std::sin(phi) - s.x * std::cos(phi);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gen);
    const Eigen::VectorXcd phases =
        (eig.eigenvalues().cast<cplx>() * cplx{0.0, theta}).array().exp().matrix();
    return eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
}

double larmor_rate(const MagneticField& field) {
    // 2π µ_B B / h in rad/ns.
    return kTwoPi * kBohrMagnetonMHzPerGauss * 1e-3 * field.b_gauss();
}

void check_populations(const std::vector<double>& p, int dim) {
    if (static_cast<int>(p.size()) != dim)
        throw DomainError("population distribution needs " + std::to_string(dim) + " entries");
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw DomainError("populations must be nonnegative");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw DomainError("populations must sum to 1");
}

}  // namespace

SpinManifold::SpinManifold(double f_, double g) : f(f_), g_factor(g) {
    if (!is_half_integer(f_)) throw DomainError("F must be a nonnegative half-integer");
}

int SpinManifold::dim() const { return static_cast<int>(std::lround(2.0 * f)) + 1; }

SpinMatrices spin_matrices(double f) {
    if (!is_half_integer(f)) throw DomainError("F must be a nonnegative half-integer");
    const int n = static_cast<int>(std::lround(2.0 * f)) + 1;
    Eigen::MatrixXcd jp = Eigen::MatrixXcd::Zero(n, n);
    Eigen::MatrixXcd jz = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const double m = -f + i;
        jz(i, i) = m;
        if (i + 1 < n) jp(i + 1, i) = std::sqrt(f * (f + 1.0) - m * (m + 1.0));
    }
    const Eigen::MatrixXcd jm = jp.adjoint();
    return {(jp + jm) / 2.0, (jp - jm) / cplx{0.0, 2.0}, jz};
}

double clebsch_gordan(double j1, double m1, double j2, double m2, double j, double m) {
    if (!is_half_integer(j1) || !is_half_integer(j2) || !is_half_integer(j))
        throw DomainError("angular momenta must be nonnegative half-integers");
    if (std::abs(m1 + m2 - m) > 1e-12) return 0.0;
    if (std::abs(m1) > j1 + 1e-12 || std::abs(m2) > j2 + 1e-12 || std::abs(m) > j + 1e-12) return 0.0;
    if (!is_integer(j1 - m1) || !is_integer(j2 - m2) || !is_integer(j - m)) return 0.0;
    if (j < std::abs(j1 - j2) - 1e-12 || j > j1 + j2 + 1e-12 || !is_integer(j1 + j2 - j)) return 0.0;

    const double pre = std::sqrt((2.0 * j + 1.0) * factorial(j + j1 - j2) * factorial(j - j1 + j2) *
                                 factorial(j1 + j2 - j) / factorial(j1 + j2 + j + 1.0));
    const double norm = std::sqrt(factorial(j + m) * factorial(j - m) * factorial(j1 - m1) * factorial(j1 + m1) *
                                  factorial(j2 - m2) * factorial(j2 + m2));
    double sum = 0.0;
    for (int k = 0; k <= static_cast<int>(std::lround(j1 + j2 - j)); ++k) {
        const double a = j1 + j2 - j - k;
        const double b = j1 - m1 - k;
        const double c = j2 + m2 - k;
        const double d = j - j2 + m1 + k;
        const double e = j - j1 - m2 + k;
        if (a < -1e-12 || b < -1e-12 || c < -1e-12 || d < -1e-12 || e < -1e-12) continue;
        const double denom = factorial(k) * factorial(a) * factorial(b) * factorial(c) * factorial(d) * factorial(e);
        sum += (k % 2 ? -1.0 : 1.0) / denom;
    }
    return pre * norm * sum;
}

std::string to_string(LinearPolarization p) {
    return p == LinearPolarization::Vertical ? "vertical" : "horizontal";
}

LinearPolarization parse_polarization(std::string_view text) {
    if (text == "vertical") return LinearPolarization::Vertical;
    if (text == "horizontal") return LinearPolarization::Horizontal;
    throw DomainError("unknown polarization '" + std::string(text) + "' (expected vertical or horizontal)");
}

Eigen::MatrixXcd coupling_matrix(const PolarizationConfig& config) {
    if (config.control == config.signal)
        throw DomainError("control and signal must have orthogonal linear polarizations");
    const int ni = static_cast<int>(2 * kFInitial) + 1;
    const int nf = static_cast<int>(2 * kFFinal) + 1;
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(ni, nf);
    const auto control = components(config.control);
    const auto signal = components(config.signal);
    for (int a = 0; a < ni; ++a) {
        const double mi = -kFInitial + a;
        for (int b = 0; b < nf; ++b) {
            const double mf = -kFFinal + b;
            double sum = 0.0;
            for (int fe = 2; fe <= 5; ++fe)
                for (const Component& qc : control)
                    for (const Component& qs : signal) {
                        const double me = mi + qc.q;
                        if (std::abs(mf + qs.q - me) > 1e-12) continue;
                        sum += qc.w * qs.w * clebsch_gordan(kFInitial, mi, 1.0, qc.q, fe, me) *
                               clebsch_gordan(kFFinal, mf, 1.0, qs.q, fe, me);
                    }
            c(a, b) = sum;
        }
    }
    const double peak = c.cwiseAbs().maxCoeff();
    if (peak == 0.0) throw DomainError("polarization configuration gives no coupling");
    return c / peak;
}

SpinSystem::SpinSystem(const PolarizationConfig& config)
    : initial_(kFInitial, kGInitial), final_(kFFinal, kGFinal), coupling_(coupling_matrix(config)) {}

Eigen::MatrixXcd SpinSystem::sigma() const {
    const int ni = initial_.dim();
    const int n = ni + final_.dim();
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(n, n);
    s.block(0, ni, ni, final_.dim()) = coupling_;
    return s;
}

Eigen::MatrixXcd SpinSystem::rotation(const MagneticField& field) const {
    const int ni = initial_.dim();
    const int n = ni + final_.dim();
    Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(n, n);
    r.block(0, 0, ni, ni) = rotation_block(spin_matrices(initial_.f), field.theta(), field.phi());
    r.block(ni, ni, final_.dim(), final_.dim()) =
        rotation_block(spin_matrices(final_.f), field.theta(), field.phi());
    return r;
}

Eigen::MatrixXcd SpinSystem::phase(const MagneticField& field, double t_ns) const {
    const double w = larmor_rate(field);
    const int ni = initial_.dim();
    const int n = ni + final_.dim();
    Eigen::VectorXcd d(n);
    for (int k = 0; k < ni; ++k) d[k] = std::polar(1.0, initial_.m(k) * (initial_.g_factor * w) * t_ns);
    for (int k = 0; k < final_.dim(); ++k)
        d[ni + k] = std::polar(1.0, final_.m(k) * (final_.g_factor * w) * t_ns);
    return d.asDiagonal();
}

Eigen::MatrixXcd evolution_operator(const MagneticField& field, double t_ns, const SpinSystem& system) {
    if (!(t_ns >= 0.0)) throw DomainError("storage time must be >= 0");
    const Eigen::MatrixXcd r = system.rotation(field);
    return r.adjoint() * system.phase(field, t_ns) * r;
}

std::vector<double> uniform_populations() { return std::vector<double>(9, 1.0 / 9.0); }

EfficiencyModel::EfficiencyModel(const SpinSystem& system, const MagneticField& field,
                                 std::vector<double> populations)
    : populations_(std::move(populations)) {
    check_populations(populations_, system.initial().dim());
    const SpinManifold& fi = system.initial();
    const SpinManifold& ff = system.final_manifold();
    coupling_ = system.coupling();
    coupling_adj_ = coupling_.adjoint();
    r_i_ = rotation_block(spin_matrices(fi.f), field.theta(), field.phi());
    r_f_ = rotation_block(spin_matrices(ff.f), field.theta(), field.phi());
    m_i_.resize(fi.dim());
    m_f_.resize(ff.dim());
    for (int k = 0; k < fi.dim(); ++k) m_i_[k] = fi.m(k);
    for (int k = 0; k < ff.dim(); ++k) m_f_[k] = ff.m(k);
    const double w = larmor_rate(field);
    omega_i_ = fi.g_factor * w;
    omega_f_ = ff.g_factor * w;
    eta0_ = eta(0.0);
}

double EfficiencyModel::eta(double t_ns) const {
    Eigen::VectorXcd ei(m_i_.size()), ef(m_f_.size());
    for (Eigen::Index k = 0; k < m_i_.size(); ++k) ei[k] = std::polar(1.0, m_i_[k] * omega_i_ * t_ns);
    for (Eigen::Index k = 0; k < m_f_.size(); ++k) ef[k] = std::polar(1.0, m_f_[k] * omega_f_ * t_ns);
    const Eigen::MatrixXcd ui = r_i_.adjoint() * ei.asDiagonal() * r_i_;
    const Eigen::MatrixXcd uf = r_f_.adjoint() * ef.asDiagonal() * r_f_;
    // Initial-block of U†ΣUΣ†.
    const Eigen::MatrixXcd m = ui.adjoint() * coupling_ * uf * coupling_adj_;
    double eta = 0.0;
    for (std::size_t k = 0; k < populations_.size(); ++k) eta += populations_[k] * std::norm(m(k, k));
    return eta;
}

double retrieval_efficiency(double t_ns, const MagneticField& field, const SpinSystem& system,
                            const std::vector<double>& populations) {
    if (!(t_ns >= 0.0)) throw DomainError("storage time must be >= 0");
    return EfficiencyModel(system, field, populations).eta(t_ns);
}

std::vector<EfficiencyRow> efficiency_curve(const std::vector<double>& t_values, const MagneticField& field,
                                            const SpinSystem& system, const std::vector<double>& populations,
                                            double scale) {
    if (t_values.empty()) throw DomainError("efficiency curve needs at least one time");
    if (!(scale > 0.0)) throw DomainError("scale must be > 0");
    const EfficiencyModel model(system, field, populations);
    if (!(model.eta0() > 0.0)) throw DomainError("populations do not couple to the signal (eta(0) = 0)");
    std::vector<EfficiencyRow> rows;
    rows.reserve(t_values.size());
    for (double t : t_values) {
        if (!(t >= 0.0)) throw DomainError("storage time must be >= 0");
        const double rel = model.eta(t) / model.eta0();
        rows.push_back({t, rel, scale * rel});
    }
    return rows;
}

std::optional<double> one_over_e_time(const MagneticField& field, const SpinSystem& system,
                                      const std::vector<double>& populations, double t_max_ns) {
    if (!(t_max_ns > 0.0)) throw DomainError("t_max must be > 0");
    const EfficiencyModel model(system, field, populations);
    if (!(model.eta0() > 0.0)) throw DomainError("populations do not couple to the signal (eta(0) = 0)");
    if (field.b_gauss() == 0.0) return std::nullopt;
    const double level = std::exp(-1.0);
    const auto rel = [&](double t) { return model.eta(t) / model.eta0(); };
    const int steps = std::max(1000, static_cast<int>(std::ceil(t_max_ns / 5.0)));
    const double dt = t_max_ns / steps;
    double lo = 0.0;
    for (int s = 1; s <= steps; ++s) {
        const double hi = s * dt;
        if (rel(hi) <= level) {
            double a = lo, b = hi;
            while (b - a > 1e-6) {
                const double mid = 0.5 * (a + b);
                (rel(mid) <= level ? b : a) = mid;
            }
            return b;
        }
        lo = hi;
    }
    return std::nullopt;
}

}  // namespace warmmem
