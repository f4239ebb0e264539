#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "warmmem/types.hpp"

namespace warmmem {

/// Input data of one propagation problem: Stokes and conjugated anti-Stokes
/// amplitudes entering at z = 0 on every τ point, and the spin wave at τ_min.
struct BoundaryData {
    Eigen::VectorXcd a_s_in;       ///< A_S(z=0, τ), size ntau
    Eigen::VectorXcd a_as_dag_in;  ///< A†_AS(z=0, τ), size ntau
    Eigen::VectorXcd b_in;         ///< B(z, τ_min), size nz

    static BoundaryData zeros(const Grid& grid);
};

/// Full interior solution. Rows index z, columns index τ.
struct FieldState {
    Grid grid;
    Eigen::MatrixXcd a_s;
    Eigen::MatrixXcd a_as_dag;
    Eigen::MatrixXcd b;
    std::vector<std::string> warnings;
};

/// Output amplitudes at z = 1.
struct OutputFields {
    Eigen::VectorXcd a_s_out;       ///< A_S(z=1, τ)
    Eigen::VectorXcd a_as_dag_out;  ///< A†_AS(z=1, τ)
};

/// Discretised Green's functions of the linearised Maxwell-Bloch system.
///
/// Each matrix carries the input quadrature weight in its columns, so a plain
/// matrix-vector product evaluates the integral:
///
///   A_S,out  = k_s·A_S,in  + g_s·A†_AS,in + l_s·B_in
///   A_AS,out = k_as·A_AS,in + g_as·A†_S,in + l_as·B†_in
///
/// k/g are ntau×ntau, l are ntau×nz. The continuous kernel value is the matrix
/// entry divided by the column weight.
struct GreensKernels {
    Grid grid;
    Eigen::MatrixXcd k_s, g_s, l_s;
    Eigen::MatrixXcd k_as, g_as, l_as;
    Eigen::VectorXd tau_weights;
    Eigen::VectorXd z_weights;
    std::vector<std::string> warnings;

    OutputFields apply(const BoundaryData& inputs) const;

    /// ∫|K_S|²dτ' − ∫|G_S|²dτ' + ∫|L_S|²dz at output time index `i`, in the
    /// discrete-mode normalisation (multiplied by the output weight w_i) so that a
    /// canonical transform gives exactly 1.
    double stokes_commutator(int i) const;

    /// ∫∫|kernel|² over both arguments, for any of the six kernels.
    double double_integral(const Eigen::MatrixXcd& kernel, const Eigen::VectorXd& column_weights) const;
};

/// Solves the three coupled equations
///
///   [∂_z + dγp₁/Γ_S] A_S      = −Ω√(dγ)/Γ_S · B
///   [∂_z − dγp₃/Γ*_AS] A†_AS  = −Ω*√(dγ)/Γ*_AS · B
///   [∂_τ − |Ω|²(1/Γ_S − 1/Γ*_AS)] B = −√(dγ)Ω*(p₁/Γ_S + p₃/Γ*_S) A_S
///                                     −√(dγ)Ω (p₁/Γ_AS + p₃/Γ*_AS) A†_AS
///
/// with both fields entering at z = 0. The B equation is stepped in τ with the
/// trapezoidal rule, solved jointly with an exponential integrator in z that is
/// exact for piecewise-linear B.
///
/// Throws SingularDetuningError if Γ_S or Γ_AS vanishes, ResolutionError if the
/// pulse FWHM spans fewer than 16 τ points, DomainError on size mismatches.
FieldState propagate_fields(const EnsembleParams& params, const ControlPulse& pulse,
                            const PumpState& pump, const BoundaryData& inputs, const Grid& grid);

/// Builds all six kernels from impulse responses (one column per input basis
/// element). Columns are independent and are distributed over worker threads.
GreensKernels greens_kernels(const EnsembleParams& params, const ControlPulse& pulse,
                             const PumpState& pump, const Grid& grid);

/// Binary kernel dump; see README for the layout.
void write_kernels(const std::filesystem::path& path, const GreensKernels& kernels,
                   const std::string& header_json);

struct KernelDump {
    std::string header_json;
    GreensKernels kernels;
};

KernelDump read_kernels(const std::filesystem::path& path);

}  // namespace warmmem
