#pragma once

#include <Eigen/Dense>

#include "model.hpp"
#include "specfun.hpp"

namespace ablscar {

// ---------------------------------------------------------------------------
// Channel (Landau-gauge mode-matching) engine: exact solutions of the
// wall-free quasi-1D problem, Dirichlet walls imposed on collocation rows via
// singular value decomposition.
// ---------------------------------------------------------------------------

struct ChannelMode {
    int n_y = 0;
    cplx k;        // longitudinal wavenumber (imaginary if evanescent)
    cplx y_center; // -hbar k eB / (m^2 Omega^2)
    double x_ref = 0.0;  // anchoring wall for evanescent normalization
    bool evanescent = false;
    double threshold = 0.0;  // hbar Omega (n_y + 1/2)
};

struct ChannelBasisConfig {
    int n_max = 80;
    bool include_evanescent = true;
    double kappa_max_scale = 10.0;  // kappa_max = scale / d
    int collocation_per_wall = 400;
    double y_cut_factor = 1.5;      // times the classical turning point
    // interior-norm (generalized SVD) regularization of the scan
    bool interior_regularization = false;
    int interior_points = 600;
    double interior_rank_cut = 1e-8;
    unsigned interior_seed = 12345;
};

std::vector<ChannelMode> channel_basis(double E, const SystemParams& params,
                                       const ChannelBasisConfig& cfg);

cplx channel_mode_value(const ChannelMode& mode, const SystemParams& params, double x, double y);
cplx channel_mode_dx(const ChannelMode& mode, const SystemParams& params, double x, double y);

struct ScanPoint {
    double E;
    double sigma_min;
};

struct ChannelScanResult {
    std::vector<ScanPoint> curve;
    std::vector<double> minima;  // refined eigenenergy candidates
};

ChannelScanResult spectrum_scan(double E_lo, double E_hi, std::size_t n_grid,
                                const SystemParams& params, const ChannelBasisConfig& cfg,
                                double minimum_threshold_factor = 0.5);

double channel_sigma_min(double E, const SystemParams& params, const ChannelBasisConfig& cfg);

struct ChannelState {
    double energy = 0.0;
    double sigma = 0.0;
    std::vector<ChannelMode> modes;
    Eigen::VectorXcd coeff;
    SystemParams params;

    cplx value(double x, double y) const;
    cplx wall_dx(double wall_x, double y) const;
};

ChannelState channel_eigenstate(double E_star, const SystemParams& params,
                                const ChannelBasisConfig& cfg);

// ---------------------------------------------------------------------------
// Galerkin engine: Legendre-Dirichlet (Shen) basis in x, oscillator basis in
// y.  The i^m gauge turns each inversion-parity block into a real symmetric
// generalized eigenproblem.  Exponentially convergent and exact at the walls.
// ---------------------------------------------------------------------------

struct GalerkinConfig {
    int mx = 88;   // Legendre-Dirichlet modes
    int ny = 64;   // oscillator levels
    double e_min = 0.0;
    double e_max = 0.0;  // keep eigenpairs in [e_min, e_max]; 0,0 keeps all
};

struct GalerkinLevel {
    double energy = 0.0;
    int parity = +1;       // under inversion about (d/2, 0)
    int block = 0;
    int index_in_block = 0;
};

class GalerkinSolver {
public:
    GalerkinSolver(const SystemParams& params, const GalerkinConfig& cfg);

    const std::vector<GalerkinLevel>& levels() const { return levels_; }
    std::vector<GalerkinLevel> levels_in(double lo, double hi) const;

    // state evaluation
    cplx value(const GalerkinLevel& lv, double x, double y) const;
    cplx wall_dx(const GalerkinLevel& lv, double wall_x, double y) const;

    const SystemParams& params() const { return params_; }
    const GalerkinConfig& config() const { return cfg_; }

private:
    SystemParams params_;
    GalerkinConfig cfg_;
    double ell_ = 1.0;  // oscillator length for Omega

    struct Block {
        std::vector<std::pair<int, int>> idx;  // (m, n)
        std::vector<double> evals;
        Eigen::MatrixXd evecs;  // gauged real coefficients, B-orthonormal
    };
    std::array<Block, 2> blocks_;
    std::vector<GalerkinLevel> levels_;

    void build();
};

}  // namespace ablscar
