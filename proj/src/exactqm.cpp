#include "exactqm.hpp"

#include <algorithm>
#include <random>

namespace ablscar {

// ---------------------------------------------------------------------------
// channel engine
// ---------------------------------------------------------------------------

std::vector<ChannelMode> channel_basis(double E, const SystemParams& params,
                                       const ChannelBasisConfig& cfg) {
    if (cfg.n_max < 1) throw InputError("channel_basis: n_max must be >= 1");
    const double hbar = params.hbar, m = params.mass;
    const double Om = params.Omega();
    const double w0 = params.omega0;
    if (w0 <= 0.0) throw InputError("channel_basis: omega0 must be positive");
    const double kappa_max = cfg.kappa_max_scale / params.d;
    const double eB = params.eB();

    std::vector<ChannelMode> out;
    for (int n = 0; n <= cfg.n_max; ++n) {
        const double thr = hbar * Om * (n + 0.5);
        // E = thr + hbar^2 k^2 w0^2 / (2 m Om^2)
        const double k2 = (E - thr) * 2.0 * m * Om * Om / (hbar * hbar * w0 * w0);
        if (k2 >= 0.0) {
            const double k = std::sqrt(k2);
            for (double sk : {k, -k}) {
                ChannelMode md;
                md.n_y = n;
                md.k = sk;
                md.y_center = -hbar * sk * eB / (m * m * Om * Om);
                md.x_ref = 0.0;
                md.threshold = thr;
                out.push_back(md);
            }
            if (k == 0.0) out.pop_back();  // degenerate pair collapses
        } else if (cfg.include_evanescent) {
            const double kap = std::sqrt(-k2);
            if (kap <= kappa_max) {
                for (int sign : {+1, -1}) {
                    ChannelMode md;
                    md.n_y = n;
                    md.k = cplx(0.0, sign * kap);
                    md.y_center = -hbar * md.k * eB / (m * m * Om * Om);
                    md.x_ref = (sign > 0) ? 0.0 : params.d;  // decay into the strip
                    md.evanescent = true;
                    md.threshold = thr;
                    out.push_back(md);
                }
            }
        }
    }
    return out;
}

namespace {

cplx channel_transverse(const ChannelMode& mode, const SystemParams& params, double y) {
    const double Om = params.Omega();
    const double ell = std::sqrt(params.hbar / (params.mass * Om));
    const cplx xi = (cplx(y, 0.0) - mode.y_center) / ell;
    const auto phis = oscillator_phi_all(mode.n_y, xi);
    return phis[mode.n_y] / std::sqrt(ell);
}

}  // namespace

cplx channel_mode_value(const ChannelMode& mode, const SystemParams& params, double x, double y) {
    return std::exp(cplx(0.0, 1.0) * mode.k * (x - mode.x_ref)) *
           channel_transverse(mode, params, y);
}

cplx channel_mode_dx(const ChannelMode& mode, const SystemParams& params, double x, double y) {
    return cplx(0.0, 1.0) * mode.k * channel_mode_value(mode, params, x, y);
}

namespace {

struct WallMatrix {
    Eigen::MatrixXcd A;           // row-normalized boundary matrix
    Eigen::MatrixXcd W;           // optional interior whitening (may be empty)
    std::vector<ChannelMode> modes;
};

WallMatrix build_wall_matrix(double E, const SystemParams& params, const ChannelBasisConfig& cfg) {
    WallMatrix wm;
    wm.modes = channel_basis(E, params, cfg);
    const std::size_t ncols = wm.modes.size();
    if (ncols == 0) throw NumericError("spectrum_scan: empty channel basis");
    const int nc = cfg.collocation_per_wall;
    const double y_t = std::sqrt(2.0 * E / (params.mass * sq(params.omega0)));
    const double y_cut = cfg.y_cut_factor * y_t;

    Eigen::MatrixXcd A(2 * nc, ncols);
    for (int i = 0; i < nc; ++i) {
        const double y = -y_cut + 2.0 * y_cut * i / (nc - 1);
        for (std::size_t c = 0; c < ncols; ++c) {
            A(i, c) = channel_mode_value(wm.modes[c], params, 0.0, y);
            A(nc + i, c) = channel_mode_value(wm.modes[c], params, params.d, y);
        }
    }
    // scale rows to unit norm (skip numerically empty rows)
    for (int r = 0; r < A.rows(); ++r) {
        const double nn = A.row(r).norm();
        if (nn > 1e-300) A.row(r) /= nn;
    }

    if (cfg.interior_regularization) {
        std::mt19937 rng(cfg.interior_seed);
        std::uniform_real_distribution<double> ux(0.02 * params.d, 0.98 * params.d);
        std::uniform_real_distribution<double> uy(-y_cut, y_cut);
        Eigen::MatrixXcd Ai(cfg.interior_points, ncols);
        for (int i = 0; i < cfg.interior_points; ++i) {
            const double x = ux(rng), y = uy(rng);
            for (std::size_t c = 0; c < ncols; ++c)
                Ai(i, c) = channel_mode_value(wm.modes[c], params, x, y);
        }
        Ai /= std::sqrt(static_cast<double>(cfg.interior_points));
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(Ai, Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        int rank = 0;
        for (int i = 0; i < sv.size(); ++i)
            if (sv(i) > cfg.interior_rank_cut * sv(0)) ++rank;
        if (rank == 0) throw NumericError("spectrum_scan: interior matrix has zero rank");
        Eigen::MatrixXcd W(ncols, rank);
        for (int i = 0; i < rank; ++i) W.col(i) = svd.matrixV().col(i) / sv(i);
        wm.W = std::move(W);
    }
    return wm;
}

}  // namespace

double channel_sigma_min(double E, const SystemParams& params, const ChannelBasisConfig& cfg) {
    WallMatrix wm = build_wall_matrix(E, params, cfg);
    Eigen::MatrixXcd B = (wm.W.size() > 0) ? (wm.A * wm.W).eval() : wm.A;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(B);
    const auto& sv = svd.singularValues();
    if (sv(0) <= 0.0 || sv(sv.size() - 1) < 1e-14 * sv(0)) {
        if (!cfg.interior_regularization)
            throw NumericError(
                "spectrum_scan: boundary matrix numerically rank-deficient; reduce kappa_max or "
                "enable interior regularization");
    }
    return sv(sv.size() - 1);
}

ChannelScanResult spectrum_scan(double E_lo, double E_hi, std::size_t n_grid,
                                const SystemParams& params, const ChannelBasisConfig& cfg,
                                double minimum_threshold_factor) {
    if (2 * cfg.collocation_per_wall < 2 * (cfg.n_max + 1))
        throw InputError("spectrum_scan: collocation count must exceed basis size");
    ChannelScanResult out;
    out.curve.reserve(n_grid);
    for (std::size_t i = 0; i < n_grid; ++i) {
        const double E = E_lo + (E_hi - E_lo) * i / (n_grid - 1);
        out.curve.push_back({E, channel_sigma_min(E, params, cfg)});
    }
    std::vector<double> vals;
    for (const auto& p : out.curve) vals.push_back(p.sigma_min);
    std::vector<double> sorted = vals;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double median = sorted[sorted.size() / 2];

    auto sigma_of = [&](double E) { return channel_sigma_min(E, params, cfg); };
    for (std::size_t i = 1; i + 1 < out.curve.size(); ++i) {
        if (vals[i] < vals[i - 1] && vals[i] < vals[i + 1] &&
            vals[i] < minimum_threshold_factor * median) {
            // golden-section refinement
            const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
            double a = out.curve[i - 1].E, b = out.curve[i + 1].E;
            double c = b - gr * (b - a), d = a + gr * (b - a);
            double fc = sigma_of(c), fd = sigma_of(d);
            for (int it = 0; it < 40; ++it) {
                if (fc < fd) {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - gr * (b - a);
                    fc = sigma_of(c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + gr * (b - a);
                    fd = sigma_of(d);
                }
            }
            out.minima.push_back(0.5 * (a + b));
        }
    }
    return out;
}

ChannelState channel_eigenstate(double E_star, const SystemParams& params,
                                const ChannelBasisConfig& cfg) {
    WallMatrix wm = build_wall_matrix(E_star, params, cfg);
    Eigen::MatrixXcd B = (wm.W.size() > 0) ? (wm.A * wm.W).eval() : wm.A;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(B, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    ChannelState st;
    st.energy = E_star;
    st.sigma = sv(sv.size() - 1);
    st.modes = wm.modes;
    st.params = params;
    Eigen::VectorXcd v = svd.matrixV().col(sv.size() - 1);
    st.coeff = (wm.W.size() > 0) ? (wm.W * v).eval() : v;
    st.coeff.normalize();
    return st;
}

cplx ChannelState::value(double x, double y) const {
    cplx tot = 0.0;
    for (std::size_t c = 0; c < modes.size(); ++c)
        tot += coeff(c) * channel_mode_value(modes[c], params, x, y);
    return tot;
}

cplx ChannelState::wall_dx(double wall_x, double y) const {
    cplx tot = 0.0;
    for (std::size_t c = 0; c < modes.size(); ++c)
        tot += coeff(c) * channel_mode_dx(modes[c], params, wall_x, y);
    return tot;
}

// ---------------------------------------------------------------------------
// Galerkin engine
// ---------------------------------------------------------------------------

GalerkinSolver::GalerkinSolver(const SystemParams& params, const GalerkinConfig& cfg)
    : params_(params), cfg_(cfg) {
    params_.validate();
    if (cfg_.mx < 4 || cfg_.ny < 2) throw InputError("GalerkinSolver: basis too small");
    ell_ = std::sqrt(params_.hbar / (params_.mass * params_.Omega()));
    build();
}

void GalerkinSolver::build() {
    const int Mx = cfg_.mx, Ny = cfg_.ny;
    const double d = params_.d, hbar = params_.hbar, m = params_.mass;
    const double Om = params_.Omega();
    const double eB = params_.eB();

    std::vector<double> cm(Mx);
    for (int k = 0; k < Mx; ++k) cm[k] = 1.0 / std::sqrt(4.0 * k + 6.0);

    // gauged (i^m) Shen mass matrix in u; the Delta m = 2 entries pick up i^2
    auto mass_diag = [&](int k) { return cm[k] * cm[k] * (2.0 / (2 * k + 1) + 2.0 / (2 * k + 5)); };
    auto mass_off = [&](int k) { return +cm[k] * cm[k + 2] * 2.0 / (2 * k + 5); };
    // gauged p_x coupling: real symmetric, value 2 c_k c_{k+1} at |dm| = 1
    auto coup = [&](int k) { return 2.0 * cm[k] * cm[k + 1]; };

    const double kin = hbar * hbar / (m * d);  // (hbar^2/2m)(2/d), stiffness is identity in u
    // oscillator ladder: y matrix element ell sqrt((n+1)/2)
    auto ymat = [&](int n) { return ell_ * std::sqrt((n + 1) / 2.0); };

    for (int par = 0; par < 2; ++par) {
        Block& blk = blocks_[par];
        blk.idx.clear();
        for (int mm = 0; mm < Mx; ++mm)
            for (int n = 0; n <= Ny; ++n)
                if ((mm + n) % 2 == par) blk.idx.push_back({mm, n});
        const int dim = static_cast<int>(blk.idx.size());
        std::vector<std::vector<int>> pos(Mx, std::vector<int>(Ny + 1, -1));
        for (int i = 0; i < dim; ++i) pos[blk.idx[i].first][blk.idx[i].second] = i;

        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(dim, dim);
        for (int i = 0; i < dim; ++i) {
            const auto [mm, n] = blk.idx[i];
            const double Hy = hbar * Om * (n + 0.5);
            // n' = n, m' in {m, m+-2}
            A(i, i) += kin + (d / 2.0) * mass_diag(mm) * Hy;
            B(i, i) += (d / 2.0) * mass_diag(mm);
            if (mm + 2 < Mx) {
                const int j = pos[mm + 2][n];
                const double mo = (d / 2.0) * mass_off(mm);
                A(i, j) += mo * Hy;
                A(j, i) += mo * Hy;
                B(i, j) += mo;
                B(j, i) += mo;
            }
            // coupling (eB/m) hbar Dg (x) Y
            for (int mm2 : {mm - 1, mm + 1}) {
                if (mm2 < 0 || mm2 >= Mx) continue;
                for (int n2 : {n - 1, n + 1}) {
                    if (n2 < 0 || n2 > Ny) continue;
                    const int j = pos[mm2][n2];
                    if (j < 0 || j < i) continue;  // fill upper triangle once
                    const double val = (eB / m) * hbar * coup(std::min(mm, mm2)) *
                                       ymat(std::min(n, n2));
                    A(i, j) += val;
                    A(j, i) += val;
                }
            }
        }

        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(A, B);
        if (ges.info() != Eigen::Success)
            throw NumericError("GalerkinSolver: eigensolver failed");
        const auto& w = ges.eigenvalues();
        const auto& V = ges.eigenvectors();

        std::vector<int> keep;
        for (int i = 0; i < dim; ++i) {
            if (cfg_.e_max > cfg_.e_min && (w(i) < cfg_.e_min || w(i) > cfg_.e_max)) continue;
            keep.push_back(i);
        }
        blk.evals.resize(keep.size());
        blk.evecs.resize(dim, keep.size());
        for (std::size_t i = 0; i < keep.size(); ++i) {
            blk.evals[i] = w(keep[i]);
            blk.evecs.col(i) = V.col(keep[i]);
        }
    }

    levels_.clear();
    for (int par = 0; par < 2; ++par) {
        for (std::size_t i = 0; i < blocks_[par].evals.size(); ++i) {
            GalerkinLevel lv;
            lv.energy = blocks_[par].evals[i];
            lv.parity = (par == 0) ? +1 : -1;  // P|m,n> = (-1)^{m+n}|m,n>
            lv.block = par;
            lv.index_in_block = static_cast<int>(i);
            levels_.push_back(lv);
        }
    }
    std::sort(levels_.begin(), levels_.end(),
              [](const GalerkinLevel& a, const GalerkinLevel& b) { return a.energy < b.energy; });
}

std::vector<GalerkinLevel> GalerkinSolver::levels_in(double lo, double hi) const {
    std::vector<GalerkinLevel> out;
    for (const auto& lv : levels_)
        if (lv.energy >= lo && lv.energy <= hi) out.push_back(lv);
    return out;
}

namespace {

// phi_m(u) = c_m (L_m(u) - L_{m+2}(u)) for m = 0..Mx-1
void shen_values(int Mx, double u, std::vector<double>& phi) {
    std::vector<double> L(Mx + 3);
    L[0] = 1.0;
    L[1] = u;
    for (int k = 1; k <= Mx + 1; ++k)
        L[k + 1] = ((2.0 * k + 1.0) * u * L[k] - k * L[k - 1]) / (k + 1.0);
    phi.resize(Mx);
    for (int m = 0; m < Mx; ++m) phi[m] = (L[m] - L[m + 2]) / std::sqrt(4.0 * m + 6.0);
}

}  // namespace

cplx GalerkinSolver::value(const GalerkinLevel& lv, double x, double y) const {
    const Block& blk = blocks_[lv.block];
    const double u = 2.0 * x / params_.d - 1.0;
    std::vector<double> phi;
    shen_values(cfg_.mx, u, phi);
    const auto chi = oscillator_phi_all(cfg_.ny, cplx(y / ell_, 0.0));
    const double sqell = std::sqrt(ell_);
    cplx tot = 0.0;
    static const cplx ipow[4] = {1.0, {0.0, 1.0}, -1.0, {0.0, -1.0}};
    for (std::size_t i = 0; i < blk.idx.size(); ++i) {
        const auto [mm, n] = blk.idx[i];
        tot += ipow[mm % 4] * blk.evecs(i, lv.index_in_block) * phi[mm] * (chi[n] / sqell);
    }
    return tot;
}

cplx GalerkinSolver::wall_dx(const GalerkinLevel& lv, double wall_x, double y) const {
    const Block& blk = blocks_[lv.block];
    const bool left = std::abs(wall_x) < 0.5 * params_.d;
    // phi'_m(x) = (2/d) phi'_m(u); phi'_m(u) = -c_m (2m+3) L_{m+1}(u);
    // L_{m+1}(-1) = (-1)^{m+1}, L_{m+1}(+1) = 1
    const auto chi = oscillator_phi_all(cfg_.ny, cplx(y / ell_, 0.0));
    const double sqell = std::sqrt(ell_);
    cplx tot = 0.0;
    static const cplx ipow[4] = {1.0, {0.0, 1.0}, -1.0, {0.0, -1.0}};
    for (std::size_t i = 0; i < blk.idx.size(); ++i) {
        const auto [mm, n] = blk.idx[i];
        const double cmv = 1.0 / std::sqrt(4.0 * mm + 6.0);
        double dphi = -(2.0 / params_.d) * cmv * (2.0 * mm + 3.0);
        dphi *= left ? std::pow(-1.0, mm + 1) : 1.0;
        tot += ipow[mm % 4] * blk.evecs(i, lv.index_in_block) * dphi * (chi[n] / sqell);
    }
    return tot;
}

}  // namespace ablscar
