#include "irsotfs/chanest.hpp"

#include <Eigen/Cholesky>
#include <limits>
#include <stdexcept>

namespace irsotfs {

PilotSchedule PilotSchedule::dft_design(int l, int t, int k, int tx_dim) {
    if (k > l)
        throw std::invalid_argument("PilotSchedule: DFT design needs L >= K");
    if (tx_dim > t)
        throw std::invalid_argument("PilotSchedule: DFT design needs T >= N_t*N*M");
    PilotSchedule s;
    s.blocks = l;
    s.slots = t;
    s.phases = std::sqrt(static_cast<double>(l)) * dft_matrix(l).leftCols(k);
    s.pilots = std::sqrt(static_cast<double>(t)) * dft_matrix(t).leftCols(tx_dim);
    return s;
}

void PilotSchedule::validate(int k, int rx_dim, int tx_dim, int nm) const {
    if (phases.rows() != blocks || phases.cols() != k)
        throw std::invalid_argument("PilotSchedule: phase matrix must be L x K");
    if (pilots.rows() != slots || pilots.cols() != tx_dim)
        throw std::invalid_argument("PilotSchedule: pilot matrix must be T x tx_dim");
    for (Eigen::Index i = 0; i < phases.size(); ++i)
        if (std::abs(std::abs(phases.data()[i]) - 1.0) > 1e-9)
            throw std::invalid_argument("PilotSchedule: phases must be unit modulus");
    const long long lt = static_cast<long long>(blocks) * slots;
    if (lt < static_cast<long long>(k) * nm)
        throw std::invalid_argument(
            "PilotSchedule: underdetermined (need L*T >= K*N*M)");
    if (static_cast<long long>(blocks) * rx_dim * slots <
        static_cast<long long>(k) * nm * tx_dim)
        throw std::invalid_argument(
            "PilotSchedule: underdetermined (need L*rx*T >= K*N*M*tx)");
}

void CascadeFactors::validate() const {
    if (k < 1 || nm < 1) throw std::invalid_argument("CascadeFactors: bad shape");
    if (d.cols() != static_cast<Eigen::Index>(k) * nm ||
        g.rows() != static_cast<Eigen::Index>(k) * nm)
        throw std::invalid_argument("CascadeFactors: block partitioning mismatch");
    if (!d.allFinite() || !g.allFinite())
        throw std::invalid_argument("CascadeFactors: non-finite entries");
}

CMat CascadeFactors::cascade(const Eigen::RowVectorXcd& theta) const {
    if (theta.size() != k) throw std::invalid_argument("cascade: phase-row length");
    CMat out = CMat::Zero(d.rows(), g.cols());
    for (int e = 0; e < k; ++e) out.noalias() += theta[e] * d_block(e) * g_block(e);
    return out;
}

CascadeFactors CascadeFactors::random(int k, int nm, int rx_dim, int tx_dim, Rng& rng) {
    CascadeFactors f;
    f.k = k;
    f.nm = nm;
    f.d.resize(rx_dim, static_cast<Eigen::Index>(k) * nm);
    f.g.resize(static_cast<Eigen::Index>(k) * nm, tx_dim);
    for (Eigen::Index j = 0; j < f.d.cols(); ++j)
        for (Eigen::Index i = 0; i < f.d.rows(); ++i) f.d(i, j) = rng.cnormal();
    for (Eigen::Index j = 0; j < f.g.cols(); ++j)
        for (Eigen::Index i = 0; i < f.g.rows(); ++i) f.g(i, j) = rng.cnormal();
    return f;
}

CascadeFactors CascadeFactors::from_links(const MimoLinkSet& links, int symbol_offset) {
    links.validate();
    if (links.n_irs < 1)
        throw std::invalid_argument("CascadeFactors: link set has no IRS");
    const int M = links.dims.M;
    const int N = links.dims.N;
    const int nm = N * M;
    CascadeFactors f;
    f.k = links.n_irs;
    f.nm = nm;
    f.d = CMat::Zero(static_cast<Eigen::Index>(links.n_r) * nm,
                     static_cast<Eigen::Index>(f.k) * nm);
    f.g = CMat::Zero(static_cast<Eigen::Index>(f.k) * nm,
                     static_cast<Eigen::Index>(links.n_t) * nm);
    for (int n = 0; n < N; ++n) {
        const int sym = n + symbol_offset;
        for (int e = 0; e < f.k; ++e) {
            for (int r = 0; r < links.n_r; ++r)
                f.d.block(r * nm + n * M, e * nm + n * M, M, M) =
                    channel_matrix(links.irs_ue[r][e], sym);
            for (int t = 0; t < links.n_t; ++t)
                f.g.block(e * nm + n * M, t * nm + n * M, M, M) =
                    channel_matrix(links.bs_irs[e][t], sym);
        }
    }
    return f;
}

std::vector<CMat> simulate_rx_tensor(const CascadeFactors& factors,
                                     const PilotSchedule& schedule, double sigma2,
                                     Rng& rng) {
    factors.validate();
    schedule.validate(factors.k, static_cast<int>(factors.d.rows()),
                      static_cast<int>(factors.g.cols()), factors.nm);
    const CMat gx = factors.g * schedule.pilots.transpose();  // (K nm) x T
    std::vector<CMat> slices;
    slices.reserve(schedule.blocks);
    for (int l = 0; l < schedule.blocks; ++l) {
        CMat scaled = gx;
        for (int e = 0; e < factors.k; ++e)
            scaled.middleRows(e * factors.nm, factors.nm) *= schedule.phases(l, e);
        CMat r = factors.d * scaled;
        if (sigma2 > 0)
            for (Eigen::Index j = 0; j < r.cols(); ++j)
                for (Eigen::Index i = 0; i < r.rows(); ++i)
                    r(i, j) += rng.cnormal(sigma2);
        slices.push_back(std::move(r));
    }
    return slices;
}

CMat khatri_rao(const CMat& a, const CMat& b) {
    if (a.cols() != b.cols())
        throw std::invalid_argument("khatri_rao: column count mismatch");
    CMat out(a.rows() * b.rows(), a.cols());
    for (Eigen::Index c = 0; c < a.cols(); ++c)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            out.block(i * b.rows(), c, b.rows(), 1) = a(i, c) * b.col(c);
    return out;
}

namespace {

/// Column blocks of width nm scaled by theta[e].
CMat phase_scaled(const CMat& d, const Eigen::RowVectorXcd& theta, int nm) {
    CMat out = d;
    for (Eigen::Index e = 0; e < theta.size(); ++e)
        out.middleCols(e * nm, nm) *= theta[e];
    return out;
}

/// Row blocks of height nm scaled by theta[e].
CMat phase_scaled_rows(const CMat& m, const Eigen::RowVectorXcd& theta, int nm) {
    CMat out = m;
    for (Eigen::Index e = 0; e < theta.size(); ++e)
        out.middleRows(e * nm, nm) *= theta[e];
    return out;
}

void check_rank(const Eigen::LDLT<CMat>& factor, const char* which) {
    const auto diag = factor.vectorD();
    const double dmax = diag.real().maxCoeff();
    if (!(dmax > 0) || diag.real().minCoeff() < 1e-12 * dmax)
        throw std::runtime_error(std::string("als_estimate: ") + which +
                                 " system is rank deficient (unidentifiable schedule)");
}

double model_residual(const std::vector<CMat>& slices, const PilotSchedule& schedule,
                      const CascadeFactors& f, const CMat& gx) {
    double acc = 0;
    for (int l = 0; l < schedule.blocks; ++l) {
        const CMat scaled = phase_scaled(f.d, schedule.phases.row(l), f.nm);
        acc += (slices[l] - scaled * gx).squaredNorm();
    }
    return std::sqrt(acc);
}

}  // namespace

AlsResult als_estimate(const std::vector<CMat>& slices, const PilotSchedule& schedule,
                       const CascadeFactors& init, int max_sweeps, double tol) {
    init.validate();
    if (static_cast<int>(slices.size()) != schedule.blocks)
        throw std::invalid_argument("als_estimate: slice count != L");
    const int nm = init.nm;
    const int k = init.k;
    const Eigen::Index knm = static_cast<Eigen::Index>(k) * nm;
    const Eigen::Index rx = init.d.rows();
    const Eigen::Index tx = init.g.cols();
    schedule.validate(k, static_cast<int>(rx), static_cast<int>(tx), nm);

    AlsResult result;
    result.est = init;
    CascadeFactors& f = result.est;
    const CMat xt = schedule.pilots.transpose();
    const CMat xhx = schedule.pilots.adjoint() * schedule.pilots;  // tx x tx

    double prev = std::numeric_limits<double>::infinity();
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        // D step: stack R[l] = D * Z_l over l and solve the LS system.
        CMat zzh = CMat::Zero(knm, knm);
        CMat rzh = CMat::Zero(rx, knm);
        {
            const CMat gxt = f.g * xt;  // (K nm) x T
            for (int l = 0; l < schedule.blocks; ++l) {
                const CMat z = phase_scaled_rows(gxt, schedule.phases.row(l), nm);
                zzh.noalias() += z * z.adjoint();
                rzh.noalias() += slices[l] * z.adjoint();
            }
        }
        Eigen::LDLT<CMat> dfac(zzh);
        if (sweep == 0) check_rank(dfac, "D-step");
        f.d = dfac.solve(rzh.adjoint()).adjoint();

        // G step: normal equations of the stacked vectorized system,
        // using sum_l (X^H X) (x) (D_l^H D_l).
        CMat normal = CMat::Zero(knm * tx, knm * tx);
        CVec rhs = CVec::Zero(knm * tx);
        for (int l = 0; l < schedule.blocks; ++l) {
            const CMat dl = phase_scaled(f.d, schedule.phases.row(l), nm);
            normal.noalias() += kron(xhx, dl.adjoint() * dl);
            const CMat tmp = dl.adjoint() * slices[l] * schedule.pilots.conjugate();
            rhs += tmp.reshaped();
        }
        Eigen::LDLT<CMat> gfac(normal);
        if (sweep == 0) check_rank(gfac, "G-step");
        const CVec sol = gfac.solve(rhs);
        f.g = sol.reshaped(knm, tx);

        const double res = model_residual(slices, schedule, f, f.g * xt);
        result.residuals.push_back(res);
        result.sweeps = sweep + 1;
        const double denom = std::max(prev, 1e-300);
        if (sweep > 0 && std::abs(prev - res) <= tol * denom) break;
        prev = res;
    }
    return result;
}

MseReport cascade_mse(const CascadeFactors& truth, const CascadeFactors& est,
                      const CMat& phases) {
    truth.validate();
    est.validate();
    if (truth.d.rows() != est.d.rows() || truth.g.cols() != est.g.cols() ||
        truth.k != est.k || truth.nm != est.nm)
        throw std::invalid_argument("cascade_mse: factor shape mismatch");
    if (phases.cols() != truth.k || phases.rows() < 1)
        throw std::invalid_argument("cascade_mse: phase matrix shape");

    MseReport report;
    for (Eigen::Index l = 0; l < phases.rows(); ++l) {
        const CMat h_true = truth.cascade(phases.row(l));
        const double denom = h_true.squaredNorm();
        if (denom == 0)
            throw std::invalid_argument("cascade_mse: zero true channel");
        report.cascaded +=
            (est.cascade(phases.row(l)) - h_true).squaredNorm() / denom;
    }
    report.cascaded /= static_cast<double>(phases.rows());

    // Factor errors after resolving the per-block scaling ambiguity
    // D_k -> c_k D_k, G_k -> G_k / c_k.
    CMat d_aligned = est.d;
    CMat g_aligned = est.g;
    for (int e = 0; e < truth.k; ++e) {
        const CMat de = est.d_block(e);
        const double nrm = de.squaredNorm();
        cd c = nrm > 0 ? (de.conjugate().cwiseProduct(truth.d_block(e)).sum()) / nrm
                       : cd(1, 0);
        if (std::abs(c) < 1e-12) c = cd(1, 0);
        d_aligned.middleCols(e * truth.nm, truth.nm) *= c;
        g_aligned.middleRows(e * truth.nm, truth.nm) /= c;
    }
    report.factor_d = (d_aligned - truth.d).squaredNorm() / truth.d.squaredNorm();
    report.factor_g = (g_aligned - truth.g).squaredNorm() / truth.g.squaredNorm();
    return report;
}

}  // namespace irsotfs
