#include "irsotfs/beamform.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <stdexcept>

namespace irsotfs {

namespace {

/// log(det(B)) for Hermitian positive-definite B, via Cholesky.
double log_det_hermitian_pd(const CMat& b) {
    const Eigen::LLT<CMat> llt(b);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("log_det: matrix not positive definite");
    double acc = 0;
    for (Eigen::Index i = 0; i < b.rows(); ++i)
        acc += std::log(llt.matrixLLT()(i, i).real());
    return 2.0 * acc;
}

void check_channels(const std::vector<CMat>& channels) {
    if (channels.empty()) throw std::invalid_argument("beamform: no channel matrices");
    for (const auto& h : channels)
        if (!h.allFinite()) throw std::invalid_argument("beamform: non-finite channel");
}

}  // namespace

Beamformer Beamformer::zero(int n_t, int n_s, int M, int N) {
    Beamformer w{n_t, n_s, M, N, {}};
    w.v.assign(static_cast<size_t>(N) * M, CMat::Zero(n_t, n_s));
    return w;
}

Beamformer Beamformer::uniform(int n_t, int n_s, int M, int N, double p_max) {
    Beamformer w = zero(n_t, n_s, M, N);
    const double c = std::sqrt(p_max / (static_cast<double>(N) * M * n_s));
    for (auto& blk : w.v)
        for (int s = 0; s < n_s; ++s) blk(s % n_t, s) = c;
    return w;
}

Beamformer Beamformer::random(int n_t, int n_s, int M, int N, double p_max, Rng& rng) {
    Beamformer w = zero(n_t, n_s, M, N);
    for (auto& blk : w.v)
        for (int s = 0; s < n_s; ++s)
            for (int t = 0; t < n_t; ++t) blk(t, s) = rng.cnormal();
    const double scale = std::sqrt(p_max / w.power());
    for (auto& blk : w.v) blk *= scale;
    return w;
}

CMat Beamformer::assemble(int n) const {
    CMat out = CMat::Zero(static_cast<Eigen::Index>(n_t) * M,
                          static_cast<Eigen::Index>(n_s) * M);
    for (int j = 0; j < M; ++j) {
        const CMat& blk = block(n, j);
        for (int s = 0; s < n_s; ++s)
            for (int t = 0; t < n_t; ++t) out(t * M + j, s * M + j) = blk(t, s);
    }
    return out;
}

double Beamformer::power() const {
    double acc = 0;
    for (const auto& blk : v) acc += blk.squaredNorm();
    return acc;
}

CVec Beamformer::pack() const {
    CVec out(static_cast<Eigen::Index>(N) * M * n_s * n_t);
    Eigen::Index idx = 0;
    for (const auto& blk : v)
        for (int s = 0; s < n_s; ++s)
            for (int t = 0; t < n_t; ++t) out[idx++] = blk(t, s);
    return out;
}

void Beamformer::unpack(const CVec& w) {
    if (w.size() != static_cast<Eigen::Index>(N) * M * n_s * n_t)
        throw std::invalid_argument("Beamformer::unpack: size mismatch");
    Eigen::Index idx = 0;
    for (auto& blk : v)
        for (int s = 0; s < n_s; ++s)
            for (int t = 0; t < n_t; ++t) blk(t, s) = w[idx++];
}

double sum_rate(const Beamformer& w, const std::vector<CMat>& channels, double sigma2,
                GridDims dims) {
    check_channels(channels);
    if (sigma2 <= 0) throw std::invalid_argument("sum_rate: sigma2 must be positive");
    if (static_cast<int>(channels.size()) != dims.N)
        throw std::invalid_argument("sum_rate: need one channel per OFDM symbol");
    double nats = 0;
    for (int n = 0; n < dims.N; ++n) {
        const CMat a = channels[n] * w.assemble(n);
        CMat b = CMat::Identity(a.rows(), a.rows());
        b.noalias() += (1.0 / sigma2) * a * a.adjoint();
        nats += log_det_hermitian_pd(b);
    }
    return nats / std::log(2.0) / dims.symbol_len();
}

std::vector<CMat> update_lambda(const Beamformer& w, const std::vector<CMat>& channels,
                                double sigma2) {
    check_channels(channels);
    std::vector<CMat> lambda;
    lambda.reserve(channels.size());
    for (size_t n = 0; n < channels.size(); ++n) {
        const CMat a = channels[n] * w.assemble(static_cast<int>(n));
        lambda.push_back((a.adjoint() * a) / sigma2);
    }
    return lambda;
}

std::vector<CMat> update_alpha(const Beamformer& w, const std::vector<CMat>& channels,
                               double sigma2) {
    check_channels(channels);
    std::vector<CMat> y;
    y.reserve(channels.size());
    for (size_t n = 0; n < channels.size(); ++n) {
        const CMat a = channels[n] * w.assemble(static_cast<int>(n));
        CMat cov = a * a.adjoint();
        cov.diagonal().array() += sigma2;
        y.push_back(Eigen::LDLT<CMat>(cov).solve(a));
    }
    return y;
}

double surrogate_value(const Beamformer& w, const std::vector<CMat>& channels,
                       const std::vector<CMat>& lambda, const std::vector<CMat>& y,
                       double sigma2) {
    double acc = 0;
    for (size_t n = 0; n < channels.size(); ++n) {
        const CMat a = channels[n] * w.assemble(static_cast<int>(n));
        const CMat k = CMat::Identity(lambda[n].rows(), lambda[n].cols()) + lambda[n];
        acc += log_det_hermitian_pd(k) - lambda[n].trace().real();
        CMat cov = a * a.adjoint();
        cov.diagonal().array() += sigma2;
        acc += 2.0 * (k * y[n].adjoint() * a).trace().real() -
               (k * y[n].adjoint() * cov * y[n]).trace().real();
    }
    return acc;
}

CMat Qcqp::dense() const {
    CMat mu = blkdiag(blocks);
    if (mu.rows() != p.size()) throw std::logic_error("Qcqp: inconsistent sizes");
    return mu;
}

Qcqp build_qcqp(const std::vector<CMat>& channels, const std::vector<CMat>& lambda,
                const std::vector<CMat>& y, double sigma2, int M) {
    (void)sigma2;  // enters only the constant term of the surrogate
    check_channels(channels);
    const int N = static_cast<int>(channels.size());
    const int n_t = static_cast<int>(channels.front().cols()) / M;
    const int n_s = static_cast<int>(y.front().cols()) / M;

    Qcqp out;
    out.blocks.reserve(static_cast<size_t>(N) * M * n_s);
    out.p.resize(static_cast<Eigen::Index>(N) * M * n_s * n_t);
    Eigen::Index idx = 0;
    for (int n = 0; n < N; ++n) {
        const CMat k = CMat::Identity(lambda[n].rows(), lambda[n].cols()) + lambda[n];
        const CMat t = channels[n].adjoint() * y[n];  // (N_t M) x (N_s M)
        const CMat mu_full = t * k * t.adjoint();
        const CMat p_full = t * k;
        for (int j = 0; j < M; ++j) {
            CMat blk(n_t, n_t);
            for (int a = 0; a < n_t; ++a)
                for (int b = 0; b < n_t; ++b) blk(a, b) = mu_full(a * M + j, b * M + j);
            // The quadratic form never couples streams or subcarriers:
            // column (s, j) of W_n only meets rows (t, j).
            blk = 0.5 * (blk + blk.adjoint().eval());
            for (int s = 0; s < n_s; ++s) {
                out.blocks.push_back(blk);
                for (int t_i = 0; t_i < n_t; ++t_i)
                    out.p[idx++] = p_full(t_i * M + j, s * M + j);
            }
        }
    }
    return out;
}

namespace {

struct EigenizedBlocks {
    std::vector<CMat> u;                  // eigenvectors per block
    std::vector<Eigen::VectorXd> lam;     // eigenvalues per block
    std::vector<CVec> p_tilde;            // rotated linear term
    double lam_max = 0;
};

EigenizedBlocks eigenize(const std::vector<CMat>& blocks, const CVec& p) {
    EigenizedBlocks e;
    Eigen::Index offset = 0;
    for (const auto& blk : blocks) {
        Eigen::SelfAdjointEigenSolver<CMat> es(blk);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("solve_qcqp: eigendecomposition failed");
        e.u.push_back(es.eigenvectors());
        e.lam.push_back(es.eigenvalues());
        e.p_tilde.push_back(es.eigenvectors().adjoint() *
                            p.segment(offset, blk.rows()));
        e.lam_max = std::max(e.lam_max, es.eigenvalues().maxCoeff());
        offset += blk.rows();
    }
    if (offset != p.size()) throw std::invalid_argument("solve_qcqp: size mismatch");
    return e;
}

}  // namespace

CVec solve_qcqp_blocks(const std::vector<CMat>& blocks, const CVec& p, double p_max) {
    if (p_max <= 0) throw std::invalid_argument("solve_qcqp: P_max must be positive");
    const double p_norm = p.norm();
    if (p_norm == 0.0) return CVec::Zero(p.size());

    const EigenizedBlocks e = eigenize(blocks, p);
    const double null_tol = 1e-12 * std::max(e.lam_max, 1.0);

    auto norm_sq_at = [&](double nu) {
        double acc = 0;
        for (size_t b = 0; b < e.lam.size(); ++b)
            for (Eigen::Index i = 0; i < e.lam[b].size(); ++i) {
                const double denom = e.lam[b][i] + nu;
                acc += std::norm(e.p_tilde[b][i]) / (denom * denom);
            }
        return acc;
    };

    // Interior case: the regularized pseudo-inverse solution, valid when
    // p has no component on the null space.
    bool null_component = false;
    double interior_norm_sq = 0;
    for (size_t b = 0; b < e.lam.size(); ++b)
        for (Eigen::Index i = 0; i < e.lam[b].size(); ++i) {
            if (e.lam[b][i] <= null_tol) {
                if (std::abs(e.p_tilde[b][i]) > 1e-10 * p_norm) null_component = true;
            } else {
                interior_norm_sq += std::norm(e.p_tilde[b][i]) /
                                    (e.lam[b][i] * e.lam[b][i]);
            }
        }

    double nu = 0.0;
    if (null_component || interior_norm_sq > p_max) {
        double lo = 0.0;
        double hi = p_norm / std::sqrt(p_max);  // ||w(hi)||^2 <= P_max always
        while (norm_sq_at(hi) > p_max) hi *= 2.0;
        while (hi - lo > 1e-10 * hi) {
            const double mid = 0.5 * (lo + hi);
            (norm_sq_at(mid) <= p_max ? hi : lo) = mid;
        }
        nu = hi;
    }

    CVec w(p.size());
    Eigen::Index offset = 0;
    for (size_t b = 0; b < e.lam.size(); ++b) {
        const Eigen::Index dim = e.lam[b].size();
        CVec wt(dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
            const double denom = e.lam[b][i] + nu;
            wt[i] = denom > null_tol ? e.p_tilde[b][i] / denom : cd(0, 0);
        }
        w.segment(offset, dim) = e.u[b] * wt;
        offset += dim;
    }
    return w;
}

CVec solve_qcqp(const CMat& mu, const CVec& p, double p_max) {
    if (mu.rows() != mu.cols() || mu.rows() != p.size())
        throw std::invalid_argument("solve_qcqp: dimension mismatch");
    return solve_qcqp_blocks({mu}, p, p_max);
}

AoResult ao_beamform(const std::vector<CMat>& channels, double sigma2, double p_max,
                     GridDims dims, int n_s, const AoOptions& opts) {
    check_channels(channels);
    if (p_max <= 0) throw std::invalid_argument("ao_beamform: P_max must be positive");
    const int n_t = static_cast<int>(channels.front().cols()) / dims.M;

    AoResult result;
    if (opts.random_init) {
        Rng rng(opts.init_seed);
        result.w = Beamformer::random(n_t, n_s, dims.M, dims.N, p_max, rng);
    } else {
        result.w = Beamformer::uniform(n_t, n_s, dims.M, dims.N, p_max);
    }

    double rate = sum_rate(result.w, channels, sigma2, dims);
    result.rate_trace.push_back(rate);
    for (int it = 0; it < opts.max_iter; ++it) {
        const auto lambda = update_lambda(result.w, channels, sigma2);
        const auto y = update_alpha(result.w, channels, sigma2);
        const Qcqp q = build_qcqp(channels, lambda, y, sigma2, dims.M);
        result.w.unpack(solve_qcqp_blocks(q.blocks, q.p, p_max));

        const double next = sum_rate(result.w, channels, sigma2, dims);
        result.rate_trace.push_back(next);
        result.iterations = it + 1;
        if (std::abs(next - rate) <= opts.tol * std::max(std::abs(rate), 1e-12)) break;
        rate = next;
    }
    return result;
}

}  // namespace irsotfs
