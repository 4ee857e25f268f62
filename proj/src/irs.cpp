#include "irsotfs/irs.hpp"

#include <stdexcept>

namespace irsotfs {

void IrsPanel::validate() const {
    if (size() < 1) throw std::invalid_argument("IrsPanel: need at least one element");
    if (amplitudes.size() != phases.size())
        throw std::invalid_argument("IrsPanel: amplitude/phase length mismatch");
    for (int k = 0; k < size(); ++k) {
        if (amplitudes[k] <= 0.0 || amplitudes[k] > 1.0)
            throw std::invalid_argument("IrsPanel: amplitudes must lie in (0, 1]");
        if (phases[k] <= -kPi || phases[k] > kPi)
            throw std::invalid_argument("IrsPanel: phases must lie in (-pi, pi]");
    }
}

IrsPanel IrsPanel::ideal(int k) {
    return {Eigen::VectorXd::Ones(k), Eigen::VectorXd::Zero(k)};
}

IrsPanel IrsPanel::with_phases(const Eigen::VectorXd& phases) {
    return {Eigen::VectorXd::Ones(phases.size()), phases};
}

void MimoLinkSet::validate() const {
    dims.validate();
    if (n_t < 1 || n_r < 1) throw std::invalid_argument("MimoLinkSet: antenna counts");
    auto check = [&](const std::vector<std::vector<TapList>>& grid, int rows, int cols,
                     const char* what) {
        if (static_cast<int>(grid.size()) != rows)
            throw std::invalid_argument(std::string("MimoLinkSet: ") + what);
        for (const auto& row : grid) {
            if (static_cast<int>(row.size()) != cols)
                throw std::invalid_argument(std::string("MimoLinkSet: ") + what);
            for (const auto& taps : row) taps.validate();
        }
    };
    if (has_direct) check(direct, n_r, n_t, "direct grid shape");
    if (n_irs > 0) {
        check(bs_irs, n_irs, n_t, "bs_irs grid shape");
        check(irs_ue, n_r, n_irs, "irs_ue grid shape");
    }
}

namespace {

CMat assemble(const std::vector<std::vector<TapList>>& grid, int n, int M) {
    const int rows = static_cast<int>(grid.size());
    const int cols = static_cast<int>(grid.front().size());
    CMat out(rows * M, cols * M);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            out.block(r * M, c * M, M, M) = channel_matrix(grid[r][c], n);
    return out;
}

}  // namespace

CMat MimoLinkSet::direct_matrix(int n) const {
    if (!has_direct) return CMat::Zero(n_r * dims.M, n_t * dims.M);
    return assemble(direct, n, dims.M);
}

CMat MimoLinkSet::bs_irs_matrix(int n) const { return assemble(bs_irs, n, dims.M); }

CMat MimoLinkSet::irs_ue_matrix(int n) const { return assemble(irs_ue, n, dims.M); }

MimoLinkSet MimoLinkSet::sample(Rng& rng, const ChannelProfile& profile, GridDims dims,
                                int n_t, int n_r, int n_irs, bool with_direct) {
    MimoLinkSet links;
    links.dims = dims;
    links.n_t = n_t;
    links.n_r = n_r;
    links.n_irs = n_irs;
    links.has_direct = with_direct;
    auto draw_grid = [&](int rows, int cols) {
        std::vector<std::vector<TapList>> grid(rows);
        for (auto& row : grid) {
            row.reserve(cols);
            for (int c = 0; c < cols; ++c) row.push_back(sample_taps(rng, profile, dims));
        }
        return grid;
    };
    if (with_direct) links.direct = draw_grid(n_r, n_t);
    if (n_irs > 0) {
        links.bs_irs = draw_grid(n_irs, n_t);
        links.irs_ue = draw_grid(n_r, n_irs);
    }
    return links;
}

CMat rc_matrix(const IrsPanel& panel, int M) {
    panel.validate();
    const int k = panel.size();
    CMat theta = CMat::Zero(k * M, k * M);
    for (int i = 0; i < k; ++i) {
        const cd coeff = panel.amplitudes[i] *
                         cd(std::cos(panel.phases[i]), std::sin(panel.phases[i]));
        for (int m = 0; m < M; ++m) theta(i * M + m, i * M + m) = coeff;
    }
    return theta;
}

CMat cascade(const MimoLinkSet& links, const IrsPanel& panel, int n) {
    links.validate();
    if (links.n_irs == 0) return links.direct_matrix(n);
    if (panel.size() != links.n_irs)
        throw std::invalid_argument("cascade: panel size mismatch");
    const CMat d = links.irs_ue_matrix(n);
    const CMat g = links.bs_irs_matrix(n);
    const CMat hd = links.direct_matrix(n);
    return cascade_from(&hd, d, g, panel);
}

CMat cascade_from(const CMat* direct, const CMat& d_mat, const CMat& g_mat,
                  const IrsPanel& panel) {
    const int km = static_cast<int>(d_mat.cols());
    if (g_mat.rows() != km) throw std::invalid_argument("cascade: D/G dimension mismatch");
    const int M = km / panel.size();
    if (M * panel.size() != km)
        throw std::invalid_argument("cascade: K does not divide the block dimension");
    // D * (diag(rc) (x) I_M) * G without forming the diagonal matrix.
    CMat out = direct ? *direct : CMat::Zero(d_mat.rows(), g_mat.cols());
    if (direct && (direct->rows() != d_mat.rows() || direct->cols() != g_mat.cols()))
        throw std::invalid_argument("cascade: direct-link dimension mismatch");
    for (int k = 0; k < panel.size(); ++k) {
        const cd coeff = panel.amplitudes[k] *
                         cd(std::cos(panel.phases[k]), std::sin(panel.phases[k]));
        out.noalias() += coeff * d_mat.middleCols(k * M, M) * g_mat.middleRows(k * M, M);
    }
    return out;
}

namespace {

/// Strongest tap of a list by |gain|.
const PathTap& dominant_tap(const TapList& taps) {
    const PathTap* best = &taps.paths.front();
    for (const auto& p : taps.paths)
        if (std::abs(p.gain) > std::abs(best->gain)) best = &p;
    return *best;
}

}  // namespace

Eigen::VectorXd stm_phases(const MimoLinkSet& links, bool include_direct) {
    links.validate();
    if (links.n_irs < 1) throw std::invalid_argument("stm_phases: no IRS elements");
    double direct_phase = 0.0;
    if (include_direct) {
        if (!links.has_direct)
            throw std::invalid_argument("stm_phases: include_direct without direct link");
        direct_phase = std::arg(dominant_tap(links.direct[0][0]).gain);
    }
    Eigen::VectorXd phases(links.n_irs);
    for (int k = 0; k < links.n_irs; ++k) {
        const auto& d_taps = links.bs_irs[k][0].paths;   // tx antenna 1
        const auto& g_taps = links.irs_ue[0][k].paths;   // rx antenna 1
        if (d_taps.empty() || g_taps.empty())
            throw std::invalid_argument("stm_phases: empty tap list");
        cd best_prod = d_taps.front().gain * g_taps.front().gain;
        for (const auto& dp : d_taps)
            for (const auto& gp : g_taps) {
                const cd prod = dp.gain * gp.gain;
                if (std::abs(prod) > std::abs(best_prod)) best_prod = prod;
            }
        phases[k] = wrap_angle(direct_phase - std::arg(best_prod));
    }
    return phases;
}

Eigen::VectorXd energy_ascent_phases(const MimoLinkSet& links,
                                     const Eigen::VectorXd& init, int passes) {
    links.validate();
    const int K = links.n_irs;
    const int M = links.dims.M;
    if (K < 1) throw std::invalid_argument("energy_ascent_phases: no IRS elements");
    Eigen::VectorXd phases = init;

    // Pre-assemble the per-symbol rank-M element contributions
    // C_{n,k} = D_n[:, k-block] * G_n[k-block, :] and the fixed part.
    const int N = links.dims.N;
    std::vector<CMat> fixed(N);
    std::vector<std::vector<CMat>> contrib(N);
    for (int n = 0; n < N; ++n) {
        const CMat d = links.irs_ue_matrix(n);
        const CMat g = links.bs_irs_matrix(n);
        fixed[n] = links.direct_matrix(n);
        contrib[n].reserve(K);
        for (int k = 0; k < K; ++k)
            contrib[n].push_back(d.middleCols(k * M, M) * g.middleRows(k * M, M));
    }

    auto phase = [](double t) { return cd(std::cos(t), std::sin(t)); };
    for (int pass = 0; pass < passes; ++pass) {
        for (int k = 0; k < K; ++k) {
            // Total channel = rest + e^{j theta_k} C_k; energy is maximized
            // by theta_k = -arg(sum_n <rest_n, C_{n,k}>).
            cd cross = 0.0;
            for (int n = 0; n < N; ++n) {
                CMat rest = fixed[n];
                for (int j = 0; j < K; ++j)
                    if (j != k) rest.noalias() += phase(phases[j]) * contrib[n][j];
                cross += (rest.adjoint() * contrib[n][k]).trace();
            }
            phases[k] = wrap_angle(-std::arg(cross));
        }
    }
    return phases;
}

}  // namespace irsotfs
