#include "irsotfs/simkit.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "irsotfs/dd.hpp"

namespace irsotfs {

int worker_count() {
    if (const char* env = std::getenv("IRSOTFS_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

void parallel_for(long long n, const std::function<void(long long)>& fn) {
    const long long workers = std::min<long long>(worker_count(), n);
    if (workers <= 1) {
        for (long long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<long long> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        while (true) {
            const long long i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (long long w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

namespace {

constexpr const char* kVersion = IRSOTFS_VERSION;

double snr_to_linear(double snr_db) { return std::pow(10.0, snr_db / 10.0); }

struct MeanSe {
    double mean = 0, se = 0;
};

MeanSe mean_se(const std::vector<double>& xs) {
    MeanSe out;
    const double n = static_cast<double>(xs.size());
    for (double x : xs) out.mean += x;
    out.mean /= n;
    if (xs.size() > 1) {
        double ss = 0;
        for (double x : xs) ss += (x - out.mean) * (x - out.mean);
        out.se = std::sqrt(ss / (n - 1) / n);
    }
    return out;
}

ResultTable make_table(const ExperimentConfig& cfg) {
    ResultTable t;
    t.scenario = to_string(cfg.scenario);
    t.seed = cfg.seed;
    t.config_hash = cfg.hash();
    t.code_version = kVersion;
    return t;
}

MimoLinkSet draw_links(Rng& rng, const ExperimentConfig& cfg, const Geometry& geo,
                       const ChannelProfile& profile, int k, bool with_direct) {
    MimoLinkSet links = MimoLinkSet::sample(rng, profile, cfg.dims, cfg.n_t, cfg.n_r,
                                            k, with_direct);
    const double a_d = geo.direct_amplitude();
    const double a_g = geo.bs_irs_amplitude();
    const double a_u = geo.irs_ue_amplitude();
    if (with_direct && a_d != 1.0)
        for (auto& row : links.direct)
            for (auto& taps : row) taps = taps.scaled(a_d);
    if (k > 0) {
        if (a_g != 1.0)
            for (auto& row : links.bs_irs)
                for (auto& taps : row) taps = taps.scaled(a_g);
        if (a_u != 1.0)
            for (auto& row : links.irs_ue)
                for (auto& taps : row) taps = taps.scaled(a_u);
    }
    return links;
}

Eigen::RowVectorXcd panel_coefficients(const IrsPanel& panel) {
    Eigen::RowVectorXcd theta(panel.size());
    for (int k = 0; k < panel.size(); ++k)
        theta[k] = panel.amplitudes[k] *
                   cd(std::cos(panel.phases[k]), std::sin(panel.phases[k]));
    return theta;
}

}  // namespace

namespace detail {

LinkMatrices assemble_links(const MimoLinkSet& links) {
    LinkMatrices mats;
    mats.has_direct = links.has_direct;
    mats.k = links.n_irs;
    const int n = links.dims.N;
    mats.hd.reserve(n);
    for (int i = 0; i < n; ++i) mats.hd.push_back(links.direct_matrix(i));
    if (links.n_irs > 0) {
        mats.d.reserve(n);
        mats.g.reserve(n);
        for (int i = 0; i < n; ++i) {
            mats.d.push_back(links.irs_ue_matrix(i));
            mats.g.push_back(links.bs_irs_matrix(i));
        }
    }
    return mats;
}

std::vector<CMat> case_channels(const LinkMatrices& mats, const IrsPanel* panel,
                                bool use_direct) {
    std::vector<CMat> h;
    h.reserve(mats.hd.size());
    for (size_t n = 0; n < mats.hd.size(); ++n) {
        if (!panel) {
            h.push_back(use_direct ? mats.hd[n]
                                   : CMat::Zero(mats.hd[n].rows(), mats.hd[n].cols()));
            continue;
        }
        const CMat* direct = use_direct ? &mats.hd[n] : nullptr;
        h.push_back(cascade_from(direct, mats.d[n], mats.g[n], *panel));
    }
    return h;
}

IrsPanel sum_rate_panel(int case_id, const MimoLinkSet& links, Rng& phase_rng) {
    switch (case_id) {
        case 1:
        case 7:
            return IrsPanel::with_phases(stm_phases(links, links.has_direct));
        case 2: {
            Eigen::VectorXd phases(links.n_irs);
            for (int k = 0; k < links.n_irs; ++k)
                phases[k] = phase_rng.uniform(-kPi, kPi);
            return IrsPanel::with_phases(phases);
        }
        case 3:
            return IrsPanel::with_phases(energy_ascent_phases(
                links, stm_phases(links, links.has_direct)));
        case 4:
        case 6:
            return IrsPanel::with_phases(stm_phases(links, false));
        default:
            throw std::invalid_argument("sum_rate_panel: case has no IRS panel");
    }
}

std::vector<CMat> estimate_cascade(Rng& rng, const MimoLinkSet& links,
                                   const IrsPanel& panel, const AlsConfig& als,
                                   double rel_noise) {
    const int nm = links.dims.N * links.dims.M;
    const int tx_dim = links.n_t * nm;
    const CascadeFactors truth = CascadeFactors::from_links(links);
    const int l = std::max(als.blocks, links.n_irs);
    const int t = std::max(als.slots, tx_dim);
    const PilotSchedule schedule = PilotSchedule::dft_design(l, t, links.n_irs, tx_dim);

    Rng unused(0);
    std::vector<CMat> slices = simulate_rx_tensor(truth, schedule, 0.0, unused);
    double power = 0;
    long long count = 0;
    for (const auto& s : slices) {
        power += s.squaredNorm();
        count += s.size();
    }
    const double sigma2 = rel_noise * power / static_cast<double>(count);
    if (sigma2 > 0)
        for (auto& s : slices)
            for (Eigen::Index j = 0; j < s.cols(); ++j)
                for (Eigen::Index i = 0; i < s.rows(); ++i) s(i, j) += rng.cnormal(sigma2);

    const CascadeFactors init = CascadeFactors::random(
        links.n_irs, nm, static_cast<int>(truth.d.rows()), tx_dim, rng);
    const AlsResult fit = als_estimate(slices, schedule, init, als.max_sweeps, als.tol);

    // Per-symbol blocks of the estimated cascade under the panel in use.
    const CMat h_cas = fit.est.cascade(panel_coefficients(panel));
    const int m = links.dims.M;
    std::vector<CMat> h(links.dims.N);
    for (int n = 0; n < links.dims.N; ++n) {
        CMat block(links.n_r * m, links.n_t * m);
        for (int r = 0; r < links.n_r; ++r)
            for (int tx = 0; tx < links.n_t; ++tx)
                block.block(r * m, tx * m, m, m) =
                    h_cas.block(r * nm + n * m, tx * nm + n * m, m, m);
        h[n] = std::move(block);
    }
    return h;
}

}  // namespace detail

namespace {

using detail::assemble_links;
using detail::case_channels;
using detail::estimate_cascade;
using detail::LinkMatrices;
using detail::sum_rate_panel;

/// Rate of one case on one drop: phases per case, AO beamforming on
/// the (possibly estimated) channels, rate evaluated on the true ones.
double eval_rate_case(const ExperimentConfig& cfg, int case_id,
                      const MimoLinkSet& links, const MimoLinkSet* links_frac,
                      const LinkMatrices& mats, const LinkMatrices* mats_frac,
                      double sigma2, Rng& phase_rng, Rng& est_rng, Rng& bf_rng) {
    const bool use_direct = case_id == 1 || case_id == 2 || case_id == 3 ||
                            case_id == 5 || case_id == 7;
    const MimoLinkSet& ls = case_id == 7 ? *links_frac : links;
    const LinkMatrices& lm = case_id == 7 ? *mats_frac : mats;

    std::vector<CMat> true_h;
    IrsPanel panel;
    if (case_id == 5) {
        true_h = case_channels(lm, nullptr, true);
    } else {
        MimoLinkSet view = ls;
        view.has_direct = use_direct;
        panel = sum_rate_panel(case_id, view, phase_rng);
        true_h = case_channels(lm, &panel, use_direct);
    }

    std::vector<CMat> bf_h = true_h;
    if (case_id == 6) {
        MimoLinkSet view = ls;
        view.has_direct = false;
        bf_h = estimate_cascade(est_rng, view, panel, cfg.als, sigma2);
    }

    const int n_s = cfg.n_r;
    const double p_max = static_cast<double>(cfg.dims.N) * cfg.dims.M * n_s;
    Beamformer w = Beamformer::uniform(cfg.n_t, n_s, cfg.dims.M, cfg.dims.N, p_max);
    if (cfg.beamform.enabled) {
        AoOptions opts;
        opts.max_iter = cfg.beamform.max_iter;
        opts.tol = cfg.beamform.tol;
        opts.random_init = cfg.beamform.random_init;
        opts.init_seed = bf_rng.next();
        w = ao_beamform(bf_h, sigma2, p_max, cfg.dims, n_s, opts).w;
    }
    return sum_rate(w, true_h, sigma2, cfg.dims);
}

ResultTable sum_rate_table(const ExperimentConfig& cfg,
                           const std::vector<double>& xs,
                           const std::function<Geometry(int)>& geometry_at,
                           const std::function<int(int)>& k_at,
                           const std::function<double(int)>& sigma2_at,
                           const char* x_label) {
    const int n_cells = static_cast<int>(xs.size());
    const bool wants_frac =
        std::count(cfg.cases.begin(), cfg.cases.end(), 7) > 0;
    // results[case][cell][trial]
    std::vector<std::vector<std::vector<double>>> results(
        cfg.cases.size(),
        std::vector<std::vector<double>>(n_cells, std::vector<double>(cfg.trials)));

    const int k_max = [&] {
        int m = 0;
        for (int c = 0; c < n_cells; ++c) m = std::max(m, k_at(c));
        return m;
    }();

    parallel_for(static_cast<long long>(n_cells) * cfg.trials, [&](long long job) {
        const int cell = static_cast<int>(job / cfg.trials);
        const int trial = static_cast<int>(job % cfg.trials);
        const Geometry geo = geometry_at(cell);
        const double sigma2 = sigma2_at(cell);
        const int k = k_at(cell);

        // One drop per (cell, trial): all cases share it so orderings
        // are compared under common random numbers. The tap stream is
        // keyed by trial only, so sweeps over x reuse the same fading.
        Rng tap_rng = Rng::stream(cfg.seed, 0x1001, trial);
        MimoLinkSet links = draw_links(tap_rng, cfg, geo, cfg.profile, k_max, true);
        if (k < k_max) {
            links.n_irs = k;
            links.bs_irs.resize(k);
            for (auto& row : links.irs_ue) row.resize(k);
        }
        const LinkMatrices mats = assemble_links(links);

        MimoLinkSet links_frac;
        LinkMatrices mats_frac;
        if (wants_frac) {
            ChannelProfile frac = cfg.profile;
            frac.fractional_doppler = true;
            Rng frac_rng = Rng::stream(cfg.seed, 0x1002, trial);
            links_frac = draw_links(frac_rng, cfg, geo, frac, k, true);
            mats_frac = assemble_links(links_frac);
        }

        for (size_t ci = 0; ci < cfg.cases.size(); ++ci) {
            Rng phase_rng = Rng::stream(cfg.seed, 0x2000 + cfg.cases[ci], cell, trial);
            Rng est_rng = Rng::stream(cfg.seed, 0x3000 + cfg.cases[ci], cell, trial);
            Rng bf_rng = Rng::stream(cfg.seed, 0x4000 + cfg.cases[ci], cell, trial);
            results[ci][cell][trial] = eval_rate_case(
                cfg, cfg.cases[ci], links, wants_frac ? &links_frac : nullptr, mats,
                wants_frac ? &mats_frac : nullptr, sigma2, phase_rng, est_rng, bf_rng);
        }
    });

    ResultTable table = make_table(cfg);
    table.columns.push_back(x_label);
    for (int c : cfg.cases) {
        const std::string label = "case" + std::to_string(c);
        table.columns.push_back(label + "_mean");
        table.columns.push_back(label + "_se");
        table.columns.push_back(label + "_n");
    }
    for (int cell = 0; cell < n_cells; ++cell) {
        std::vector<double> row{xs[cell]};
        for (size_t ci = 0; ci < cfg.cases.size(); ++ci) {
            const MeanSe ms = mean_se(results[ci][cell]);
            row.push_back(ms.mean);
            row.push_back(ms.se);
            row.push_back(static_cast<double>(cfg.trials));
        }
        table.rows.push_back(std::move(row));
    }
    table.validate();
    return table;
}

}  // namespace

ResultTable run_sum_rate(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.scenario != Scenario::SumRate)
        throw std::invalid_argument("run_sum_rate: wrong scenario");
    return sum_rate_table(
        cfg, cfg.snr_db, [&](int) { return cfg.geometry; },
        [&](int) { return cfg.k_irs; },
        [&](int cell) { return 1.0 / snr_to_linear(cfg.snr_db[cell]); }, "snr_db");
}

ResultTable run_irs_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.scenario != Scenario::IrsSweep)
        throw std::invalid_argument("run_irs_sweep: wrong scenario");
    if (cfg.k_list.empty()) throw std::invalid_argument("irs_sweep: empty k_list");
    std::vector<double> xs(cfg.k_list.begin(), cfg.k_list.end());
    const double sigma2 = 1.0 / snr_to_linear(cfg.snr_db.front());
    return sum_rate_table(
        cfg, xs, [&](int) { return cfg.geometry; },
        [&](int cell) { return cfg.k_list[cell]; }, [&](int) { return sigma2; }, "K");
}

ResultTable run_distance_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.scenario != Scenario::DistanceSweep)
        throw std::invalid_argument("run_distance_sweep: wrong scenario");
    const double sigma2 = 1.0 / snr_to_linear(cfg.snr_db.front());
    return sum_rate_table(
        cfg, cfg.distances_m,
        [&](int cell) {
            Geometry geo = cfg.geometry;
            geo.use_distance_law = true;
            geo.ue.x() = cfg.distances_m[cell];
            return geo;
        },
        [&](int) { return cfg.k_irs; }, [&](int) { return sigma2; }, "distance_m");
}

namespace {

/// Everything shared by the BER-style scenarios for one frame of one
/// case: channel assembly, the sample-domain pipeline, detection.
struct BerCaseSetup {
    bool use_direct = false;
    bool random_phases = false;
    bool mmse = false;
    bool imperfect_csi = false;
};

BerCaseSetup ber_case(int id) {
    switch (id) {
        case 1: return {false, false, false, false};
        case 2: return {false, true, false, false};
        case 3: return {false, false, true, false};
        case 4: return {false, true, true, false};
        case 5: return {true, false, false, false};
        case 6: return {false, false, false, true};
        default: throw std::invalid_argument("ber: unknown case selector");
    }
}

struct FrameOutcome {
    long long bit_errors = 0;
    std::vector<long long> per_iteration;  // convergence scenario only
};

FrameOutcome ber_frame(const ExperimentConfig& cfg, int case_id, double snr_db,
                       int snr_idx, long long frame, bool record_iterations) {
    const BerCaseSetup setup = ber_case(case_id);
    const GridDims dims = cfg.dims;
    const int n_s = cfg.n_r;
    const QamAlphabet alphabet(cfg.modulation_q);
    const double snr = snr_to_linear(snr_db);
    const double sigma2 = alphabet.avg_energy() / snr;

    Rng tap_rng = Rng::stream(cfg.seed, 0x5001 + snr_idx, frame);
    Rng data_rng = Rng::stream(cfg.seed, 0x6001 + snr_idx, frame);
    Rng aux_rng = Rng::stream(cfg.seed, 0x7001 + static_cast<std::uint64_t>(case_id),
                              snr_idx, frame);

    // Drop: taps, noise, and payload bits are shared across cases.
    MimoLinkSet links = draw_links(tap_rng, cfg, cfg.geometry, cfg.profile,
                                   cfg.k_irs, true);
    links.has_direct = setup.use_direct;
    if (!setup.use_direct) links.direct.clear();

    IrsPanel panel;
    if (setup.random_phases) {
        Eigen::VectorXd phases(cfg.k_irs);
        for (int k = 0; k < cfg.k_irs; ++k) phases[k] = aux_rng.uniform(-kPi, kPi);
        panel = IrsPanel::with_phases(phases);
    } else {
        panel = IrsPanel::with_phases(stm_phases(links, setup.use_direct));
    }

    const LinkMatrices mats = assemble_links(links);
    const std::vector<CMat> true_h = case_channels(mats, &panel, setup.use_direct);
    std::vector<CMat> csi_h = true_h;
    if (setup.imperfect_csi)
        csi_h = estimate_cascade(aux_rng, links, panel, cfg.als, 1.0 / snr);

    const double p_max = static_cast<double>(dims.N) * dims.M * n_s;
    Beamformer w = Beamformer::uniform(cfg.n_t, n_s, dims.M, dims.N, p_max);
    if (cfg.ber_beamformed) {
        AoOptions opts;
        opts.max_iter = cfg.beamform.max_iter;
        opts.tol = cfg.beamform.tol;
        w = ao_beamform(csi_h, sigma2, p_max, dims, n_s, opts).w;
    }

    // Payload and noise.
    const int n_bits = dims.M * dims.N * n_s * alphabet.bits_per_symbol();
    std::vector<std::uint8_t> bits(n_bits);
    for (auto& b : bits) b = static_cast<std::uint8_t>(data_rng.next() & 1);
    const CVec a = qam_map(bits, alphabet);
    CMat noise(cfg.n_r * dims.M, dims.N);
    for (Eigen::Index j = 0; j < noise.cols(); ++j)
        for (Eigen::Index i = 0; i < noise.rows(); ++i)
            noise(i, j) = data_rng.cnormal(sigma2);

    // Sample-domain pipeline: stack per-stream DD grids, one IDFT
    // across Doppler, per-symbol channel, DFT back.
    const CMat a_grid = a.reshaped(n_s * dims.M, dims.N);
    const CMat fn = dft_matrix(dims.N);
    const CMat s_time = a_grid * fn.adjoint();
    std::vector<CMat> hb(dims.N), hb_csi(dims.N);
    CMat r_time(cfg.n_r * dims.M, dims.N);
    for (int n = 0; n < dims.N; ++n) {
        const CMat wn = w.assemble(n);
        hb[n] = true_h[n] * wn;
        hb_csi[n] = setup.imperfect_csi ? CMat(csi_h[n] * wn) : hb[n];
        r_time.col(n) = hb[n] * s_time.col(n) + noise.col(n);
    }
    const CMat y_dd = r_time * fn;
    const CVec y = y_dd.reshaped();
    const CMat h_eff = effective_dd_matrix(hb_csi);

    FrameOutcome outcome;
    auto count_errors = [&](const CVec& decided) {
        const auto decided_bits = qam_demap(decided, alphabet);
        long long errors = 0;
        for (int i = 0; i < n_bits; ++i) errors += decided_bits[i] != bits[i];
        return errors;
    };

    if (record_iterations) {
        AdmmConfig det = cfg.detector;
        det.max_iter = cfg.convergence_max_iter;
        det.tol = 0.0;  // no early stop; every iterate is recorded
        det.record_iterates = true;
        const AdmmResult res = admm_detect(h_eff, y, alphabet, det);
        outcome.per_iteration.reserve(res.iterates.size() + 1);
        outcome.per_iteration.push_back(count_errors(CVec::Zero(a.size())));
        for (const auto& a0 : res.iterates) {
            CVec q(a0.size());
            for (Eigen::Index i = 0; i < a0.size(); ++i) q[i] = alphabet.quantize(a0[i]);
            outcome.per_iteration.push_back(count_errors(q));
        }
        outcome.bit_errors = outcome.per_iteration.back();
    } else if (setup.mmse) {
        outcome.bit_errors = count_errors(mmse_detect(h_eff, y, sigma2, alphabet));
    } else {
        outcome.bit_errors =
            count_errors(admm_detect(h_eff, y, alphabet, cfg.detector).symbols);
    }
    return outcome;
}

}  // namespace

ResultTable run_ber(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.scenario != Scenario::Ber)
        throw std::invalid_argument("run_ber: wrong scenario");
    const QamAlphabet alphabet(cfg.modulation_q);
    const long long bits_per_frame = static_cast<long long>(cfg.dims.M) * cfg.dims.N *
                                     cfg.n_r * alphabet.bits_per_symbol();

    ResultTable table = make_table(cfg);
    table.columns.push_back("snr_db");
    for (int c : cfg.cases) {
        const std::string label = "case" + std::to_string(c);
        table.columns.push_back(label + "_ber");
        table.columns.push_back(label + "_se");
        table.columns.push_back(label + "_bits");
    }

    constexpr long long kChunk = 256;
    for (size_t si = 0; si < cfg.snr_db.size(); ++si) {
        std::vector<long long> errors(cfg.cases.size(), 0);
        long long frames = 0;
        while (frames < cfg.frame_budget) {
            const long long n = std::min(kChunk, cfg.frame_budget - frames);
            std::vector<std::vector<long long>> slot(
                n, std::vector<long long>(cfg.cases.size()));
            parallel_for(n, [&](long long i) {
                for (size_t ci = 0; ci < cfg.cases.size(); ++ci)
                    slot[i][ci] = ber_frame(cfg, cfg.cases[ci], cfg.snr_db[si],
                                            static_cast<int>(si), frames + i, false)
                                      .bit_errors;
            });
            for (long long i = 0; i < n; ++i)
                for (size_t ci = 0; ci < cfg.cases.size(); ++ci)
                    errors[ci] += slot[i][ci];
            frames += n;
            long long slowest = errors.empty() ? 0 : errors[0];
            for (long long e : errors) slowest = std::min(slowest, e);
            if (slowest >= cfg.err_target) break;
        }
        const double bits = static_cast<double>(frames * bits_per_frame);
        std::vector<double> row{cfg.snr_db[si]};
        for (size_t ci = 0; ci < cfg.cases.size(); ++ci) {
            const double p = static_cast<double>(errors[ci]) / bits;
            row.push_back(p);
            row.push_back(std::sqrt(std::max(p * (1.0 - p), 0.0) / bits));
            row.push_back(bits);
        }
        table.rows.push_back(std::move(row));
    }
    table.validate();
    return table;
}

ResultTable run_convergence(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.scenario != Scenario::Convergence)
        throw std::invalid_argument("run_convergence: wrong scenario");
    const QamAlphabet alphabet(cfg.modulation_q);
    const long long bits_per_frame = static_cast<long long>(cfg.dims.M) * cfg.dims.N *
                                     cfg.n_r * alphabet.bits_per_symbol();
    const int iters = cfg.convergence_max_iter;
    const double snr_db = cfg.snr_db.front();

    // errors[case][iteration 0..iters]
    std::vector<std::vector<long long>> errors(
        cfg.cases.size(), std::vector<long long>(iters + 1, 0));
    constexpr long long kChunk = 128;
    long long frames = 0;
    while (frames < cfg.frame_budget) {
        const long long n = std::min(kChunk, cfg.frame_budget - frames);
        std::vector<std::vector<std::vector<long long>>> slot(n);
        parallel_for(n, [&](long long i) {
            slot[i].resize(cfg.cases.size());
            for (size_t ci = 0; ci < cfg.cases.size(); ++ci)
                slot[i][ci] = ber_frame(cfg, cfg.cases[ci], snr_db, 0, frames + i, true)
                                  .per_iteration;
        });
        for (long long i = 0; i < n; ++i)
            for (size_t ci = 0; ci < cfg.cases.size(); ++ci)
                for (int it = 0; it <= iters; ++it)
                    errors[ci][it] += slot[i][ci][std::min<size_t>(
                        it, slot[i][ci].size() - 1)];
        frames += n;
    }

    ResultTable table = make_table(cfg);
    table.columns.push_back("iteration");
    for (int c : cfg.cases) {
        const std::string label = "case" + std::to_string(c);
        table.columns.push_back(label + "_ber");
        table.columns.push_back(label + "_bits");
    }
    const double bits = static_cast<double>(frames * bits_per_frame);
    for (int it = 0; it <= iters; ++it) {
        std::vector<double> row{static_cast<double>(it)};
        for (size_t ci = 0; ci < cfg.cases.size(); ++ci) {
            row.push_back(static_cast<double>(errors[ci][it]) / bits);
            row.push_back(bits);
        }
        table.rows.push_back(std::move(row));
    }
    table.validate();
    return table;
}

ResultTable run_mse(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.scenario != Scenario::Mse)
        throw std::invalid_argument("run_mse: wrong scenario");

    // results[variant][snr][trial]
    std::vector<std::vector<std::vector<double>>> results(
        cfg.mse_variants.size(),
        std::vector<std::vector<double>>(cfg.snr_db.size(),
                                         std::vector<double>(cfg.trials)));

    const long long jobs = static_cast<long long>(cfg.mse_variants.size()) *
                           cfg.snr_db.size() * cfg.trials;
    parallel_for(jobs, [&](long long job) {
        const int trial = static_cast<int>(job % cfg.trials);
        const int si = static_cast<int>((job / cfg.trials) % cfg.snr_db.size());
        const int vi = static_cast<int>(job / cfg.trials / cfg.snr_db.size());
        const MseVariant& var = cfg.mse_variants[vi];

        GridDims dims = cfg.dims;
        if (var.ofdm_reference) dims.N = 1;
        ChannelProfile profile = cfg.profile;
        profile.model = var.model;
        profile.fractional_doppler = var.fractional_doppler;

        Rng tap_rng = Rng::stream(cfg.seed, 0x8001 + vi, trial);
        ExperimentConfig local = cfg;
        local.dims = dims;
        local.n_t = var.n_t;
        local.n_r = var.n_r;
        const MimoLinkSet links =
            draw_links(tap_rng, local, cfg.geometry, profile, cfg.k_irs, false);

        const int nm = dims.N * dims.M;
        const int tx_dim = var.n_t * nm;
        const CascadeFactors truth = CascadeFactors::from_links(links);
        const int l = std::max(cfg.als.blocks, cfg.k_irs);
        const int t = std::max(cfg.als.slots, tx_dim);
        const PilotSchedule schedule =
            PilotSchedule::dft_design(l, t, cfg.k_irs, tx_dim);

        // Noiseless slices; under slot drift the Doppler phase ramp
        // keeps evolving across pilot slots while the estimator still
        // assumes one coherent channel.
        std::vector<CMat> slices;
        if (cfg.als.slot_drift) {
            slices.assign(l, CMat(truth.d.rows(), t));
            for (int bl = 0; bl < l; ++bl)
                for (int ts = 0; ts < t; ++ts) {
                    const CascadeFactors slot_factors =
                        CascadeFactors::from_links(links, (bl * t + ts) * dims.N);
                    const CVec x = schedule.pilots.row(ts).transpose();
                    CVec gx = slot_factors.g * x;
                    for (int e = 0; e < cfg.k_irs; ++e)
                        gx.segment(e * nm, nm) *= schedule.phases(bl, e);
                    slices[bl].col(ts) = slot_factors.d * gx;
                }
        } else {
            Rng unused(0);
            slices = simulate_rx_tensor(truth, schedule, 0.0, unused);
        }

        double power = 0;
        long long count = 0;
        for (const auto& s : slices) {
            power += s.squaredNorm();
            count += s.size();
        }
        const double sigma2 =
            power / static_cast<double>(count) / snr_to_linear(cfg.snr_db[si]);
        Rng noise_rng = Rng::stream(cfg.seed, 0x9001 + vi, si, trial);
        if (sigma2 > 0)
            for (auto& s : slices)
                for (Eigen::Index j = 0; j < s.cols(); ++j)
                    for (Eigen::Index i = 0; i < s.rows(); ++i)
                        s(i, j) += noise_rng.cnormal(sigma2);

        Rng init_rng = Rng::stream(cfg.seed, 0xa001 + vi, si, trial);
        const CascadeFactors init = CascadeFactors::random(
            cfg.k_irs, nm, static_cast<int>(truth.d.rows()), tx_dim, init_rng);
        const AlsResult fit =
            als_estimate(slices, schedule, init, cfg.als.max_sweeps, cfg.als.tol);
        results[vi][si][trial] =
            cascade_mse(truth, fit.est, schedule.phases).cascaded;
    });

    ResultTable table = make_table(cfg);
    table.columns.push_back("snr_db");
    for (const auto& var : cfg.mse_variants) {
        table.columns.push_back(var.label + "_mse");
        table.columns.push_back(var.label + "_se");
        table.columns.push_back(var.label + "_n");
    }
    for (size_t si = 0; si < cfg.snr_db.size(); ++si) {
        std::vector<double> row{cfg.snr_db[si]};
        for (size_t vi = 0; vi < cfg.mse_variants.size(); ++vi) {
            const MeanSe ms = mean_se(results[vi][si]);
            row.push_back(ms.mean);
            row.push_back(ms.se);
            row.push_back(static_cast<double>(cfg.trials));
        }
        table.rows.push_back(std::move(row));
    }
    table.validate();
    return table;
}

ResultTable run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.scenario) {
        case Scenario::SumRate: return run_sum_rate(cfg);
        case Scenario::Ber: return run_ber(cfg);
        case Scenario::Convergence: return run_convergence(cfg);
        case Scenario::IrsSweep: return run_irs_sweep(cfg);
        case Scenario::DistanceSweep: return run_distance_sweep(cfg);
        case Scenario::Mse: return run_mse(cfg);
    }
    throw std::logic_error("run_experiment: unknown scenario");
}

}  // namespace irsotfs
