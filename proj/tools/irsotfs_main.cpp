// Command-line front end: binds experiment configs to the simulation
// runners and exposes single-shot algorithm demos for debugging.
//
// Exit codes: 0 success, 1 failed checks, 2 config/validation error,
// 3 numeric runtime failure.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "irsotfs/checks.hpp"
#include "irsotfs/dd.hpp"
#include "irsotfs/detect.hpp"
#include "irsotfs/simkit.hpp"

namespace {

using namespace irsotfs;

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides,
            long long seed, const std::string& out_dir) {
    ExperimentConfig cfg;
    try {
        cfg = ExperimentConfig::from_file(config_path);
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("override must look like key=value: " + kv);
            cfg.apply_override(kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
        if (!out_dir.empty()) {
            const std::filesystem::path stem(cfg.output);
            cfg.output = (std::filesystem::path(out_dir) / stem.filename()).string();
        }
        cfg.validate();
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        const ResultTable table = run_experiment(cfg);
        write_outputs(table, cfg, cfg.output);
        // One machine-parseable summary line per curve (last row).
        const auto& last = table.rows.back();
        for (size_t c = 1; c < table.columns.size(); ++c) {
            if (table.columns[c].rfind("_n") != std::string::npos ||
                table.columns[c].rfind("_bits") != std::string::npos)
                continue;
            std::printf("%s=%.6g\n", table.columns[c].c_str(), last[c]);
        }
        std::printf("output=%s.csv\n", cfg.output.c_str());
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << "\n";
        return 3;
    }
}

int cmd_check(const std::string& filter) {
    const auto outcomes = run_checks(filter);
    if (outcomes.empty()) {
        std::cerr << "no checks match filter '" << filter << "'\n";
        return 2;
    }
    int failed = 0;
    for (const auto& o : outcomes) {
        std::printf("%-26s %s%s%s\n", o.name.c_str(), o.passed ? "PASS" : "FAIL",
                    o.message.empty() ? "" : ": ", o.message.c_str());
        failed += !o.passed;
    }
    std::printf("checks=%zu failed=%d\n", outcomes.size(), failed);
    return failed ? 1 : 0;
}

int cmd_bench(const std::vector<int>& sizes, int iters, int reps) {
    using clock = std::chrono::steady_clock;
    Rng rng(42);
    std::printf("%8s %14s %14s %16s %16s\n", "dim", "mmse_ms", "admm_ms", "mmse_ops",
                "admm_ops");
    const QamAlphabet qpsk = QamAlphabet::qpsk();
    for (int dim : sizes) {
        CMat h(dim, dim);
        for (int j = 0; j < dim; ++j)
            for (int i = 0; i < dim; ++i) h(i, j) = rng.cnormal();
        CVec y(dim);
        for (int i = 0; i < dim; ++i) y[i] = rng.cnormal();

        AdmmConfig cfg;
        cfg.max_iter = iters;
        cfg.tol = 0.0;
        double best_mmse = 1e300, best_admm = 1e300;
        for (int r = 0; r < reps; ++r) {
            auto t0 = clock::now();
            mmse_detect(h, y, 1.0, qpsk);
            auto t1 = clock::now();
            admm_detect(h, y, qpsk, cfg);
            auto t2 = clock::now();
            best_mmse = std::min(
                best_mmse, std::chrono::duration<double, std::milli>(t1 - t0).count());
            best_admm = std::min(
                best_admm, std::chrono::duration<double, std::milli>(t2 - t1).count());
        }
        std::printf("%8d %14.3f %14.3f %16lld %16lld\n", dim, best_mmse, best_admm,
                    op_count(DetectorKind::Mmse, 1, 1, 1, dim),
                    op_count(DetectorKind::Admm, 1, 1, 1, dim, iters));
    }
    return 0;
}

int cmd_demo() {
    // Tiny end-to-end pass: frame round trip, one beamformed drop, one
    // detection, printed as key=value lines.
    Rng rng(7);
    const GridDims dims{8, 8, 2};
    DdFrame f = DdFrame::zero(dims);
    for (Eigen::Index j = 0; j < f.grid.cols(); ++j)
        for (Eigen::Index i = 0; i < f.grid.rows(); ++i) f.grid(i, j) = rng.cnormal();
    const DdFrame back = otfs_demodulate(otfs_modulate(f));
    std::printf("roundtrip_error=%.3g\n",
                (back.grid - f.grid).cwiseAbs().maxCoeff());

    ChannelProfile profile;
    MimoLinkSet links = MimoLinkSet::sample(rng, profile, dims, 1, 1, 4, true);
    const IrsPanel panel = IrsPanel::with_phases(stm_phases(links, true));
    std::vector<CMat> h;
    for (int n = 0; n < dims.N; ++n) h.push_back(cascade(links, panel, n));
    const double p_max = static_cast<double>(dims.N) * dims.M;
    const AoResult ao = ao_beamform(h, 0.1, p_max, dims, 1, {});
    std::printf("ao_iterations=%d\n", ao.iterations);
    std::printf("ao_rate=%.4f\n", ao.rate_trace.back());

    const QamAlphabet qpsk = QamAlphabet::qpsk();
    std::vector<std::uint8_t> bits(dims.M * dims.N * 2);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.next() & 1);
    const CVec a = qam_map(bits, qpsk);
    std::vector<CMat> hb;
    for (int n = 0; n < dims.N; ++n) hb.push_back(h[n] * ao.w.assemble(n));
    const CMat h_eff = effective_dd_matrix(hb);
    CVec y = h_eff * a;
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += rng.cnormal(0.1);
    const AdmmResult det = admm_detect(h_eff, y, qpsk, {});
    const auto decided = qam_demap(det.symbols, qpsk);
    long long errors = 0;
    for (size_t i = 0; i < bits.size(); ++i) errors += decided[i] != bits[i];
    std::printf("demo_bit_errors=%lld/%zu\n", errors, bits.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IRS-assisted OTFS link-level simulation laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir, filter;
    std::vector<std::string> overrides;
    long long seed = -1;

    auto* run = app.add_subcommand("run", "execute an experiment config");
    run->add_option("--config", config_path, "experiment config (JSON)")->required();
    run->add_option("--set", overrides, "override config keys, key=value");
    run->add_option("--seed", seed, "master seed (overrides the config)");
    run->add_option("--out", out_dir, "output directory override");

    auto* check = app.add_subcommand("check", "run the fast invariant suite");
    check->add_option("--filter", filter, "substring filter on check names");

    std::vector<int> bench_sizes{32, 48, 64, 96, 128};
    int bench_iters = 40, bench_reps = 5;
    auto* bench = app.add_subcommand("bench", "time detectors vs. predicted op counts");
    bench->add_option("--sizes", bench_sizes, "problem dimensions");
    bench->add_option("--iters", bench_iters, "ADMM iterations");
    bench->add_option("--reps", bench_reps, "repetitions (best-of)");

    auto* demo = app.add_subcommand("demo", "tiny end-to-end smoke run");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return cmd_run(config_path, overrides, seed, out_dir);
    if (check->parsed()) return cmd_check(filter);
    if (bench->parsed()) return cmd_bench(bench_sizes, bench_iters, bench_reps);
    if (demo->parsed()) return cmd_demo();
    return 2;
}
