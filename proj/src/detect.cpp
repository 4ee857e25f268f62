#include "irsotfs/detect.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <limits>
#include <stdexcept>

namespace irsotfs {

QamAlphabet::QamAlphabet(int levels_exp) : q(levels_exp) {
    if (q < 1 || q > 8) throw std::invalid_argument("QamAlphabet: Q out of range");
    const int side = 1 << q;
    points.reserve(static_cast<size_t>(side) * side);
    for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j)
            points.emplace_back(2 * i - (side - 1), 2 * j - (side - 1));
    std::sort(points.begin(), points.end(), [](cd a, cd b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
}

double QamAlphabet::avg_energy() const {
    double e = 0;
    for (cd p : points) e += std::norm(p);
    return e / static_cast<double>(points.size());
}

double QamAlphabet::level_from_bits(const std::uint8_t* bits) const {
    // Gray decode, then map index g to level (2^Q - 1) - 2g.
    int g = 0;
    int acc = 0;
    for (int i = 0; i < q; ++i) {
        acc ^= bits[i] & 1;
        g = (g << 1) | acc;
    }
    return static_cast<double>(((1 << q) - 1) - 2 * g);
}

void QamAlphabet::bits_from_level(double level, std::uint8_t* bits) const {
    int g = (((1 << q) - 1) - static_cast<int>(std::lround(level))) / 2;
    int prev = 0;
    for (int i = q - 1; i >= 0; --i) {
        const int bit = (g >> i) & 1;
        bits[q - 1 - i] = static_cast<std::uint8_t>(bit ^ prev);
        prev = bit;
    }
}

cd QamAlphabet::map_bits(const std::uint8_t* bits) const {
    return {level_from_bits(bits), level_from_bits(bits + q)};
}

void QamAlphabet::demap_symbol(cd s, std::uint8_t* bits) const {
    const cd p = quantize(s);
    bits_from_level(p.real(), bits);
    bits_from_level(p.imag(), bits + q);
}

cd QamAlphabet::quantize(cd s) const {
    auto level = [&](double x) {
        const int side = 1 << q;
        // Round to the nearest odd level; exact midpoints fall toward
        // the smaller coordinate.
        double best = -(side - 1);
        double dist = std::abs(x - best);
        for (int i = 1; i < side; ++i) {
            const double cand = 2 * i - (side - 1);
            const double d = std::abs(x - cand);
            if (d < dist) {
                dist = d;
                best = cand;
            }
        }
        return best;
    };
    return {level(s.real()), level(s.imag())};
}

bool QamAlphabet::contains(cd s) const {
    for (cd p : points)
        if (p == s) return true;
    return false;
}

CVec qam_map(const std::vector<std::uint8_t>& bits, const QamAlphabet& alphabet) {
    const int bps = alphabet.bits_per_symbol();
    if (bits.size() % bps != 0)
        throw std::invalid_argument("qam_map: bit count not a multiple of 2Q");
    CVec out(bits.size() / bps);
    for (Eigen::Index i = 0; i < out.size(); ++i)
        out[i] = alphabet.map_bits(bits.data() + i * bps);
    return out;
}

std::vector<std::uint8_t> qam_demap(const CVec& symbols, const QamAlphabet& alphabet) {
    const int bps = alphabet.bits_per_symbol();
    std::vector<std::uint8_t> bits(symbols.size() * bps);
    for (Eigen::Index i = 0; i < symbols.size(); ++i)
        alphabet.demap_symbol(symbols[i], bits.data() + i * bps);
    return bits;
}

std::vector<CVec> binary_decompose(const CVec& a, const QamAlphabet& alphabet) {
    auto split = [&](double v, int layer_count, std::vector<double>& out) {
        // v = sum_q 2^{q-1} b_q with b_q in {-1, +1}, resolved from the
        // top layer down.
        for (int layer = layer_count; layer >= 1; --layer) {
            const double w = static_cast<double>(1 << (layer - 1));
            const double b = v >= 0 ? 1.0 : -1.0;
            out[layer - 1] = b;
            v -= w * b;
        }
    };
    std::vector<CVec> layers(alphabet.q, CVec(a.size()));
    std::vector<double> re(alphabet.q), im(alphabet.q);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (!alphabet.contains(a[i]))
            throw std::invalid_argument("binary_decompose: entry not in alphabet");
        split(a[i].real(), alphabet.q, re);
        split(a[i].imag(), alphabet.q, im);
        for (int layer = 0; layer < alphabet.q; ++layer)
            layers[layer][i] = cd(re[layer], im[layer]);
    }
    return layers;
}

void AdmmConfig::validate() const {
    if (rho <= 0) throw std::invalid_argument("AdmmConfig: rho must be positive");
    if (alpha < 0 || alpha >= rho)
        throw std::invalid_argument("AdmmConfig: require 0 <= alpha < rho");
    if (max_iter < 1) throw std::invalid_argument("AdmmConfig: max_iter >= 1");
}

namespace {

cd box_project(cd v) {
    return {std::clamp(v.real(), -1.0, 1.0), std::clamp(v.imag(), -1.0, 1.0)};
}

}  // namespace

AdmmResult admm_detect(const CMat& h, const CVec& y, const QamAlphabet& alphabet,
                       const AdmmConfig& cfg) {
    cfg.validate();
    if (h.rows() != y.size()) throw std::invalid_argument("admm_detect: H/y mismatch");
    const Eigen::Index dim = h.cols();
    const int q_layers = alphabet.q;

    // Iteration-independent part, factored once and reused.
    CMat gram = h.adjoint() * h;
    gram.diagonal().array() += cfg.rho;
    const Eigen::LDLT<CMat> factor(gram);
    const CVec matched = h.adjoint() * y;

    std::vector<CVec> a_q(q_layers, CVec::Zero(dim));
    CVec a0 = CVec::Zero(dim);
    CVec eps = CVec::Zero(dim);
    const double stop = cfg.tol * std::sqrt(static_cast<double>(dim));

    AdmmResult result;
    int it = 0;
    for (; it < cfg.max_iter; ++it) {
        // Box-projected layer updates (sequential over q for Q > 1).
        for (int layer = 0; layer < q_layers; ++layer) {
            const double w = static_cast<double>(1 << layer);  // 2^{q-1}
            CVec partial = a0;
            for (int other = 0; other < q_layers; ++other)
                if (other != layer)
                    partial -= static_cast<double>(1 << other) * a_q[other];
            const double denom = cfg.rho * w * w - cfg.alpha;
            const CVec raw = (w * (cfg.rho * partial + eps)) / denom;
            for (Eigen::Index i = 0; i < dim; ++i) a_q[layer][i] = box_project(raw[i]);
        }
        CVec recomposed = CVec::Zero(dim);
        for (int layer = 0; layer < q_layers; ++layer)
            recomposed += static_cast<double>(1 << layer) * a_q[layer];

        a0 = factor.solve(matched + cfg.rho * recomposed - eps);
        eps += cfg.rho * (a0 - recomposed);

        const double residual = (a0 - recomposed).norm();
        result.residuals.push_back(residual);
        if (cfg.record_iterates) result.iterates.push_back(a0);
        if (residual < stop) {
            ++it;
            break;
        }
    }

    result.iterations = it;
    result.relaxed = a0;
    result.symbols.resize(dim);
    for (Eigen::Index i = 0; i < dim; ++i) result.symbols[i] = alphabet.quantize(a0[i]);
    return result;
}

CVec mmse_detect(const CMat& h, const CVec& y, double sigma2,
                 const QamAlphabet& alphabet) {
    if (sigma2 <= 0) throw std::invalid_argument("mmse_detect: sigma2 must be positive");
    CMat gram = h.adjoint() * h;
    gram.diagonal().array() += sigma2;
    const CVec est = Eigen::LDLT<CMat>(gram).solve(h.adjoint() * y);
    CVec out(est.size());
    for (Eigen::Index i = 0; i < est.size(); ++i) out[i] = alphabet.quantize(est[i]);
    return out;
}

namespace {

void ml_recurse(const CMat& h, const std::vector<cd>& points, Eigen::Index idx,
                CVec& current, CVec& residual, double& best_cost, CVec& best) {
    if (idx == h.cols()) {
        const double cost = residual.squaredNorm();
        if (cost < best_cost) {
            best_cost = cost;
            best = current;
        }
        return;
    }
    for (cd p : points) {
        current[idx] = p;
        residual -= p * h.col(idx);
        ml_recurse(h, points, idx + 1, current, residual, best_cost, best);
        residual += p * h.col(idx);
    }
}

}  // namespace

CVec ml_oracle(const CMat& h, const CVec& y, const QamAlphabet& alphabet) {
    if (h.cols() > 12)
        throw std::invalid_argument("ml_oracle: instance too large for enumeration");
    if (h.rows() != y.size()) throw std::invalid_argument("ml_oracle: H/y mismatch");
    CVec current = CVec::Zero(h.cols());
    CVec residual = y;
    CVec best = current;
    double best_cost = std::numeric_limits<double>::infinity();
    ml_recurse(h, alphabet.points, 0, current, residual, best_cost, best);
    return best;
}

long long op_count(DetectorKind kind, int n_t, int n_r, int n_doppler, int n_delay,
                   int iterations) {
    if (n_t < 1 || n_r < 1 || n_doppler < 1 || n_delay < 1)
        throw std::invalid_argument("op_count: dimensions must be positive");
    const long long t = static_cast<long long>(n_t) * n_doppler * n_delay;
    const long long r = static_cast<long long>(n_r) * n_doppler * n_delay;
    long long total = t * t * t + r * t * t + r * t;
    if (kind == DetectorKind::Admm)
        total += static_cast<long long>(iterations) * (t + t * t + t);
    return total;
}

}  // namespace irsotfs
