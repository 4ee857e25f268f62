#include "irsotfs/dd.hpp"

#include <stdexcept>
#include <string>

namespace irsotfs {

CMat dft_matrix(int n) {
    CMat f(n, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            const double a = -kTwoPi * static_cast<double>(j) * k / n;
            f(j, k) = scale * cd(std::cos(a), std::sin(a));
        }
    }
    return f;
}

CMat kron(const CMat& a, const CMat& b) {
    CMat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

CMat blkdiag(const std::vector<CMat>& blocks) {
    Eigen::Index rows = 0, cols = 0;
    for (const auto& b : blocks) {
        rows += b.rows();
        cols += b.cols();
    }
    CMat out = CMat::Zero(rows, cols);
    Eigen::Index r = 0, c = 0;
    for (const auto& b : blocks) {
        out.block(r, c, b.rows(), b.cols()) = b;
        r += b.rows();
        c += b.cols();
    }
    return out;
}

double wrap_angle(double theta) {
    while (theta <= -kPi) theta += kTwoPi;
    while (theta > kPi) theta -= kTwoPi;
    return theta;
}

void GridDims::validate() const {
    if (M < 1 || N < 1)
        throw std::invalid_argument("GridDims: M and N must be positive");
    if (M_cp < 0 || M_cp >= M)
        throw std::invalid_argument("GridDims: require 0 <= M_cp < M");
}

void DdFrame::validate() const {
    dims.validate();
    if (grid.rows() != dims.M || grid.cols() != dims.N)
        throw std::invalid_argument("DdFrame: grid must be M x N");
}

void TimeFrame::validate() const {
    dims.validate();
    const Eigen::Index want = has_cp ? dims.symbol_len() : dims.M;
    if (samples.rows() != want || samples.cols() != dims.N)
        throw std::invalid_argument(
            "TimeFrame: expected " + std::to_string(want) + " x " +
            std::to_string(dims.N) + " samples, got " +
            std::to_string(samples.rows()) + " x " + std::to_string(samples.cols()));
}

CMat TimeFrame::core() const {
    validate();
    if (!has_cp) return samples;
    return samples.bottomRows(dims.M);
}

CMat isfft(const DdFrame& frame) {
    frame.validate();
    const CMat fm = dft_matrix(frame.dims.M);
    const CMat fn = dft_matrix(frame.dims.N);
    return fm * frame.grid * fn.adjoint();
}

DdFrame sfft(const CMat& ft, int m_cp) {
    GridDims dims{static_cast<int>(ft.rows()), static_cast<int>(ft.cols()), m_cp};
    dims.validate();
    const CMat fm = dft_matrix(dims.M);
    const CMat fn = dft_matrix(dims.N);
    return {dims, fm.adjoint() * ft * fn};
}

TimeFrame otfs_modulate(const DdFrame& frame) {
    frame.validate();
    const GridDims& d = frame.dims;
    const CMat s = frame.grid * dft_matrix(d.N).adjoint();
    if (d.M_cp == 0) return {d, false, s};
    CMat ext(d.symbol_len(), d.N);
    ext.topRows(d.M_cp) = s.bottomRows(d.M_cp);
    ext.bottomRows(d.M) = s;
    return {d, true, ext};
}

DdFrame otfs_demodulate(const TimeFrame& rx) {
    const CMat r = rx.core();
    return {rx.dims, r * dft_matrix(rx.dims.N)};
}

TimeFrame channel_apply(const std::vector<CMat>& per_symbol, const TimeFrame& tx) {
    const CMat s = tx.core();
    if (static_cast<int>(per_symbol.size()) != tx.dims.N)
        throw std::invalid_argument("channel_apply: need one matrix per OFDM symbol");
    CMat r(s.rows(), s.cols());
    for (int n = 0; n < tx.dims.N; ++n) {
        const CMat& h = per_symbol[n];
        if (h.rows() != s.rows() || h.cols() != s.rows())
            throw std::invalid_argument("channel_apply: block dimension mismatch");
        r.col(n) = h * s.col(n);
    }
    return {tx.dims, false, r};
}

CMat effective_dd_matrix(const std::vector<CMat>& per_symbol) {
    if (per_symbol.empty())
        throw std::invalid_argument("effective_dd_matrix: empty block list");
    const Eigen::Index p = per_symbol.front().rows();
    const Eigen::Index q = per_symbol.front().cols();
    for (const auto& h : per_symbol)
        if (h.rows() != p || h.cols() != q)
            throw std::invalid_argument("effective_dd_matrix: inconsistent block sizes");
    const int n = static_cast<int>(per_symbol.size());
    const CMat fn = dft_matrix(n);
    const CMat ip = CMat::Identity(p, p);
    const CMat iq = CMat::Identity(q, q);
    return kron(fn, ip) * blkdiag(per_symbol) * kron(fn.adjoint(), iq);
}

}  // namespace irsotfs
