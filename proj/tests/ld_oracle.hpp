#pragma once

// Extended-precision forward pass over a Network, written independently of
// the library kernels. Central differences taken through it stay accurate
// for gradient components far below what double-precision differencing can
// resolve at h = 1e-5.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <variant>
#include <vector>

#include "advl/core/network.hpp"

namespace oracle {

using LdVec = std::vector<long double>;

struct LdAct {
    std::vector<std::size_t> shape;
    LdVec v;
};

// Per-layer ReLU masks or pool argmaxes; empty for other layers.
using LdPattern = std::vector<std::vector<std::size_t>>;

class LdNet {
public:
    explicit LdNet(const advl::Network& net) : spec_(net.spec) {
        for (const auto& p : net.params) {
            w_.emplace_back(p.weights.data().begin(), p.weights.data().end());
            b_.emplace_back(p.bias.data().begin(), p.bias.data().end());
        }
    }

    LdVec& weights(std::size_t layer) { return w_[layer]; }
    LdVec& bias(std::size_t layer) { return b_[layer]; }
    std::size_t layers() const { return spec_.layers.size(); }

    static LdAct from(const advl::Tensor& t) { return {t.shape(), LdVec(t.data().begin(), t.data().end())}; }

    // Runs layers [start, end); `acts`, when given, receives the input of
    // every layer from `start` on.
    LdAct run(std::size_t start, LdAct a, LdPattern& pattern, std::vector<LdAct>* acts = nullptr) const {
        pattern.resize(layers());
        for (std::size_t l = start; l < layers(); ++l) {
            if (acts) (*acts)[l] = a;
            a = step(l, a, pattern[l]);
        }
        return a;
    }

    static long double xent(const LdAct& logits, std::size_t cls) {
        long double mx = logits.v[0];
        for (auto z : logits.v) mx = std::max(mx, z);
        long double s = 0;
        for (auto z : logits.v) s += std::exp(z - mx);
        return std::log(s) + mx - logits.v[cls];
    }

private:
    LdAct step(std::size_t l, const LdAct& in, std::vector<std::size_t>& pat) const {
        const auto& layer = spec_.layers[l];
        if (const auto* c = std::get_if<advl::Conv2D>(&layer)) {
            const long C = static_cast<long>(in.shape[0]), H = static_cast<long>(in.shape[1]),
                       W = static_cast<long>(in.shape[2]);
            const long O = static_cast<long>(c->out_channels), K = static_cast<long>(c->kernel);
            const long s = static_cast<long>(c->stride), p = static_cast<long>(c->padding);
            const long OH = (H + 2 * p - K) / s + 1, OW = (W + 2 * p - K) / s + 1;
            LdAct out{{std::size_t(O), std::size_t(OH), std::size_t(OW)}, LdVec(std::size_t(O * OH * OW))};
            for (long o = 0; o < O; ++o)
                for (long i = 0; i < OH; ++i)
                    for (long j = 0; j < OW; ++j) {
                        long double acc = b_[l][std::size_t(o)];
                        for (long ch = 0; ch < C; ++ch)
                            for (long u = 0; u < K; ++u)
                                for (long v = 0; v < K; ++v) {
                                    const long r = i * s + u - p, q = j * s + v - p;
                                    if (r < 0 || r >= H || q < 0 || q >= W) continue;
                                    acc += in.v[std::size_t((ch * H + r) * W + q)] *
                                           w_[l][std::size_t(((o * C + ch) * K + u) * K + v)];
                                }
                        out.v[std::size_t((o * OH + i) * OW + j)] = acc;
                    }
            return out;
        }
        if (std::holds_alternative<advl::ReLU>(layer)) {
            LdAct out = in;
            pat.assign(in.v.size(), 0);
            for (std::size_t i = 0; i < in.v.size(); ++i) {
                pat[i] = in.v[i] > 0;
                if (!pat[i]) out.v[i] = 0;
            }
            return out;
        }
        if (std::holds_alternative<advl::MaxPool2>(layer)) {
            const std::size_t C = in.shape[0], H = in.shape[1], W = in.shape[2];
            const std::size_t OH = (H + 1) / 2, OW = (W + 1) / 2;
            LdAct out{{C, OH, OW}, LdVec(C * OH * OW)};
            pat.assign(C * OH * OW, 0);
            for (std::size_t c = 0; c < C; ++c)
                for (std::size_t i = 0; i < OH; ++i)
                    for (std::size_t j = 0; j < OW; ++j) {
                        std::size_t best = (c * H + 2 * i) * W + 2 * j;
                        for (std::size_t r = 2 * i; r < std::min(H, 2 * i + 2); ++r)
                            for (std::size_t q = 2 * j; q < std::min(W, 2 * j + 2); ++q) {
                                const std::size_t k = (c * H + r) * W + q;
                                if (in.v[k] > in.v[best]) best = k;
                            }
                        out.v[(c * OH + i) * OW + j] = in.v[best];
                        pat[(c * OH + i) * OW + j] = best;
                    }
            return out;
        }
        if (std::holds_alternative<advl::Flatten>(layer)) return {{in.v.size()}, in.v};
        const std::size_t M = std::get<advl::Dense>(layer).units, N = in.v.size();
        LdAct out{{M}, LdVec(M)};
        for (std::size_t m = 0; m < M; ++m) {
            long double acc = b_[l][m];
            for (std::size_t n = 0; n < N; ++n) acc += w_[l][m * N + n] * in.v[n];
            out.v[m] = acc;
        }
        return out;
    }

    advl::NetworkSpec spec_;
    std::vector<LdVec> w_, b_;
};

}  // namespace oracle
