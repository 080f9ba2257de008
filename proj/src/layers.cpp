#include "lyricnet/layers.hpp"

#include <algorithm>
#include <cmath>

namespace lyricnet {

Tensor init_weight_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Tensor t({rows, cols});
    for (Real& v : t.data()) v = static_cast<Real>(rng.uniform(-bound, bound));
    return t;
}

GruParams::GruParams(const std::string& prefix, std::size_t hidden, std::size_t input, Rng& rng)
    : w_z(prefix + ".w_z", init_weight_matrix(hidden, input, rng)),
      u_z(prefix + ".u_z", init_weight_matrix(hidden, hidden, rng)),
      b_z(prefix + ".b_z", Tensor({hidden})),
      w_r(prefix + ".w_r", init_weight_matrix(hidden, input, rng)),
      u_r(prefix + ".u_r", init_weight_matrix(hidden, hidden, rng)),
      b_r(prefix + ".b_r", Tensor({hidden})),
      w_h(prefix + ".w_h", init_weight_matrix(hidden, input, rng)),
      u_h(prefix + ".u_h", init_weight_matrix(hidden, hidden, rng)),
      b_h(prefix + ".b_h", Tensor({hidden})) {}

std::vector<Parameter*> GruParams::parameters() {
    return {&w_z, &u_z, &b_z, &w_r, &u_r, &b_r, &w_h, &u_h, &b_h};
}

AttentionParams::AttentionParams(const std::string& prefix, std::size_t attention, std::size_t input,
                                 Rng& rng)
    : w_a(prefix + ".w_a", init_weight_matrix(attention, input, rng)),
      b_a(prefix + ".b_a", Tensor({attention})),
      u_a(prefix + ".u_a", Tensor({attention})) {
    for (Real& v : u_a.value.data()) v = static_cast<Real>(rng.uniform(-0.05, 0.05));
}

std::vector<Parameter*> AttentionParams::parameters() { return {&w_a, &b_a, &u_a}; }

bool Mask::any_valid() const {
    return std::any_of(valid.begin(), valid.end(), [](char c) { return c != 0; });
}

bool Mask::all() const {
    return std::all_of(valid.begin(), valid.end(), [](char c) { return c != 0; });
}

std::vector<std::size_t> Mask::valid_indices() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < valid.size(); ++i) {
        if (valid[i]) idx.push_back(i);
    }
    return idx;
}

Var gru_step(Tape& t, GruParams& p, Var x_t, Var h_prev) {
    Var z = t.sigmoid(matvec(t.param(p.w_z), x_t) + matvec(t.param(p.u_z), h_prev) + t.param(p.b_z));
    Var r = t.sigmoid(matvec(t.param(p.w_r), x_t) + matvec(t.param(p.u_r), h_prev) + t.param(p.b_r));
    Var h_cand = t.tanh(matvec(t.param(p.w_h), x_t) +
                        hadamard(r, matvec(t.param(p.u_h), h_prev)) + t.param(p.b_h));
    return hadamard(t.one_minus(z), h_prev) + hadamard(z, h_cand);
}

std::vector<Var> bidirectional_gru(Tape& t, GruParams& fwd, GruParams& bwd,
                                   const std::vector<Var>& xs, const Mask& mask) {
    if (xs.empty()) throw DimensionError("bidirectional_gru: empty sequence");
    if (mask.size() != xs.size()) {
        throw DimensionError("bidirectional_gru: mask length " + std::to_string(mask.size()) +
                             " does not match sequence length " + std::to_string(xs.size()));
    }
    const std::size_t n = xs.size();
    const std::size_t hidden = fwd.hidden_size();

    std::vector<Var> fwd_states(n), bwd_states(n);
    Var h = t.constant(Tensor({hidden}));
    for (std::size_t i = 0; i < n; ++i) {
        h = gru_step(t, fwd, xs[i], h);
        fwd_states[i] = h;
    }
    h = t.constant(Tensor({hidden}));
    for (std::size_t i = n; i-- > 0;) {
        h = gru_step(t, bwd, xs[i], h);
        bwd_states[i] = h;
    }

    std::vector<Var> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = t.concat(fwd_states[i], bwd_states[i]);
    return out;
}

AttentionResult attention(Tape& t, AttentionParams& p, const std::vector<Var>& hs, const Mask& mask) {
    if (hs.empty()) throw DimensionError("attention: empty sequence");
    if (mask.size() != hs.size()) {
        throw DimensionError("attention: mask length " + std::to_string(mask.size()) +
                             " does not match sequence length " + std::to_string(hs.size()));
    }
    const std::size_t n = hs.size();
    const std::size_t m = hs[0].value().size();

    if (!mask.any_valid()) {
        AttentionResult res;
        res.output = t.constant(Tensor({m}));
        res.weights = t.constant(Tensor({n}));
        res.degenerate = true;
        return res;
    }

    Var stacked = t.stack_rows(hs);                                     // {n, M}
    Var projected = t.tanh(t.add_rowvec(t.matmul_nt(stacked, t.param(p.w_a)), t.param(p.b_a)));
    Var scores = matvec(projected, t.param(p.u_a));                     // {n}
    if (!mask.all()) {
        Tensor penalty({n});
        for (std::size_t i = 0; i < n; ++i) penalty[i] = mask.valid[i] ? Real(0) : kMaskPenalty;
        scores = scores + t.constant(std::move(penalty));
    }
    Var weights = t.softmax(scores);

    AttentionResult res;
    res.output = t.weighted_sum_rows(stacked, weights);
    res.weights = weights;
    return res;
}

AttentionResult layer(Tape& t, GruParams& fwd, GruParams& bwd, AttentionParams& att,
                      const std::vector<Var>& xs, const Mask& mask) {
    return attention(t, att, bidirectional_gru(t, fwd, bwd, xs, mask), mask);
}

AttentionResult mean_layer(Tape& t, GruParams& fwd, GruParams& bwd, const std::vector<Var>& xs,
                           const Mask& mask) {
    if (xs.empty()) throw DimensionError("mean_layer: empty sequence");
    const std::size_t n = xs.size();
    if (!mask.any_valid()) {
        AttentionResult res;
        res.output = t.constant(Tensor({2 * fwd.hidden_size()}));
        res.weights = t.constant(Tensor({n}));
        res.degenerate = true;
        return res;
    }
    std::vector<Var> hs = bidirectional_gru(t, fwd, bwd, xs, mask);
    const auto keep = mask.valid_indices();
    AttentionResult res;
    res.output = t.mean_rows(t.stack_rows(hs), keep);
    Tensor w({n});
    for (std::size_t i : keep) w[i] = Real(1) / static_cast<Real>(keep.size());
    res.weights = t.constant(std::move(w));
    return res;
}

}  // namespace lyricnet
