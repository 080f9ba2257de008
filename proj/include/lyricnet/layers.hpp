#pragma once

#include <vector>

#include "lyricnet/tape.hpp"

namespace lyricnet {

// additive score penalty that stands in for -inf; exp underflows to exactly 0
// after max-subtraction, so masked attention weights come out as true zeros
constexpr Real kMaskPenalty = Real(-1e30);

// update/reset/candidate weight matrices and biases of one GRU direction
struct GruParams {
    Parameter w_z, u_z, b_z;
    Parameter w_r, u_r, b_r;
    Parameter w_h, u_h, b_h;

    GruParams() = default;
    GruParams(const std::string& prefix, std::size_t hidden, std::size_t input, Rng& rng);

    std::size_t hidden_size() const { return w_z.value.rows(); }
    std::size_t input_size() const { return w_z.value.cols(); }
    std::vector<Parameter*> parameters();
};

struct AttentionParams {
    Parameter w_a;  // {A, M}
    Parameter b_a;  // {A}
    Parameter u_a;  // {A}

    AttentionParams() = default;
    AttentionParams(const std::string& prefix, std::size_t attention, std::size_t input, Rng& rng);

    std::size_t attention_size() const { return w_a.value.rows(); }
    std::size_t input_size() const { return w_a.value.cols(); }
    std::vector<Parameter*> parameters();
};

// per-position validity flags for one attended sequence
struct Mask {
    std::vector<char> valid;

    static Mask all_valid(std::size_t n) { return Mask{std::vector<char>(n, 1)}; }
    std::size_t size() const { return valid.size(); }
    bool any_valid() const;
    bool all() const;
    std::vector<std::size_t> valid_indices() const;
};

struct AttentionResult {
    Var output;      // {M}; zeros when degenerate
    Var weights;     // {n}; zeros when degenerate
    bool degenerate = false;  // every position was masked
};

// uniform(+-sqrt(6/(fan_in+fan_out))) for matrices, zeros for biases
Tensor init_weight_matrix(std::size_t rows, std::size_t cols, Rng& rng);

// one recurrence step: gates z and r, candidate state, convex blend
Var gru_step(Tape& tape, GruParams& p, Var x_t, Var h_prev);

// forward and backward recurrences from zero states over the whole sequence
// (the mask is applied downstream at the attention scores, not here);
// output j is [fwd_j ; bwd_j] of width 2H
std::vector<Var> bidirectional_gru(Tape& tape, GruParams& fwd, GruParams& bwd,
                                   const std::vector<Var>& xs, const Mask& mask);

// tanh projection, relevance scores, masked softmax, weighted sum
AttentionResult attention(Tape& tape, AttentionParams& p, const std::vector<Var>& hs,
                          const Mask& mask);

// bidirectional gru followed by attention
AttentionResult layer(Tape& tape, GruParams& fwd, GruParams& bwd, AttentionParams& att,
                      const std::vector<Var>& xs, const Mask& mask);

// the attention-free variant: mean of the hidden states over valid positions
AttentionResult mean_layer(Tape& tape, GruParams& fwd, GruParams& bwd,
                           const std::vector<Var>& xs, const Mask& mask);

}  // namespace lyricnet
