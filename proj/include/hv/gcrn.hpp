#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hv/attention.hpp"
#include "hv/params.hpp"

namespace hv::gcrn {

struct GcrnConfig {
    int hidden_dim = 32;
    int num_layers = 1;  // stacked cells
    int conv_layers = 1; // applications of A_hat inside each gate conv

    void validate() const;
};

struct AttentionConfig {
    int num_heads = 8;
    double sampling_factor = 5.0;
    bool exact_fallback = false;
};

enum class Activation { Identity, Sigmoid, Tanh, Relu };

/// One gate's graph-convolution parameters (Z is [x, h] concatenated).
struct GateVars {
    ad::Var weight; // (in_dim x h)
    ad::Var bias;   // (1 x h)
};

/// All three gates of one cell.
struct CellVars {
    GateVars reset;
    GateVars update;
    GateVars candidate;
};

/// act(A_hat^k  Z W + b) over per-sample blocks of n rows; act defaults to
/// identity because the GRU gates apply their own nonlinearity.
ad::Var graph_conv(ad::Var a_hat, ad::Var z, ad::Var weight, ad::Var bias, int n,
                   Activation act = Activation::Identity, int conv_layers = 1);

/// GRU step where every gate transform is a graph convolution:
/// r = sig(F([x,h]) + c_r), u = sig(F([x,h]) + c_u),
/// c = tanh(F([x, r*h]) + c_c), h' = u*h + (1-u)*c.
ad::Var gcrn_cell_step(ad::Var x, ad::Var h_prev, ad::Var a_hat, const CellVars& cell,
                       int n, int conv_layers = 1);

/// Registers gates for a stack of cells under `prefix` ("gcrn.enc"/"gcrn.dec").
/// Layer 0 consumes input_dim features, upper layers consume hidden_dim.
void register_stack(ParamStore& store, const std::string& prefix, const GcrnConfig& cfg,
                    int input_dim, std::uint64_t seed);

CellVars stack_cell(const BoundParams& p, const std::string& prefix, int layer);

struct EncodeResult {
    // hidden[layer][t], each (batch*n x h); zero initial state.
    std::vector<std::vector<ad::Var>> hidden;
    std::vector<ad::Var> final_state; // per layer
};

EncodeResult encode(ad::Tape& tape, const std::vector<ad::Var>& inputs, ad::Var a_hat,
                    const BoundParams& p, const std::string& prefix, const GcrnConfig& cfg,
                    int n);

/// ProbSparse attention over Q/K/V laid out (seq_len*groups x dim); see
/// attn::attention. Exposed here as the module-level operation.
ad::Var probsparse_attention(ad::Var q, ad::Var k, ad::Var v,
                             const AttentionConfig& cfg, int groups, int seq_len);

struct AugmentedState {
    ad::Var augmented;  // (R x 2h) = concat[h_T, C]
    ad::Var init_state; // (R x h) linear projection of augmented
};

/// Context C = ProbSparse attention output at the final time position over
/// the projected hidden sequence; H = concat[h_T, C]; init = H W + b.
AugmentedState augmented_state(const std::vector<ad::Var>& hidden_seq, ad::Var h_final,
                               const BoundParams& p, const AttentionConfig& cfg);

struct DecodeOptions {
    int horizon = 12;
    double sampling_prob = 0.0;               // P(feed ground truth) per step
    const std::vector<ad::Var>* ground_truth = nullptr; // (R x 1) per step
    Rng* rng = nullptr;                       // required when sampling_prob > 0
};

/// Autoregressive decoder: step 1 consumes the last observed value, later
/// steps consume ground truth with probability sampling_prob (one draw per
/// step) and the previous prediction otherwise. Returns (R x 1) per step.
std::vector<ad::Var> decode(const std::vector<ad::Var>& init_states, ad::Var first_input,
                            ad::Var a_hat, const BoundParams& p, const GcrnConfig& cfg,
                            int n, const DecodeOptions& opts);

} // namespace hv::gcrn
