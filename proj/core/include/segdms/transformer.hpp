#pragma once

#include <string>
#include <vector>

#include "segdms/graph.hpp"
#include "segdms/params.hpp"
#include "segdms/rng.hpp"

namespace segdms {

// Pre-norm transformer stack: per block, layer-norm → multi-head scaled
// dot-product attention → residual, then layer-norm → relu feed-forward →
// residual, with a final layer-norm on top. `causal` restricts attention to
// non-future positions via a large negative additive mask.
struct TransformerConfig {
    int vocab_size = 0;  // 0 = no embedding table (stack runs on external vectors)
    int d_model = 0;
    int n_heads = 0;
    int d_ff = 0;
    int n_layers = 0;
    bool causal = false;
};

void validate(const TransformerConfig& cfg);

// Registers all stack parameters (embedding when vocab_size > 0, plus
// per-block weights) under `prefix`: Xavier-uniform weights, zero biases,
// unit norm gains.
template <typename T>
void add_transformer_params(ParamStore<T>& store, const std::string& prefix,
                            const TransformerConfig& cfg, Rng& rng);

// x·W + broadcast bias, reading parameters `{name}.w` / `{name}.b`
template <typename T>
Var linear(Tape<T>& tape, Var x, const std::string& name);

// fixed sin/cos position signal, one row per position
template <typename T>
Matrix<T> sinusoidal_positions(int len, int d_model);

// Runs the blocks over an already-embedded hidden set (rows = positions).
template <typename T>
Var transformer_stack(Tape<T>& tape, const std::string& prefix, const TransformerConfig& cfg,
                      Var h);

// Embeds token ids (scaled by sqrt(d)), adds the position signal, and runs
// the blocks; returns the L×d hidden set.
template <typename T>
Var transformer_encode(Tape<T>& tape, const std::string& prefix, const TransformerConfig& cfg,
                       const std::vector<int>& ids);

}  // namespace segdms
