#include "segdms/transformer.hpp"

#include <cmath>

#include "segdms/errors.hpp"

namespace segdms {

namespace {

// large negative additive mask; finite so the NaN guards stay meaningful,
// yet far enough below any live logit that exp() underflows to exactly 0
constexpr double kMaskedScore = -1e4;

std::string block(const std::string& prefix, int layer) {
    return prefix + ".block" + std::to_string(layer);
}

}  // namespace

void validate(const TransformerConfig& cfg) {
    if (cfg.vocab_size < 0 || cfg.d_model < 1 || cfg.n_heads < 1 || cfg.d_ff < 1 ||
        cfg.n_layers < 1) {
        throw ConfigError("transformer dimensions must all be positive");
    }
    if (cfg.d_model % cfg.n_heads != 0) {
        throw ConfigError("d_model " + std::to_string(cfg.d_model) + " is not divisible by " +
                          std::to_string(cfg.n_heads) + " heads");
    }
}

template <typename T>
void add_transformer_params(ParamStore<T>& store, const std::string& prefix,
                            const TransformerConfig& cfg, Rng& rng) {
    validate(cfg);
    const int d = cfg.d_model;
    auto norm = [&](const std::string& name) {
        store.add(name + ".g", Matrix<T>(1, d, T(1)));
        store.add(name + ".b", Matrix<T>(1, d));
    };
    auto lin = [&](const std::string& name, int in, int out) {
        store.add(name + ".w", xavier_uniform<T>(in, out, rng));
        store.add(name + ".b", Matrix<T>(1, out));
    };
    if (cfg.vocab_size > 0) store.add(prefix + ".emb", xavier_uniform<T>(cfg.vocab_size, d, rng));
    for (int l = 0; l < cfg.n_layers; ++l) {
        const std::string b = block(prefix, l);
        norm(b + ".att.norm");
        lin(b + ".att.q", d, d);
        lin(b + ".att.k", d, d);
        lin(b + ".att.v", d, d);
        lin(b + ".att.o", d, d);
        norm(b + ".ff.norm");
        lin(b + ".ff.in", d, cfg.d_ff);
        lin(b + ".ff.out", cfg.d_ff, d);
    }
    norm(prefix + ".final_norm");
}

template <typename T>
Var linear(Tape<T>& tape, Var x, const std::string& name) {
    Var w = tape.param(name + ".w");
    Var b = tape.param(name + ".b");
    return tape.add_row(tape.matmul(x, w), b);
}

template <typename T>
Matrix<T> sinusoidal_positions(int len, int d_model) {
    Matrix<T> pe(len, d_model);
    for (int t = 0; t < len; ++t) {
        for (int i = 0; i * 2 < d_model; ++i) {
            const double rate = std::pow(10000.0, (2.0 * i) / d_model);
            pe(t, 2 * i) = static_cast<T>(std::sin(t / rate));
            if (2 * i + 1 < d_model) pe(t, 2 * i + 1) = static_cast<T>(std::cos(t / rate));
        }
    }
    return pe;
}

namespace {

template <typename T>
Var attention(Tape<T>& tape, Var h, const std::string& name, const TransformerConfig& cfg,
              Var mask, bool use_mask) {
    const int dh = cfg.d_model / cfg.n_heads;
    Var q = linear(tape, h, name + ".q");
    Var k = linear(tape, h, name + ".k");
    Var v = linear(tape, h, name + ".v");
    std::vector<Var> heads;
    for (int i = 0; i < cfg.n_heads; ++i) {
        Var qi = tape.slice_cols(q, i * dh, (i + 1) * dh);
        Var ki = tape.slice_cols(k, i * dh, (i + 1) * dh);
        Var vi = tape.slice_cols(v, i * dh, (i + 1) * dh);
        Var scores = tape.scale(tape.matmul(qi, ki, false, true),
                                static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh))));
        if (use_mask) scores = tape.add(scores, mask);
        heads.push_back(tape.matmul(tape.row_softmax(scores), vi));
    }
    return linear(tape, tape.concat_cols(heads), name + ".o");
}

}  // namespace

template <typename T>
Var transformer_stack(Tape<T>& tape, const std::string& prefix, const TransformerConfig& cfg,
                      Var h) {
    validate(cfg);
    const int len = tape.value(h).rows();
    Var mask{};
    if (cfg.causal) {
        Matrix<T> m(len, len);
        for (int r = 0; r < len; ++r) {
            for (int c = r + 1; c < len; ++c) m(r, c) = static_cast<T>(kMaskedScore);
        }
        mask = tape.constant(std::move(m));
    }
    for (int l = 0; l < cfg.n_layers; ++l) {
        const std::string b = block(prefix, l);
        Var normed = tape.layer_norm(h, tape.param(b + ".att.norm.g"), tape.param(b + ".att.norm.b"));
        h = tape.add(h, attention(tape, normed, b + ".att", cfg, mask, cfg.causal));
        Var ff_in = tape.layer_norm(h, tape.param(b + ".ff.norm.g"), tape.param(b + ".ff.norm.b"));
        Var ff = linear(tape, tape.relu(linear(tape, ff_in, b + ".ff.in")), b + ".ff.out");
        h = tape.add(h, ff);
    }
    return tape.layer_norm(h, tape.param(prefix + ".final_norm.g"),
                           tape.param(prefix + ".final_norm.b"));
}

template <typename T>
Var transformer_encode(Tape<T>& tape, const std::string& prefix, const TransformerConfig& cfg,
                       const std::vector<int>& ids) {
    Var emb = tape.embed(tape.param(prefix + ".emb"), ids);
    Var h = tape.scale(emb, static_cast<T>(std::sqrt(static_cast<double>(cfg.d_model))));
    h = tape.add(h, tape.constant(sinusoidal_positions<T>(static_cast<int>(ids.size()),
                                                          cfg.d_model)));
    return transformer_stack(tape, prefix, cfg, h);
}

#define SEGDMS_INSTANTIATE(T)                                                                    \
    template void add_transformer_params<T>(ParamStore<T>&, const std::string&,                 \
                                            const TransformerConfig&, Rng&);                     \
    template Var linear<T>(Tape<T>&, Var, const std::string&);                                   \
    template Matrix<T> sinusoidal_positions<T>(int, int);                                        \
    template Var transformer_stack<T>(Tape<T>&, const std::string&, const TransformerConfig&,    \
                                      Var);                                                      \
    template Var transformer_encode<T>(Tape<T>&, const std::string&, const TransformerConfig&,   \
                                       const std::vector<int>&);

SEGDMS_INSTANTIATE(float)
SEGDMS_INSTANTIATE(double)

#undef SEGDMS_INSTANTIATE

}  // namespace segdms
