#include "segdms/sampler_model.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "segdms/crf.hpp"
#include "segdms/errors.hpp"
#include "segdms/transformer.hpp"

namespace segdms {

namespace {

TransformerConfig encoder_cfg(const SamplerConfig& cfg, int label_count) {
    return {label_count, cfg.d_model, cfg.n_heads, cfg.d_ff, cfg.enc_layers, false};
}

TransformerConfig decoder_cfg(const SamplerConfig& cfg) {
    return {0, cfg.d_model, cfg.n_heads, cfg.d_ff, cfg.dec_layers, false};
}

std::string join_symbols(const Vocab& v) {
    std::string out;
    for (int i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += v.symbol(i);
    }
    return out;
}

std::shared_ptr<const Vocab> vocab_from_header(const ParamHeader& header) {
    auto sym_it = header.find("vocab");
    auto pad_it = header.find("vocab_pad");
    if (sym_it == header.end() || pad_it == header.end()) {
        throw DataError("checkpoint header lacks the vocabulary");
    }
    std::vector<std::string> symbols;
    std::stringstream ss(sym_it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) symbols.push_back(tok);
    return std::make_shared<const Vocab>(std::move(symbols), pad_it->second == "1");
}

int header_int(const ParamHeader& header, const std::string& key) {
    auto it = header.find(key);
    if (it == header.end()) throw DataError("checkpoint header lacks '" + key + "'");
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        throw DataError("checkpoint header '" + key + "' is not an integer: " + it->second);
    }
}

}  // namespace

void validate(const SamplerConfig& cfg) {
    if (cfg.d_model < 1 || cfg.n_heads < 1 || cfg.d_ff < 1 || cfg.enc_layers < 1 ||
        cfg.dec_layers < 1 || cfg.delta_max < 1) {
        throw ConfigError("sampler dimensions must be positive");
    }
    if (cfg.d_model % cfg.n_heads != 0) {
        throw ConfigError("d_model " + std::to_string(cfg.d_model) + " is not divisible by " +
                          std::to_string(cfg.n_heads) + " heads");
    }
    if (cfg.lambda_len < 0) throw ConfigError("length-loss weight must be non-negative");
}

template <typename T>
void add_sampler_params(ParamStore<T>& store, const SamplerConfig& cfg, int label_count,
                        Rng& rng) {
    validate(cfg);
    if (label_count < 2) throw ConfigError("sampler needs at least two emittable labels");
    add_transformer_params(store, "enc", encoder_cfg(cfg, label_count), rng);
    add_transformer_params(store, "dec", decoder_cfg(cfg), rng);
    store.add("len_head.w", xavier_uniform<T>(cfg.d_model, length_class_count(cfg.delta_max), rng));
    store.add("len_head.b", Matrix<T>(1, length_class_count(cfg.delta_max)));
    store.add("convert.u", Matrix<T>(1, 1));  // sigma = exp(u) starts at 1
    store.add("out.w", xavier_uniform<T>(cfg.d_model, label_count, rng));
    store.add("out.b", Matrix<T>(1, label_count));  // the per-token bias of the output head
    add_crf_params(store, "crf", label_count);
}

SamplerModel::SamplerModel(SamplerConfig cfg, std::shared_ptr<const Vocab> vocab,
                           std::uint64_t init_seed)
    : cfg_(cfg), vocab_(std::move(vocab)) {
    Rng rng(derive_seed(init_seed, 0x5e9));
    add_sampler_params(params_, cfg_, vocab_->emit_size(), rng);
}

SamplerModel::SamplerModel(SamplerConfig cfg, std::shared_ptr<const Vocab> vocab,
                           ParamStore<float> params)
    : cfg_(cfg), vocab_(std::move(vocab)), params_(std::move(params)) {
    validate(cfg_);
    ParamStore<float> expect;
    Rng rng(0);
    add_sampler_params(expect, cfg_, vocab_->emit_size(), rng);
    if (expect.count() != params_.count()) {
        throw DataError("checkpoint has " + std::to_string(params_.count()) +
                        " parameters, expected " + std::to_string(expect.count()));
    }
    for (int i = 0; i < expect.count(); ++i) {
        const Matrix<float>& got = params_.value(expect.name(i));
        const Matrix<float>& want = expect.value(i);
        if (got.rows() != want.rows() || got.cols() != want.cols()) {
            throw DataError("checkpoint parameter '" + expect.name(i) + "' has shape " +
                            std::to_string(got.rows()) + "x" + std::to_string(got.cols()) +
                            ", expected " + std::to_string(want.rows()) + "x" +
                            std::to_string(want.cols()));
        }
    }
}

void SamplerModel::save(const std::string& path, const ParamHeader& extra) const {
    ParamHeader header = extra;
    header["model"] = "sampler";
    header["vocab"] = join_symbols(*vocab_);
    header["vocab_pad"] = vocab_->has_pad() ? "1" : "0";
    header["d_model"] = std::to_string(cfg_.d_model);
    header["n_heads"] = std::to_string(cfg_.n_heads);
    header["d_ff"] = std::to_string(cfg_.d_ff);
    header["enc_layers"] = std::to_string(cfg_.enc_layers);
    header["dec_layers"] = std::to_string(cfg_.dec_layers);
    header["delta_max"] = std::to_string(cfg_.delta_max);
    header["lambda_len"] = std::to_string(cfg_.lambda_len);
    save_params(params_, path, header);
}

SamplerModel SamplerModel::load(const std::string& path) {
    LoadedParams loaded = load_params(path);
    auto it = loaded.header.find("model");
    if (it == loaded.header.end() || it->second != "sampler") {
        throw DataError("'" + path + "' is not a sampler checkpoint");
    }
    SamplerConfig cfg;
    cfg.d_model = header_int(loaded.header, "d_model");
    cfg.n_heads = header_int(loaded.header, "n_heads");
    cfg.d_ff = header_int(loaded.header, "d_ff");
    cfg.enc_layers = header_int(loaded.header, "enc_layers");
    cfg.dec_layers = header_int(loaded.header, "dec_layers");
    cfg.delta_max = header_int(loaded.header, "delta_max");
    auto lam = loaded.header.find("lambda_len");
    if (lam == loaded.header.end()) throw DataError("checkpoint header lacks 'lambda_len'");
    cfg.lambda_len = std::stod(lam->second);
    return SamplerModel(cfg, vocab_from_header(loaded.header), std::move(loaded.params));
}

template <typename T>
Var sampler_encode(Tape<T>& tape, const SamplerConfig& cfg, const std::vector<int>& ids) {
    // the label count is implicit in the bound parameter store's embedding
    TransformerConfig enc = encoder_cfg(cfg, 1);
    return transformer_encode(tape, "enc", enc, ids);
}

template <typename T>
Var sampler_length_logits(Tape<T>& tape, const SamplerConfig& cfg, Var hidden) {
    (void)cfg;
    return linear(tape, tape.mean_rows(hidden), "len_head");
}

template <typename T>
Var sampler_decode(Tape<T>& tape, const SamplerConfig& cfg, Var z) {
    const int len = tape.value(z).rows();
    Var with_pos = tape.add(z, tape.constant(sinusoidal_positions<T>(len, cfg.d_model)));
    Var h = transformer_stack(tape, "dec", decoder_cfg(cfg), with_pos);
    return linear(tape, h, "out");
}

template <typename T>
Matrix<T> factorized_distribution(const Matrix<T>& emissions) {
    return row_softmax(emissions);
}

template <typename T>
SamplerLossParts sampler_training_graph(Tape<T>& tape, const SamplerConfig& cfg,
                                        const std::vector<int>& clean,
                                        const std::vector<int>& corrupted) {
    const int delta = static_cast<int>(clean.size()) - static_cast<int>(corrupted.size());
    if (delta < -cfg.delta_max || delta > cfg.delta_max) {
        throw NumericError("length change " + std::to_string(delta) +
                           " is outside the classifier range ±" + std::to_string(cfg.delta_max));
    }
    SamplerLossParts parts;
    parts.delta_class = length_change_to_class(delta, cfg.delta_max);

    Var h = sampler_encode(tape, cfg, corrupted);
    Var len_logits = sampler_length_logits(tape, cfg, h);
    parts.length = tape.softmax_cross_entropy(len_logits, {parts.delta_class});

    Var z = length_convert(tape, h, tape.param("convert.u"), static_cast<int>(clean.size()));
    Var emissions = sampler_decode(tape, cfg, z);
    parts.recon = crf_nll_node(tape, emissions, "crf", clean);

    parts.total = tape.add(parts.recon, tape.scale(parts.length, static_cast<T>(cfg.lambda_len)));
    return parts;
}

namespace {

double row_nll(const Matrix<float>& logits, int target) {
    double mx = logits(0, 0);
    for (int c = 1; c < logits.cols(); ++c) mx = std::max(mx, static_cast<double>(logits(0, c)));
    double lse = 0;
    for (int c = 0; c < logits.cols(); ++c) lse += std::exp(logits(0, c) - mx);
    return (mx + std::log(lse)) - logits(0, target);
}

}  // namespace

SamplerEval evaluate_sampler(const SamplerModel& model, const std::vector<Sequence>& seqs,
                             const CorruptionConfig& corruption, std::uint64_t seed, int limit) {
    const SamplerConfig& cfg = model.config();
    // tapes only read the store (backward is never called here)
    ParamStore<float>& store = const_cast<SamplerModel&>(model).params();
    SamplerEval ev;
    const int n = limit > 0 ? std::min<int>(limit, static_cast<int>(seqs.size()))
                            : static_cast<int>(seqs.size());
    int tokens = 0, tokens_correct = 0, length_correct = 0;
    double loss_sum = 0;
    for (int i = 0; i < n; ++i) {
        const Sequence& x = seqs[static_cast<std::size_t>(i)];
        CorruptionConfig cc = corruption;
        cc.rng_seed = derive_seed(seed, 0xea11, static_cast<std::uint64_t>(i));
        const Sequence corrupted = corrupt_unrestricted(x, cc).corrupted;
        const int delta = x.length() - corrupted.length();
        if (delta < -cfg.delta_max || delta > cfg.delta_max) {
            ++ev.skipped;
            continue;
        }
        Tape<float> tape(&store);
        Var h = sampler_encode(tape, cfg, corrupted.ids());
        // copy: the tape's op record reallocates as later ops are appended
        const Matrix<float> len_logits = tape.value(sampler_length_logits(tape, cfg, h));
        const int gold_class = length_change_to_class(delta, cfg.delta_max);
        length_correct += pick_class(len_logits, PickMode::kArgmax, nullptr) == gold_class;
        Var z = length_convert(tape, h, tape.param("convert.u"), x.length());
        const Matrix<float> emissions = tape.value(sampler_decode(tape, cfg, z));
        const double recon = crf_nll(emissions, store.value("crf.trans"),
                                     store.value("crf.start"), store.value("crf.end"), x.ids());
        loss_sum += recon + cfg.lambda_len * row_nll(len_logits, gold_class);
        const std::vector<int> decoded =
            crf_viterbi(emissions, store.value("crf.trans"), store.value("crf.start"),
                        store.value("crf.end"));
        tokens += x.length();
        for (int t = 0; t < x.length(); ++t) {
            tokens_correct += decoded[static_cast<std::size_t>(t)] == x.at(t);
        }
        ++ev.evaluated;
    }
    if (ev.evaluated > 0) {
        ev.token_accuracy = static_cast<double>(tokens_correct) / tokens;
        ev.length_class_accuracy = static_cast<double>(length_correct) / ev.evaluated;
        ev.mean_loss = loss_sum / ev.evaluated;
    }
    return ev;
}

SamplerTrainStats train_sampler(SamplerModel& model, const std::vector<Sequence>& train_set,
                                const std::vector<Sequence>& held_out,
                                const SamplerTrainConfig& tc, std::ostream* log) {
    if (train_set.empty()) throw DataError("training set is empty");
    if (tc.steps < 1 || tc.batch_size < 1) throw ConfigError("steps and batch size must be >= 1");
    if (tc.step_offset < 0) throw ConfigError("step offset must be >= 0");
    validate(tc.corruption);
    const auto t0 = std::chrono::steady_clock::now();
    auto wall_ms = [&] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - t0)
            .count();
    };

    ParamStore<float>& store = model.params();
    store.zero_grads();
    AdamState<float> opt;
    opt.lr = tc.lr;

    // epoch-shuffled order; batches slide over it
    std::vector<int> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::uint64_t epoch = 0;
    Rng shuffle_rng(derive_seed(tc.seed, 0x0de7, epoch));
    shuffle_rng.shuffle(order);
    std::size_t cursor = 0;

    SamplerTrainStats stats;
    for (int step = tc.step_offset; step < tc.step_offset + tc.steps; ++step) {
        int used = 0;
        double loss_sum = 0, recon_sum = 0, len_sum = 0;
        for (int slot = 0; slot < tc.batch_size; ++slot) {
            if (cursor >= order.size()) {
                cursor = 0;
                ++epoch;
                shuffle_rng = Rng(derive_seed(tc.seed, 0x0de7, epoch));
                shuffle_rng.shuffle(order);
            }
            const Sequence& x = train_set[static_cast<std::size_t>(order[cursor++])];
            CorruptionConfig cc = tc.corruption;
            cc.rng_seed = derive_seed(tc.seed, 0xc0de, static_cast<std::uint64_t>(step),
                                      static_cast<std::uint64_t>(slot));
            const Sequence corrupted = corrupt_unrestricted(x, cc).corrupted;
            const int delta = x.length() - corrupted.length();
            if (delta < -model.config().delta_max || delta > model.config().delta_max) {
                ++stats.skipped_pairs;
                continue;
            }
            try {
                Tape<float> tape(&store);
                SamplerLossParts parts =
                    sampler_training_graph(tape, model.config(), x.ids(), corrupted.ids());
                loss_sum += tape.value(parts.total)(0, 0);
                recon_sum += tape.value(parts.recon)(0, 0);
                len_sum += tape.value(parts.length)(0, 0);
                tape.backward(parts.total);
            } catch (const NumericError& e) {
                throw NumericError("step " + std::to_string(step) + ": " + e.what());
            }
            ++used;
        }
        if (used == 0) continue;
        const float inv = 1.0f / static_cast<float>(used);
        for (int i = 0; i < store.count(); ++i) {
            Matrix<float>& g = store.grad(i);
            for (std::size_t k = 0; k < g.size(); ++k) g.data()[k] *= inv;
        }
        adam_step(store, opt);

        const double mean_loss = loss_sum / used;
        if (stats.steps_run == 0) stats.first_loss = mean_loss;
        stats.final_loss = mean_loss;
        ++stats.steps_run;
        if (log) {
            (*log) << "step=" << step << " loss=" << mean_loss
                   << " recon=" << recon_sum / used << " len=" << len_sum / used
                   << " skipped=" << stats.skipped_pairs << " wall_ms=" << wall_ms() << "\n";
        }
        if (tc.eval_every > 0 && (step + 1) % tc.eval_every == 0 && !held_out.empty()) {
            const SamplerEval ev = evaluate_sampler(model, held_out, tc.corruption,
                                                    derive_seed(tc.seed, 0x11a7), tc.eval_sequences);
            if (log) {
                (*log) << "eval step=" << step << " token_acc=" << ev.token_accuracy
                       << " len_acc=" << ev.length_class_accuracy << " loss=" << ev.mean_loss
                       << " evaluated=" << ev.evaluated << " wall_ms=" << wall_ms() << "\n";
            }
        }
    }

    if (!held_out.empty()) {
        stats.final_eval = evaluate_sampler(model, held_out, tc.corruption,
                                            derive_seed(tc.seed, 0x11a7), tc.eval_sequences);
        if (log) {
            (*log) << "final token_acc=" << stats.final_eval.token_accuracy
                   << " len_acc=" << stats.final_eval.length_class_accuracy
                   << " loss=" << stats.final_eval.mean_loss
                   << " evaluated=" << stats.final_eval.evaluated << " wall_ms=" << wall_ms()
                   << "\n";
        }
    }
    if (!tc.checkpoint_path.empty()) model.save(tc.checkpoint_path, tc.checkpoint_extra);
    return stats;
}

#define SEGDMS_INSTANTIATE(T)                                                                  \
    template void add_sampler_params<T>(ParamStore<T>&, const SamplerConfig&, int, Rng&);      \
    template Var sampler_encode<T>(Tape<T>&, const SamplerConfig&, const std::vector<int>&);   \
    template Var sampler_length_logits<T>(Tape<T>&, const SamplerConfig&, Var);                \
    template Var sampler_decode<T>(Tape<T>&, const SamplerConfig&, Var);                       \
    template Matrix<T> factorized_distribution<T>(const Matrix<T>&);                           \
    template SamplerLossParts sampler_training_graph<T>(Tape<T>&, const SamplerConfig&,        \
                                                        const std::vector<int>&,              \
                                                        const std::vector<int>&);

SEGDMS_INSTANTIATE(float)
SEGDMS_INSTANTIATE(double)

#undef SEGDMS_INSTANTIATE

}  // namespace segdms
