#include "segdms/scorer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include "segdms/errors.hpp"
#include "segdms/graph.hpp"
#include "segdms/transformer.hpp"

namespace segdms {

namespace {

TransformerConfig stack_cfg(const ScorerConfig& cfg, int input_vocab) {
    return {input_vocab, cfg.d_model, cfg.n_heads, cfg.d_ff, cfg.n_layers, true};
}

std::string join_symbols(const Vocab& v) {
    std::string out;
    for (int i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += v.symbol(i);
    }
    return out;
}

// logits over next-token classes for inputs [begin, x_0 .. x_{L-1}]
Var scorer_logits(Tape<float>& tape, const ScorerModel& model, const Sequence& x) {
    std::vector<int> inputs;
    inputs.reserve(static_cast<std::size_t>(x.length()) + 1);
    inputs.push_back(model.begin_id());
    for (int id : x.ids()) inputs.push_back(id);
    Var h = transformer_encode(tape, "lm", stack_cfg(model.config(), model.input_vocab()), inputs);
    return linear(tape, h, "lm_out");
}

std::vector<int> scorer_targets(const ScorerModel& model, const Sequence& x) {
    std::vector<int> targets = x.ids();
    targets.push_back(model.end_class());
    return targets;
}

}  // namespace

void validate(const ScorerConfig& cfg) {
    if (cfg.d_model < 1 || cfg.n_heads < 1 || cfg.d_ff < 1 || cfg.n_layers < 1) {
        throw ConfigError("scorer dimensions must be positive");
    }
    if (cfg.d_model % cfg.n_heads != 0) {
        throw ConfigError("d_model " + std::to_string(cfg.d_model) + " is not divisible by " +
                          std::to_string(cfg.n_heads) + " heads");
    }
}

namespace {

template <typename T>
void add_scorer_params(ParamStore<T>& store, const ScorerConfig& cfg, int input_vocab,
                       int class_count, Rng& rng) {
    add_transformer_params(store, "lm", stack_cfg(cfg, input_vocab), rng);
    store.add("lm_out.w", xavier_uniform<T>(cfg.d_model, class_count, rng));
    store.add("lm_out.b", Matrix<T>(1, class_count));
}

}  // namespace

ScorerModel::ScorerModel(ScorerConfig cfg, std::shared_ptr<const Vocab> vocab,
                         std::uint64_t init_seed)
    : cfg_(cfg), vocab_(std::move(vocab)) {
    validate(cfg_);
    Rng rng(derive_seed(init_seed, 0x5c0));
    add_scorer_params(params_, cfg_, input_vocab(), class_count(), rng);
}

ScorerModel::ScorerModel(ScorerConfig cfg, std::shared_ptr<const Vocab> vocab,
                         ParamStore<float> params)
    : cfg_(cfg), vocab_(std::move(vocab)), params_(std::move(params)) {
    validate(cfg_);
    ParamStore<float> expect;
    Rng rng(0);
    add_scorer_params(expect, cfg_, input_vocab(), class_count(), rng);
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

void ScorerModel::save(const std::string& path, const ParamHeader& extra) const {
    ParamHeader header = extra;
    header["model"] = "scorer";
    header["vocab"] = join_symbols(*vocab_);
    header["vocab_pad"] = vocab_->has_pad() ? "1" : "0";
    header["d_model"] = std::to_string(cfg_.d_model);
    header["n_heads"] = std::to_string(cfg_.n_heads);
    header["d_ff"] = std::to_string(cfg_.d_ff);
    header["n_layers"] = std::to_string(cfg_.n_layers);
    save_params(params_, path, header);
}

ScorerModel ScorerModel::load(const std::string& path) {
    LoadedParams loaded = load_params(path);
    auto get = [&](const std::string& key) -> std::string {
        auto it = loaded.header.find(key);
        if (it == loaded.header.end()) {
            throw DataError("checkpoint header lacks '" + key + "'");
        }
        return it->second;
    };
    if (get("model") != "scorer") throw DataError("'" + path + "' is not a scorer checkpoint");
    ScorerConfig cfg;
    cfg.d_model = std::stoi(get("d_model"));
    cfg.n_heads = std::stoi(get("n_heads"));
    cfg.d_ff = std::stoi(get("d_ff"));
    cfg.n_layers = std::stoi(get("n_layers"));
    std::vector<std::string> symbols;
    const std::string joined = get("vocab");
    std::size_t pos = 0;
    while (pos <= joined.size()) {
        std::size_t comma = joined.find(',', pos);
        if (comma == std::string::npos) comma = joined.size();
        symbols.push_back(joined.substr(pos, comma - pos));
        pos = comma + 1;
    }
    auto vocab = std::make_shared<const Vocab>(std::move(symbols), get("vocab_pad") == "1");
    return ScorerModel(cfg, std::move(vocab), std::move(loaded.params));
}

SequenceScore score_sequence(const ScorerModel& model, const Sequence& x) {
    if (!(*x.vocab() == *model.vocab())) {
        throw DataError("sequence vocabulary does not match the scorer's");
    }
    ParamStore<float>& store = const_cast<ScorerModel&>(model).params();
    Tape<float> tape(&store);
    const Matrix<float> logits = tape.value(scorer_logits(tape, model, x));
    const std::vector<int> targets = scorer_targets(model, x);
    SequenceScore score;
    for (int r = 0; r < logits.rows(); ++r) {
        double mx = logits(r, 0);
        for (int c = 1; c < logits.cols(); ++c) mx = std::max(mx, static_cast<double>(logits(r, c)));
        double lse = 0;
        for (int c = 0; c < logits.cols(); ++c) lse += std::exp(logits(r, c) - mx);
        const double lp = logits(r, targets[static_cast<std::size_t>(r)]) - (mx + std::log(lse));
        score.total += lp;
        if (r < x.length()) {
            score.per_token.push_back(lp);
        } else {
            score.end_term = lp;
        }
    }
    return score;
}

double region_log_prob(const SequenceScore& score, const SegmentSet& region) {
    if (region.seq_len() != static_cast<int>(score.per_token.size())) {
        throw DataError("region covers length " + std::to_string(region.seq_len()) +
                        " but the score has " + std::to_string(score.per_token.size()) +
                        " positions");
    }
    double sum = 0;
    for (const Range& r : region.ranges()) {
        for (int t = r.start; t <= r.end; ++t) sum += score.per_token[static_cast<std::size_t>(t)];
    }
    return sum;
}

double scorer_perplexity(const ScorerModel& model, const std::vector<Sequence>& seqs, int limit) {
    const int n = limit > 0 ? std::min<int>(limit, static_cast<int>(seqs.size()))
                            : static_cast<int>(seqs.size());
    if (n == 0) throw DataError("perplexity over an empty sequence set");
    double nll = 0;
    std::int64_t tokens = 0;
    for (int i = 0; i < n; ++i) {
        const SequenceScore s = score_sequence(model, seqs[static_cast<std::size_t>(i)]);
        nll -= s.total;
        tokens += seqs[static_cast<std::size_t>(i)].length() + 1;
    }
    return std::exp(nll / static_cast<double>(tokens));
}

ScorerTrainStats train_scorer(ScorerModel& model, const std::vector<Sequence>& train_set,
                              const std::vector<Sequence>& held_out, const ScorerTrainConfig& tc,
                              std::ostream* log) {
    if (train_set.empty()) throw DataError("training set is empty");
    if (tc.steps < 1 || tc.batch_size < 1) throw ConfigError("steps and batch size must be >= 1");
    if (tc.step_offset < 0) throw ConfigError("step offset must be >= 0");
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

    std::vector<int> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::uint64_t epoch = 0;
    Rng shuffle_rng(derive_seed(tc.seed, 0x10e7, epoch));
    shuffle_rng.shuffle(order);
    std::size_t cursor = 0;

    ScorerTrainStats stats;
    for (int step = tc.step_offset; step < tc.step_offset + tc.steps; ++step) {
        double nll_sum = 0;
        std::int64_t token_sum = 0;
        for (int slot = 0; slot < tc.batch_size; ++slot) {
            if (cursor >= order.size()) {
                cursor = 0;
                ++epoch;
                shuffle_rng = Rng(derive_seed(tc.seed, 0x10e7, epoch));
                shuffle_rng.shuffle(order);
            }
            const Sequence& x = train_set[static_cast<std::size_t>(order[cursor++])];
            try {
                Tape<float> tape(&store);
                Var logits = scorer_logits(tape, model, x);
                Var loss = tape.softmax_cross_entropy(logits, scorer_targets(model, x));
                nll_sum += tape.value(loss)(0, 0);
                token_sum += x.length() + 1;
                tape.backward(loss);
            } catch (const NumericError& e) {
                throw NumericError("step " + std::to_string(step) + ": " + e.what());
            }
        }
        // per-token normalization keeps the step size length-independent
        const float inv = 1.0f / static_cast<float>(token_sum);
        for (int i = 0; i < store.count(); ++i) {
            Matrix<float>& g = store.grad(i);
            for (std::size_t k = 0; k < g.size(); ++k) g.data()[k] *= inv;
        }
        adam_step(store, opt);

        const double mean_loss = nll_sum / static_cast<double>(token_sum);
        if (stats.steps_run == 0) stats.first_loss = mean_loss;
        stats.final_loss = mean_loss;
        ++stats.steps_run;
        if (log) {
            (*log) << "step=" << step << " loss=" << mean_loss << " wall_ms=" << wall_ms()
                   << "\n";
        }
        if (tc.eval_every > 0 && (step + 1) % tc.eval_every == 0 && !held_out.empty()) {
            const double ppl = scorer_perplexity(model, held_out, tc.eval_sequences);
            if (log) {
                (*log) << "eval step=" << step << " perplexity=" << ppl
                       << " wall_ms=" << wall_ms() << "\n";
            }
        }
    }

    if (!held_out.empty()) {
        stats.held_out_perplexity = scorer_perplexity(model, held_out, tc.eval_sequences);
        if (log) {
            (*log) << "final perplexity=" << stats.held_out_perplexity << " wall_ms=" << wall_ms()
                   << "\n";
        }
    }
    if (!tc.checkpoint_path.empty()) model.save(tc.checkpoint_path, tc.checkpoint_extra);
    return stats;
}

}  // namespace segdms
