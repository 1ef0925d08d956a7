#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "segdms/params.hpp"
#include "segdms/segments.hpp"
#include "segdms/vocab.hpp"

namespace segdms {

// Decoder-only causal transformer used to score sequences by autoregressive
// log-probability. A begin sentinel is prepended to the input and an end
// sentinel closes the target stream, so probabilities normalize over
// variable-length sequences. Sentinels live outside the base vocabulary:
// input ids are the base tokens plus begin; predicted classes are the base
// tokens plus end.
struct ScorerConfig {
    int d_model = 128;
    int n_heads = 4;
    int d_ff = 512;
    int n_layers = 4;
};

void validate(const ScorerConfig& cfg);

class ScorerModel {
  public:
    ScorerModel(ScorerConfig cfg, std::shared_ptr<const Vocab> vocab, std::uint64_t init_seed);
    ScorerModel(ScorerConfig cfg, std::shared_ptr<const Vocab> vocab, ParamStore<float> params);

    const ScorerConfig& config() const { return cfg_; }
    const std::shared_ptr<const Vocab>& vocab() const { return vocab_; }
    ParamStore<float>& params() { return params_; }
    const ParamStore<float>& params() const { return params_; }

    int end_class() const { return vocab_->emit_size(); }        // target id of the end sentinel
    int begin_id() const { return vocab_->emit_size() + 1; }     // input id of the begin sentinel
    int class_count() const { return vocab_->emit_size() + 1; }  // base tokens + end
    int input_vocab() const { return vocab_->emit_size() + 2; }

    void save(const std::string& path, const ParamHeader& extra) const;
    static ScorerModel load(const std::string& path);

  private:
    ScorerConfig cfg_;
    std::shared_ptr<const Vocab> vocab_;
    ParamStore<float> params_;
};

struct SequenceScore {
    double total = 0;                // sum of conditional log-probs, end sentinel included
    std::vector<double> per_token;   // one entry per sequence position (end excluded)
    double end_term = 0;             // log p(end | full sequence)
};

// full-forward scoring; per-position conditionals come from one causal pass
SequenceScore score_sequence(const ScorerModel& model, const Sequence& x);

// sum of per-token conditional log-probs over the positions inside `region`
double region_log_prob(const SequenceScore& score, const SegmentSet& region);

struct ScorerTrainConfig {
    int steps = 600;
    int step_offset = 0;  // nonzero when resuming: logs continue from here
    int batch_size = 32;
    double lr = 1e-3;
    int eval_every = 100;      // 0 disables mid-run evaluation
    int eval_sequences = 200;
    std::uint64_t seed = 0;
    std::string checkpoint_path;
    ParamHeader checkpoint_extra;
};

struct ScorerTrainStats {
    int steps_run = 0;
    double first_loss = 0;   // nats per token, first step
    double final_loss = 0;
    double held_out_perplexity = 0;
};

ScorerTrainStats train_scorer(ScorerModel& model, const std::vector<Sequence>& train_set,
                              const std::vector<Sequence>& held_out, const ScorerTrainConfig& tc,
                              std::ostream* log);

// exp(mean per-token NLL) over the given sequences (end sentinel included)
double scorer_perplexity(const ScorerModel& model, const std::vector<Sequence>& seqs, int limit);

}  // namespace segdms
