#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "segdms/corruption.hpp"
#include "segdms/graph.hpp"
#include "segdms/length_conversion.hpp"
#include "segdms/params.hpp"
#include "segdms/vocab.hpp"

namespace segdms {

// Denoising sampler assembly: encoder stack over the corrupted tokens, a
// pooled length-change classifier, length conversion to the target length,
// a non-causal decoder stack over the converted hidden set, and a CRF output
// head over per-position emission logits (which carry a per-token bias).
struct SamplerConfig {
    int d_model = 128;
    int n_heads = 8;
    int d_ff = 512;
    int enc_layers = 2;
    int dec_layers = 2;
    int delta_max = kDefaultDeltaMax;
    double lambda_len = 1.0;  // weight of the length-classifier loss term
};

void validate(const SamplerConfig& cfg);

class SamplerModel {
  public:
    // fresh Xavier/zero initialization, deterministic in init_seed
    SamplerModel(SamplerConfig cfg, std::shared_ptr<const Vocab> vocab, std::uint64_t init_seed);
    // wraps parameters loaded from a checkpoint
    SamplerModel(SamplerConfig cfg, std::shared_ptr<const Vocab> vocab, ParamStore<float> params);

    const SamplerConfig& config() const { return cfg_; }
    const std::shared_ptr<const Vocab>& vocab() const { return vocab_; }
    ParamStore<float>& params() { return params_; }
    const ParamStore<float>& params() const { return params_; }
    int label_count() const { return vocab_->emit_size(); }

    void save(const std::string& path, const ParamHeader& extra) const;
    static SamplerModel load(const std::string& path);

  private:
    SamplerConfig cfg_;
    std::shared_ptr<const Vocab> vocab_;
    ParamStore<float> params_;
};

// --- graph builders (double instantiation backs the gradient-check mode) ---

template <typename T>
void add_sampler_params(ParamStore<T>& store, const SamplerConfig& cfg, int label_count,
                        Rng& rng);

// corrupted token ids -> L×d hidden set
template <typename T>
Var sampler_encode(Tape<T>& tape, const SamplerConfig& cfg, const std::vector<int>& ids);

// pooled hidden set -> (2·delta_max+1) length-class logits
template <typename T>
Var sampler_length_logits(Tape<T>& tape, const SamplerConfig& cfg, Var hidden);

// converted hidden set -> per-position emission logits (per-token bias added)
template <typename T>
Var sampler_decode(Tape<T>& tape, const SamplerConfig& cfg, Var z);

// independent per-position categorical head: row softmax of the emissions
template <typename T>
Matrix<T> factorized_distribution(const Matrix<T>& emissions);

struct SamplerLossParts {
    Var total;  // recon + lambda_len · length loss
    Var recon;
    Var length;
    int delta_class = 0;  // teacher-forced length-change class
};

// One training pair: encode the corrupted ids, convert to the clean length
// (teacher forcing), decode, and score both loss terms. Throws NumericError
// when the length change falls outside the classifier range.
template <typename T>
SamplerLossParts sampler_training_graph(Tape<T>& tape, const SamplerConfig& cfg,
                                        const std::vector<int>& clean,
                                        const std::vector<int>& corrupted);

// --- training ---------------------------------------------------------------

struct SamplerTrainConfig {
    int steps = 3000;
    int step_offset = 0;  // nonzero when resuming: logs and streams continue from here
    int batch_size = 32;
    double lr = 1e-4;
    int eval_every = 200;         // 0 disables mid-run evaluation
    int eval_sequences = 200;     // held-out subset size per evaluation
    CorruptionConfig corruption;  // rng_seed field is ignored (streams derive from `seed`)
    std::uint64_t seed = 0;
    std::string checkpoint_path;   // final parameters written here when non-empty
    ParamHeader checkpoint_extra;  // extra header entries echoed into the checkpoint
};

struct SamplerEval {
    double token_accuracy = 0;
    double length_class_accuracy = 0;
    double mean_loss = 0;
    int evaluated = 0;
    int skipped = 0;  // pairs whose length change left the classifier range
};

struct SamplerTrainStats {
    int steps_run = 0;
    int skipped_pairs = 0;
    double first_loss = 0;
    double final_loss = 0;
    SamplerEval final_eval;
};

// Line-delimited progress records go to `log` when non-null (step, loss
// terms, wall time). Deterministic per seed apart from the wall-time field.
SamplerTrainStats train_sampler(SamplerModel& model, const std::vector<Sequence>& train_set,
                                const std::vector<Sequence>& held_out,
                                const SamplerTrainConfig& tc, std::ostream* log);

// Corrupts each sequence with a per-index derived stream, teacher-forces the
// conversion length, and scores Viterbi reconstruction accuracy plus
// length-class argmax accuracy.
SamplerEval evaluate_sampler(const SamplerModel& model, const std::vector<Sequence>& seqs,
                             const CorruptionConfig& corruption, std::uint64_t seed, int limit);

}  // namespace segdms
