// Command-line front end: data generation, sampler/scorer training, segment-
// preserving sampling, scoring, evaluation reports, and a preservation
// checker. Every command is deterministic given its flags and seeds.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "segdms/data.hpp"
#include "segdms/edit_distance.hpp"
#include "segdms/errors.hpp"
#include "segdms/msps.hpp"
#include "segdms/report.hpp"
#include "segdms/rng.hpp"
#include "segdms/sampler_model.hpp"
#include "segdms/scorer.hpp"
#include "segdms/segments.hpp"

namespace {

using namespace segdms;

// `SEGDMS_SEED` provides the default for every --seed flag.
std::uint64_t seed_from_env() {
    const char* env = std::getenv("SEGDMS_SEED");
    if (env == nullptr || *env == '\0') return 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == nullptr || *end != '\0') {
        throw ConfigError(std::string("SEGDMS_SEED is not an unsigned integer: '") + env + "'");
    }
    return static_cast<std::uint64_t>(v);
}

// Index-ordered fan-out: every task writes only its own slot, so the merged
// result is identical for any worker count.
template <class Fn>
void parallel_for(int n, int workers, Fn&& fn) {
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto drain = [&] {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int spawn = std::min(workers, n);
    pool.reserve(static_cast<std::size_t>(spawn));
    for (int w = 0; w < spawn; ++w) pool.emplace_back(drain);
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::string format_beta(double beta) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", beta);
    return buf;
}

// 64-bit FNV-1a over the canonical text form of a family spec
std::uint64_t family_hash(const SyntheticFamilySpec& spec) {
    std::ostringstream text;
    text.precision(17);
    for (const RegionSpec& r : spec.regions) {
        text << r.name << '|' << r.variable << '|' << r.tmpl << '|' << r.noise << '|' << r.min_len
             << '|' << r.max_len;
        for (const auto& table : {r.head, r.tail}) {
            for (const auto& row : table) {
                for (double w : row) text << ',' << w;
            }
            text << '|';
        }
        for (double w : r.body) text << ',' << w;
        text << '\n';
    }
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text.str()) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Union of the named regions of one record, adjacent ranges merged. Every
// name must resolve; unknown names get a per-row diagnostic.
SegmentSet keep_set(const AnnotatedSequence& rec, const std::vector<std::string>& names) {
    for (const std::string& name : names) {
        if (rec.find_region(name) == nullptr) {
            throw DataError("sequence '" + rec.id() + "' has no region named '" + name + "'");
        }
    }
    std::vector<Range> merged;
    for (const NamedRegion& r : rec.regions()) {
        bool wanted = false;
        for (const std::string& name : names) wanted = wanted || name == r.name;
        if (!wanted) continue;
        if (!merged.empty() && merged.back().end + 1 == r.range.start) {
            merged.back().end = r.range.end;
        } else {
            merged.push_back(r.range);
        }
    }
    return SegmentSet(std::move(merged), rec.sequence().length());
}

SegmentSet preserved_set_for(const AnnotatedSequence& rec, const std::vector<std::string>& keep,
                             const std::string& segment_spec) {
    if (!segment_spec.empty()) return parse_segments(segment_spec, rec.sequence().length());
    if (!keep.empty()) return keep_set(rec, keep);
    return SegmentSet({}, rec.sequence().length());
}

// --- gen-data ----------------------------------------------------------------

struct GenDataOpts {
    int n = 1000;
    std::uint64_t seed = 0;
    std::string out;
};

void run_gen_data(const GenDataOpts& opt) {
    const SyntheticFamilySpec family = default_antibody_family();
    const auto corpus = generate_corpus(family, opt.n, opt.seed);
    save_csv(corpus, opt.out);

    std::ofstream manifest(opt.out + ".manifest");
    if (!manifest) throw DataError("cannot open '" + opt.out + ".manifest' for writing");
    manifest << "command = gen-data\n"
             << "rows = " << corpus.size() << "\n"
             << "seed = " << opt.seed << "\n"
             << "family = default-antibody\n"
             << "family_hash = " << std::hex << family_hash(family) << std::dec << "\n";
    std::cout << "wrote " << corpus.size() << " sequences to " << opt.out << "\n";
}

// --- training ----------------------------------------------------------------

struct SplitOpts {
    double train = 0.9;
    double valid = 0.1;
    double test = 0.0;
};

struct TrainSamplerOpts {
    std::string data;
    std::string out;
    std::string resume;
    SamplerConfig model;
    SamplerTrainConfig train;
    SplitOpts splits;
};

int header_steps_done(const ParamHeader& header) {
    auto it = header.find("steps_done");
    if (it == header.end()) return 0;
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        throw DataError("checkpoint header has a malformed steps_done entry: '" + it->second +
                        "'");
    }
}

void run_train_sampler(TrainSamplerOpts& opt) {
    const auto records = load_csv(opt.data, amino_acid_vocab());
    const SplitResult parts = split(records, opt.splits.train, opt.splits.valid, opt.splits.test,
                                    opt.train.seed);

    SamplerModel model = opt.resume.empty()
                             ? SamplerModel(opt.model, amino_acid_vocab(), opt.train.seed)
                             : SamplerModel::load(opt.resume);
    if (!opt.resume.empty()) {
        opt.train.step_offset = header_steps_done(load_params(opt.resume).header);
        std::cout << "resuming from " << opt.resume << " at step " << opt.train.step_offset
                  << "\n";
    }

    opt.train.checkpoint_path = opt.out;
    ParamHeader& extra = opt.train.checkpoint_extra;
    extra["steps_done"] = std::to_string(opt.train.step_offset + opt.train.steps);
    extra["batch_size"] = std::to_string(opt.train.batch_size);
    extra["lr"] = format_report_number(opt.train.lr);
    extra["train_seed"] = std::to_string(opt.train.seed);
    extra["p_sub"] = format_report_number(opt.train.corruption.p_sub);
    extra["p_ins"] = format_report_number(opt.train.corruption.p_ins);
    extra["p_del"] = format_report_number(opt.train.corruption.p_del);

    const SamplerTrainStats stats = train_sampler(model, sequences_of(parts.train),
                                                  sequences_of(parts.valid), opt.train,
                                                  &std::cout);
    std::cout << "done steps=" << stats.steps_run << " first_loss=" << stats.first_loss
              << " final_loss=" << stats.final_loss << " checkpoint=" << opt.out << "\n";
}

struct TrainScorerOpts {
    std::string data;
    std::string out;
    std::string resume;
    ScorerConfig model;
    ScorerTrainConfig train;
    SplitOpts splits;
};

void run_train_scorer(TrainScorerOpts& opt) {
    const auto records = load_csv(opt.data, amino_acid_vocab());
    const SplitResult parts = split(records, opt.splits.train, opt.splits.valid, opt.splits.test,
                                    opt.train.seed);

    ScorerModel model = opt.resume.empty()
                            ? ScorerModel(opt.model, amino_acid_vocab(), opt.train.seed)
                            : ScorerModel::load(opt.resume);
    if (!opt.resume.empty()) {
        opt.train.step_offset = header_steps_done(load_params(opt.resume).header);
        std::cout << "resuming from " << opt.resume << " at step " << opt.train.step_offset
                  << "\n";
    }

    opt.train.checkpoint_path = opt.out;
    ParamHeader& extra = opt.train.checkpoint_extra;
    extra["steps_done"] = std::to_string(opt.train.step_offset + opt.train.steps);
    extra["batch_size"] = std::to_string(opt.train.batch_size);
    extra["lr"] = format_report_number(opt.train.lr);
    extra["train_seed"] = std::to_string(opt.train.seed);

    const ScorerTrainStats stats = train_scorer(model, sequences_of(parts.train),
                                                sequences_of(parts.valid), opt.train, &std::cout);
    std::cout << "done steps=" << stats.steps_run << " first_loss=" << stats.first_loss
              << " final_loss=" << stats.final_loss
              << " perplexity=" << stats.held_out_perplexity << " checkpoint=" << opt.out << "\n";
}

// --- sample ------------------------------------------------------------------

struct SampleOpts {
    std::string model;
    std::string in;
    std::string out;
    std::vector<std::string> keep;
    std::string segments;
    std::vector<double> betas{0.5};
    int iterations = 1;
    std::string decode = "posterior";
    std::string delta_pick = "sample";
    CorruptionConfig corruption;
    std::uint64_t seed = 0;
    int workers = 1;
};

DecodeMode parse_decode(const std::string& name) {
    if (name == "posterior") return DecodeMode::kPosterior;
    if (name == "viterbi") return DecodeMode::kViterbi;
    throw ConfigError("unknown decode mode '" + name + "' (posterior|viterbi)");
}

PickMode parse_delta_pick(const std::string& name) {
    if (name == "sample") return PickMode::kSample;
    if (name == "argmax") return PickMode::kArgmax;
    throw ConfigError("unknown delta pick mode '" + name + "' (sample|argmax)");
}

void run_sample(const SampleOpts& opt) {
    if (!opt.keep.empty() && !opt.segments.empty()) {
        throw ConfigError("--keep and --segments are mutually exclusive");
    }
    const SamplerModel model = SamplerModel::load(opt.model);
    const auto records = load_csv(opt.in, model.vocab());
    if (records.empty()) throw DataError("'" + opt.in + "' holds no sequences");
    if (opt.betas.empty()) throw ConfigError("at least one --beta value is required");

    SamplingConfig base;
    base.iterations = opt.iterations;
    base.corruption = opt.corruption;
    base.decode = parse_decode(opt.decode);
    base.delta_mode = parse_delta_pick(opt.delta_pick);

    // one task per (input, beta); merged index-ordered below
    const int n_tasks = static_cast<int>(records.size() * opt.betas.size());
    std::vector<std::vector<SampleFileRow>> per_task(static_cast<std::size_t>(n_tasks));
    parallel_for(n_tasks, opt.workers, [&](int task) {
        const std::size_t row = static_cast<std::size_t>(task) / opt.betas.size();
        const std::size_t beta_idx = static_cast<std::size_t>(task) % opt.betas.size();
        const AnnotatedSequence& rec = records[row];
        const SegmentSet preserved = preserved_set_for(rec, opt.keep, opt.segments);

        SamplingConfig cfg = base;
        cfg.beta = opt.betas[beta_idx];
        cfg.seed = derive_seed(opt.seed, static_cast<std::uint64_t>(row),
                               static_cast<std::uint64_t>(beta_idx));
        for (const SampleRecord& r : sample_chain(rec.sequence(), preserved, model, cfg)) {
            per_task[static_cast<std::size_t>(task)].push_back(
                {rec.id(), r.iteration, cfg.beta, decode_text(r.output), r.delta_len,
                 r.edit_distance_to_seed, format_segments(r.segments_out)});
        }
    });

    std::vector<SampleFileRow> rows;
    rows.reserve(static_cast<std::size_t>(n_tasks) * static_cast<std::size_t>(opt.iterations));
    for (const auto& task_rows : per_task) {
        rows.insert(rows.end(), task_rows.begin(), task_rows.end());
    }
    write_sample_rows(opt.out, rows);
    std::cout << "wrote " << rows.size() << " samples to " << opt.out << "\n";
}

// --- score -------------------------------------------------------------------

struct ScoreOpts {
    std::string model;
    std::string in;
    std::string out;
    std::string format = "corpus";
    std::string region;
    int workers = 1;
};

void run_score(const ScoreOpts& opt) {
    const ScorerModel model = ScorerModel::load(opt.model);
    std::ofstream out(opt.out);
    if (!out) throw DataError("cannot open '" + opt.out + "' for writing");

    if (opt.format == "corpus") {
        const auto records = load_csv(opt.in, model.vocab());
        std::vector<std::string> lines(records.size());
        parallel_for(static_cast<int>(records.size()), opt.workers, [&](int i) {
            const AnnotatedSequence& rec = records[static_cast<std::size_t>(i)];
            const SequenceScore score = score_sequence(model, rec.sequence());
            std::string line = rec.id() + ',' + format_report_number(score.total);
            if (!opt.region.empty()) {
                line += ',' + format_report_number(
                                  region_log_prob(score, keep_set(rec, {opt.region})));
            }
            lines[static_cast<std::size_t>(i)] = std::move(line);
        });
        out << (opt.region.empty() ? "id,log_prob" : "id,log_prob,region_log_prob") << "\n";
        for (const std::string& line : lines) out << line << "\n";
    } else if (opt.format == "samples") {
        // scores the full sample plus the non-preserved (freshly sampled) part
        const auto rows = read_sample_rows(opt.in);
        std::vector<std::string> lines(rows.size());
        parallel_for(static_cast<int>(rows.size()), opt.workers, [&](int i) {
            const SampleFileRow& row = rows[static_cast<std::size_t>(i)];
            const Sequence seq = encode_text(row.output, model.vocab());
            const SegmentSet preserved = parse_segments(row.segments, seq.length());
            const ComplementSet free = complement(preserved);
            const SequenceScore score = score_sequence(model, seq);
            const double sampled_part =
                region_log_prob(score, SegmentSet(free.ranges, free.seq_len));
            lines[static_cast<std::size_t>(i)] =
                row.seed_id + ',' + std::to_string(row.iteration) + ',' + format_beta(row.beta) +
                ',' + format_report_number(score.total) + ',' +
                format_report_number(sampled_part);
        });
        out << "seed_id,iteration,beta,log_prob,sampled_region_log_prob\n";
        for (const std::string& line : lines) out << line << "\n";
    } else {
        throw ConfigError("unknown --format '" + opt.format + "' (corpus|samples)");
    }
    if (!out) throw DataError("write to '" + opt.out + "' failed");
    std::cout << "wrote scores to " << opt.out << "\n";
}

// --- eval --------------------------------------------------------------------

struct EvalOpts {
    std::string samples;
    std::string test;
    std::string scorer;
    std::string out_dir;
    std::string region = "CDR3";
    int bins = 20;
    int workers = 1;
};

void run_eval(const EvalOpts& opt) {
    const ScorerModel model = ScorerModel::load(opt.scorer);
    const auto rows = read_sample_rows(opt.samples);
    if (rows.empty()) throw DataError("'" + opt.samples + "' holds no sample rows");
    const auto test_records = load_csv(opt.test, model.vocab());
    if (test_records.empty()) throw DataError("'" + opt.test + "' holds no sequences");

    namespace fs = std::filesystem;
    fs::create_directories(opt.out_dir);
    auto out_path = [&](const std::string& name) { return (fs::path(opt.out_dir) / name).string(); };

    // reference length distribution of the evaluated region on the test set
    std::vector<int> test_lengths;
    test_lengths.reserve(test_records.size());
    for (const AnnotatedSequence& rec : test_records) {
        const NamedRegion* region = rec.find_region(opt.region);
        if (region == nullptr) {
            throw DataError("sequence '" + rec.id() + "' has no region named '" + opt.region +
                            "'");
        }
        test_lengths.push_back(region->range.length());
    }
    const IntHistogram test_hist = int_histogram(test_lengths);
    write_int_histogram_csv(out_path("test_length_hist.csv"), "length", test_hist);

    // full-sequence scores for every sample row, merged index-ordered
    std::vector<double> scores(rows.size());
    parallel_for(static_cast<int>(rows.size()), opt.workers, [&](int i) {
        const Sequence seq = encode_text(rows[static_cast<std::size_t>(i)].output, model.vocab());
        scores[static_cast<std::size_t>(i)] = score_sequence(model, seq).total;
    });

    // per-beta groups in first-seen order
    std::vector<double> betas;
    for (const SampleFileRow& row : rows) {
        bool seen = false;
        for (double b : betas) seen = seen || b == row.beta;
        if (!seen) betas.push_back(row.beta);
    }

    std::ofstream summary(out_path("summary.csv"));
    if (!summary) throw DataError("cannot open '" + out_path("summary.csv") + "' for writing");
    summary << "beta,count,mean_length,mean_edit_distance,mean_log_prob,tv_length_vs_test\n";
    for (double beta : betas) {
        std::vector<int> lengths;
        std::vector<int> edits;
        std::vector<double> group_scores;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].beta != beta) continue;
            const Sequence seq = encode_text(rows[i].output, model.vocab());
            const SegmentSet preserved = parse_segments(rows[i].segments, seq.length());
            lengths.push_back(seq.length() - preserved.total_length());
            edits.push_back(rows[i].edit_distance);
            group_scores.push_back(scores[i]);
        }
        const std::string tag = "beta" + format_beta(beta);
        const IntHistogram len_hist = int_histogram(lengths);
        write_int_histogram_csv(out_path("length_hist_" + tag + ".csv"), "length", len_hist);
        write_int_histogram_csv(out_path("edit_hist_" + tag + ".csv"), "edit_distance",
                                int_histogram(edits));
        write_binned_histogram_csv(out_path("score_hist_" + tag + ".csv"),
                                   binned_histogram(group_scores, opt.bins));
        summary << format_beta(beta) << ',' << lengths.size() << ','
                << format_report_number(mean_of_int(lengths)) << ','
                << format_report_number(mean_of_int(edits)) << ','
                << format_report_number(mean_of(group_scores)) << ','
                << format_report_number(total_variation(len_hist, test_hist)) << "\n";
    }
    if (!summary) throw DataError("write to '" + out_path("summary.csv") + "' failed");
    std::cout << "wrote evaluation report to " << opt.out_dir << "\n";
}

// --- check-preservation -------------------------------------------------------

struct CheckOpts {
    std::string samples;
    std::string in;
    std::vector<std::string> keep;
    std::string segments;
};

void run_check_preservation(const CheckOpts& opt) {
    const auto vocab = amino_acid_vocab();
    const auto records = load_csv(opt.in, vocab);
    std::map<std::string, const AnnotatedSequence*> by_id;
    for (const AnnotatedSequence& rec : records) {
        if (!by_id.emplace(rec.id(), &rec).second) {
            throw DataError("'" + opt.in + "' repeats sequence id '" + rec.id() + "'");
        }
    }

    const auto rows = read_sample_rows(opt.samples);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const SampleFileRow& row = rows[i];
        const auto it = by_id.find(row.seed_id);
        if (it == by_id.end()) {
            throw DataError("sample row " + std::to_string(i + 1) + " references unknown id '" +
                            row.seed_id + "'");
        }
        const AnnotatedSequence& seed = *it->second;
        const SegmentSet expected = preserved_set_for(seed, opt.keep, opt.segments);
        const Sequence output = encode_text(row.output, vocab);
        const SegmentSet actual = parse_segments(row.segments, output.length());
        if (!preserved_content_equal(seed.sequence(), expected, output, actual)) {
            throw DataError("sample row " + std::to_string(i + 1) + " (seed '" + row.seed_id +
                            "') does not preserve its segments");
        }
    }
    std::cout << "checked " << rows.size() << " rows: all preserved segments intact\n";
}

void add_config_option(CLI::App* sub) {
    sub->set_config("--config", "",
                    "key = value file with # comments; command-line flags override");
}

void add_corruption_options(CLI::App* sub, CorruptionConfig& cc) {
    sub->add_option("--p-sub", cc.p_sub, "per-position substitution rate")
        ->capture_default_str();
    sub->add_option("--p-ins", cc.p_ins, "per-position insertion rate")->capture_default_str();
    sub->add_option("--p-del", cc.p_del, "per-position deletion rate")->capture_default_str();
}

void add_split_options(CLI::App* sub, SplitOpts& splits) {
    sub->add_option("--train-frac", splits.train, "training fraction")->capture_default_str();
    sub->add_option("--valid-frac", splits.valid, "held-out fraction")->capture_default_str();
    sub->add_option("--test-frac", splits.test, "unused tail fraction")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"segment-preserving sequence sampler"};
    app.require_subcommand(1);

    std::uint64_t default_seed = 0;
    try {
        default_seed = seed_from_env();
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    GenDataOpts gen;
    gen.seed = default_seed;
    CLI::App* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic corpus CSV");
    add_config_option(gen_cmd);
    gen_cmd->add_option("--n", gen.n, "number of unique sequences")->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "generation seed")->capture_default_str();
    gen_cmd->add_option("--out", gen.out, "output CSV path")->required();
    gen_cmd->callback([&] { run_gen_data(gen); });

    TrainSamplerOpts ts;
    ts.train.seed = default_seed;
    CLI::App* ts_cmd = app.add_subcommand("train-sampler", "train the denoising sampler");
    add_config_option(ts_cmd);
    ts_cmd->add_option("--data", ts.data, "corpus CSV")->required();
    ts_cmd->add_option("--out", ts.out, "checkpoint path")->required();
    ts_cmd->add_option("--resume", ts.resume, "checkpoint to continue from");
    ts_cmd->add_option("--steps", ts.train.steps, "optimizer steps")->capture_default_str();
    ts_cmd->add_option("--batch", ts.train.batch_size, "sequences per step")
        ->capture_default_str();
    ts_cmd->add_option("--lr", ts.train.lr, "Adam learning rate")->capture_default_str();
    ts_cmd->add_option("--seed", ts.train.seed, "training seed")->capture_default_str();
    ts_cmd->add_option("--eval-every", ts.train.eval_every, "steps between evaluations")
        ->capture_default_str();
    ts_cmd->add_option("--eval-n", ts.train.eval_sequences, "held-out sequences per evaluation")
        ->capture_default_str();
    ts_cmd->add_option("--d-model", ts.model.d_model, "model width")->capture_default_str();
    ts_cmd->add_option("--heads", ts.model.n_heads, "attention heads")->capture_default_str();
    ts_cmd->add_option("--d-ff", ts.model.d_ff, "feed-forward width")->capture_default_str();
    ts_cmd->add_option("--enc-layers", ts.model.enc_layers, "encoder layers")
        ->capture_default_str();
    ts_cmd->add_option("--dec-layers", ts.model.dec_layers, "decoder layers")
        ->capture_default_str();
    ts_cmd->add_option("--delta-max", ts.model.delta_max, "largest trainable length change")
        ->capture_default_str();
    ts_cmd->add_option("--lambda", ts.model.lambda_len, "length-loss weight")
        ->capture_default_str();
    add_corruption_options(ts_cmd, ts.train.corruption);
    add_split_options(ts_cmd, ts.splits);
    ts_cmd->callback([&] { run_train_sampler(ts); });

    TrainScorerOpts tr;
    tr.train.seed = default_seed;
    CLI::App* tr_cmd = app.add_subcommand("train-scorer", "train the likelihood scorer");
    add_config_option(tr_cmd);
    tr_cmd->add_option("--data", tr.data, "corpus CSV")->required();
    tr_cmd->add_option("--out", tr.out, "checkpoint path")->required();
    tr_cmd->add_option("--resume", tr.resume, "checkpoint to continue from");
    tr_cmd->add_option("--steps", tr.train.steps, "optimizer steps")->capture_default_str();
    tr_cmd->add_option("--batch", tr.train.batch_size, "sequences per step")
        ->capture_default_str();
    tr_cmd->add_option("--lr", tr.train.lr, "Adam learning rate")->capture_default_str();
    tr_cmd->add_option("--seed", tr.train.seed, "training seed")->capture_default_str();
    tr_cmd->add_option("--eval-every", tr.train.eval_every, "steps between evaluations")
        ->capture_default_str();
    tr_cmd->add_option("--eval-n", tr.train.eval_sequences, "held-out sequences per evaluation")
        ->capture_default_str();
    tr_cmd->add_option("--d-model", tr.model.d_model, "model width")->capture_default_str();
    tr_cmd->add_option("--heads", tr.model.n_heads, "attention heads")->capture_default_str();
    tr_cmd->add_option("--d-ff", tr.model.d_ff, "feed-forward width")->capture_default_str();
    tr_cmd->add_option("--layers", tr.model.n_layers, "decoder layers")->capture_default_str();
    add_split_options(tr_cmd, tr.splits);
    tr_cmd->callback([&] { run_train_scorer(tr); });

    SampleOpts sa;
    sa.seed = default_seed;
    CLI::App* sa_cmd = app.add_subcommand("sample", "segment-preserving sampling");
    add_config_option(sa_cmd);
    sa_cmd->add_option("--model", sa.model, "sampler checkpoint")->required();
    sa_cmd->add_option("--in", sa.in, "input corpus CSV")->required();
    sa_cmd->add_option("--out", sa.out, "output samples TSV")->required();
    sa_cmd->add_option("--keep", sa.keep, "region names to preserve (comma-separated)")
        ->delimiter(',');
    sa_cmd->add_option("--segments", sa.segments,
                       "explicit preserved segments 'a-b,c-d' applied to every input");
    sa_cmd->add_option("--beta", sa.betas, "carry-over strengths (comma-separated)")
        ->delimiter(',')
        ->capture_default_str();
    sa_cmd->add_option("--iters", sa.iterations, "chain iterations per input")
        ->capture_default_str();
    sa_cmd->add_option("--decode", sa.decode, "output decoding: posterior|viterbi")
        ->capture_default_str();
    sa_cmd->add_option("--delta-pick", sa.delta_pick, "length-change pick: sample|argmax")
        ->capture_default_str();
    add_corruption_options(sa_cmd, sa.corruption);
    sa_cmd->add_option("--seed", sa.seed, "sampling seed")->capture_default_str();
    sa_cmd->add_option("--workers", sa.workers, "parallel workers over inputs")
        ->capture_default_str();
    sa_cmd->callback([&] { run_sample(sa); });

    ScoreOpts sc;
    CLI::App* sc_cmd = app.add_subcommand("score", "log-probabilities under the scorer");
    add_config_option(sc_cmd);
    sc_cmd->add_option("--model", sc.model, "scorer checkpoint")->required();
    sc_cmd->add_option("--in", sc.in, "input file")->required();
    sc_cmd->add_option("--out", sc.out, "output CSV")->required();
    sc_cmd->add_option("--format", sc.format, "input kind: corpus|samples")
        ->capture_default_str();
    sc_cmd->add_option("--region", sc.region, "also score this region (corpus format)");
    sc_cmd->add_option("--workers", sc.workers, "parallel workers over inputs")
        ->capture_default_str();
    sc_cmd->callback([&] { run_score(sc); });

    EvalOpts ev;
    CLI::App* ev_cmd = app.add_subcommand("eval", "histograms and summary for a sample run");
    add_config_option(ev_cmd);
    ev_cmd->add_option("--samples", ev.samples, "samples TSV")->required();
    ev_cmd->add_option("--test", ev.test, "test corpus CSV")->required();
    ev_cmd->add_option("--scorer", ev.scorer, "scorer checkpoint")->required();
    ev_cmd->add_option("--out-dir", ev.out_dir, "report directory")->required();
    ev_cmd->add_option("--region", ev.region, "test region compared against sampled lengths")
        ->capture_default_str();
    ev_cmd->add_option("--bins", ev.bins, "bins for the score histogram")->capture_default_str();
    ev_cmd->add_option("--workers", ev.workers, "parallel workers over samples")
        ->capture_default_str();
    ev_cmd->callback([&] { run_eval(ev); });

    CheckOpts ch;
    CLI::App* ch_cmd = app.add_subcommand("check-preservation",
                                          "verify samples against their seed corpus");
    add_config_option(ch_cmd);
    ch_cmd->add_option("--samples", ch.samples, "samples TSV")->required();
    ch_cmd->add_option("--in", ch.in, "seed corpus CSV")->required();
    ch_cmd->add_option("--keep", ch.keep, "region names that were preserved")->delimiter(',');
    ch_cmd->add_option("--segments", ch.segments, "explicit preserved segments 'a-b,c-d'");
    ch_cmd->callback([&] { run_check_preservation(ch); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
