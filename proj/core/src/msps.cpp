#include "segdms/msps.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "segdms/crf.hpp"
#include "segdms/edit_distance.hpp"
#include "segdms/errors.hpp"
#include "segdms/graph.hpp"

namespace segdms {

void validate(const SamplingConfig& cfg) {
    if (cfg.beta < 0.0 || cfg.beta > 1.0) {
        throw ConfigError("carry-over strength must lie in [0,1], got " +
                          std::to_string(cfg.beta));
    }
    if (cfg.iterations < 1) throw ConfigError("sampling needs at least one iteration");
    validate(cfg.corruption);
}

Matrix<float> carry_over(const Matrix<float>& z, const Matrix<float>& h, const IndexMap& map,
                         double beta) {
    if (z.rows() != map.new_len() || h.rows() != map.old_len() || z.cols() != h.cols()) {
        throw NumericError("carry-over shapes disagree with the index map: z " +
                           std::to_string(z.rows()) + " rows vs map " +
                           std::to_string(map.new_len()) + ", h " + std::to_string(h.rows()) +
                           " rows vs map " + std::to_string(map.old_len()));
    }
    Matrix<float> out = z;
    const float b = static_cast<float>(beta);
    for (int t = 0; t < out.rows(); ++t) {
        const int src = map.inverse(t);
        if (src < 0) continue;
        for (int c = 0; c < out.cols(); ++c) {
            out(t, c) = (1.0f - b) * z(t, c) + b * h(src, c);
        }
    }
    return out;
}

Matrix<float> mask_logits(const Matrix<float>& emissions, const SegmentSet& preserved_out,
                          const std::vector<int>& corrupted_ids, const IndexMap& map) {
    if (emissions.rows() != preserved_out.seq_len() || emissions.rows() != map.new_len()) {
        throw NumericError("logit masking got " + std::to_string(emissions.rows()) +
                           " emission rows for a preserved set over " +
                           std::to_string(preserved_out.seq_len()) + " positions");
    }
    Matrix<float> out = emissions;
    for (const Range& r : preserved_out.ranges()) {
        for (int t = r.start; t <= r.end; ++t) {
            const int src = map.inverse(t);
            if (src < 0 || src >= static_cast<int>(corrupted_ids.size())) {
                throw NumericError("preserved output position " + std::to_string(t) +
                                   " has no source position");
            }
            const int keep = corrupted_ids[static_cast<std::size_t>(src)];
            for (int v = 0; v < out.cols(); ++v) {
                out(t, v) += (v == keep) ? kLogitMask : -kLogitMask;
            }
        }
    }
    return out;
}

SampleRecord sample_step(const Sequence& x, const SegmentSet& s, const SamplerModel& model,
                         const SamplingConfig& cfg, std::uint64_t step_seed,
                         const Sequence* chain_seed) {
    validate(cfg);
    if (s.seq_len() != x.length()) {
        throw DataError("preserved set covers length " + std::to_string(s.seq_len()) +
                        " but the sequence has length " + std::to_string(x.length()));
    }
    const SamplerConfig& mc = model.config();
    ParamStore<float>& store = const_cast<SamplerModel&>(model).params();

    // corruption outside the preserved set
    CorruptionConfig cc = cfg.corruption;
    cc.rng_seed = derive_seed(step_seed, 0);
    CorruptionResult cr = corrupt(x, s, cc);
    const Sequence& xt = cr.corrupted;
    const SegmentSet& st = cr.segments;

    // encode, predict the length change
    Tape<float> tape(&store);
    Var h_var = sampler_encode(tape, mc, xt.ids());
    Rng delta_rng(derive_seed(step_seed, 1));
    // copies: node values live in the tape's op record, which reallocates as
    // later ops are appended
    const Matrix<float> len_logits = tape.value(sampler_length_logits(tape, mc, h_var));
    const Matrix<float> h = tape.value(h_var);
    int delta = class_to_length_change(pick_class(len_logits, cfg.delta_mode, &delta_rng),
                                       mc.delta_max);

    // clamp: the classifier bounds |delta|; the gaps bound the shrink
    if (complement(st).ranges.empty()) {
        delta = 0;
    } else if (delta < 0) {
        delta = std::max(delta, -max_absorbable_shrink(st));
    }

    // re-index the preserved set into output coordinates
    const std::vector<int> deltas = apportion_length_change(st, delta);
    auto [map, s_out] = build_index_map(st, deltas);

    // convert to the new length, then carry the preserved hidden rows over
    const float sigma = std::exp(store.value("convert.u")(0, 0));
    Matrix<float> z = convert_hidden(h, xt.length() + delta, sigma);
    z = carry_over(z, h, map, cfg.beta);

    // decode and constrain the output head
    Tape<float> dec_tape(&store);
    const Matrix<float> emissions =
        dec_tape.value(sampler_decode(dec_tape, mc, dec_tape.constant(std::move(z))));
    const Matrix<float> masked = mask_logits(emissions, s_out, xt.ids(), map);

    Rng decode_rng(derive_seed(step_seed, 2));
    std::vector<int> labels =
        cfg.decode == DecodeMode::kViterbi
            ? crf_viterbi(masked, store.value("crf.trans"), store.value("crf.start"),
                          store.value("crf.end"))
            : crf_posterior_sample(masked, store.value("crf.trans"), store.value("crf.start"),
                                   store.value("crf.end"), decode_rng);

    // unconditional preservation: substitute the preserved tokens verbatim
    for (const Range& r : s_out.ranges()) {
        for (int t = r.start; t <= r.end; ++t) {
            labels[static_cast<std::size_t>(t)] = xt.at(map.inverse(t));
        }
    }

    SampleRecord rec{.iteration = 1,
                     .input = x,
                     .corrupted = xt,
                     .delta_len = delta,
                     .output = Sequence(std::move(labels), x.vocab()),
                     .segments_out = s_out,
                     .edit_distance_to_seed = 0};
    rec.edit_distance_to_seed = edit_distance(chain_seed ? *chain_seed : x, rec.output);
    return rec;
}

std::vector<SampleRecord> sample_chain(const Sequence& x, const SegmentSet& s,
                                       const SamplerModel& model, const SamplingConfig& cfg) {
    validate(cfg);
    std::vector<SampleRecord> records;
    Sequence current = x;
    SegmentSet current_s = s;
    for (int it = 0; it < cfg.iterations; ++it) {
        SampleRecord rec = sample_step(current, current_s, model, cfg,
                                       derive_seed(cfg.seed, static_cast<std::uint64_t>(it)), &x);
        rec.iteration = it + 1;
        current = rec.output;
        current_s = rec.segments_out;
        records.push_back(std::move(rec));
    }
    return records;
}

bool preserved_content_equal(const Sequence& x, const SegmentSet& sx, const Sequence& y,
                             const SegmentSet& sy) {
    if (sx.seq_len() != x.length() || sy.seq_len() != y.length()) {
        throw DataError("preserved sets do not match their sequences");
    }
    if (sx.count() != sy.count()) return false;
    for (int k = 0; k < sx.count(); ++k) {
        const Range& a = sx.ranges()[static_cast<std::size_t>(k)];
        const Range& b = sy.ranges()[static_cast<std::size_t>(k)];
        if (a.length() != b.length()) return false;
        for (int i = 0; i < a.length(); ++i) {
            if (x.at(a.start + i) != y.at(b.start + i)) return false;
        }
    }
    return true;
}

void write_sample_rows(const std::string& path, const std::vector<SampleFileRow>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << "seed_id\titeration\tbeta\toutput\tdelta_len\tedit_distance\tsegments\n";
    for (const SampleFileRow& r : rows) {
        out << r.seed_id << '\t' << r.iteration << '\t' << r.beta << '\t' << r.output << '\t'
            << r.delta_len << '\t' << r.edit_distance << '\t' << r.segments << '\n';
    }
    if (!out) throw DataError("write to '" + path + "' failed");
}

std::vector<SampleFileRow> read_sample_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open sample file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("sample file '" + path + "' is empty");
    std::vector<SampleFileRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, '\t')) fields.push_back(field);
        if (fields.size() < 6 || fields.size() > 7) {
            throw DataError(path + ":" + std::to_string(line_no) + ": expected 7 fields, got " +
                            std::to_string(fields.size()));
        }
        SampleFileRow r;
        r.seed_id = fields[0];
        try {
            r.iteration = std::stoi(fields[1]);
            r.beta = std::stod(fields[2]);
            r.output = fields[3];
            r.delta_len = std::stoi(fields[4]);
            r.edit_distance = std::stoi(fields[5]);
        } catch (const std::exception&) {
            throw DataError(path + ":" + std::to_string(line_no) + ": malformed numeric field");
        }
        r.segments = fields.size() == 7 ? fields[6] : "";
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace segdms
