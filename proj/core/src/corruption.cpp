#include "segdms/corruption.hpp"

#include <string>

#include "segdms/errors.hpp"
#include "segdms/rng.hpp"

namespace segdms {

void validate(const CorruptionConfig& cfg) {
    auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!in_unit(cfg.p_sub) || !in_unit(cfg.p_ins) || !in_unit(cfg.p_del)) {
        throw ConfigError("corruption rates must lie in [0,1]");
    }
    if (cfg.p_sub + cfg.p_del > 1.0) {
        throw ConfigError("p_sub + p_del = " + std::to_string(cfg.p_sub + cfg.p_del) +
                          " exceeds 1; substitution and deletion are exclusive per position");
    }
}

int CorruptionTrace::insertions() const {
    int n = 0;
    for (const EditRecord& e : edits) n += (e.kind == EditKind::kInsertAfter);
    return n;
}

int CorruptionTrace::deletions() const {
    int n = 0;
    for (const EditRecord& e : edits) n += (e.kind == EditKind::kDelete);
    return n;
}

namespace {

// uniform over emittable tokens, skipping `exclude` when >= 0
int draw_token(const Vocab& v, int exclude, Rng& rng) {
    if (exclude < 0) return static_cast<int>(rng.next_below(static_cast<std::uint64_t>(v.emit_size())));
    int t = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(v.emit_size() - 1)));
    if (t >= exclude) ++t;
    return t;
}

}  // namespace

CorruptionResult corrupt(const Sequence& x, const SegmentSet& s, const CorruptionConfig& cfg) {
    validate(cfg);
    if (s.seq_len() != x.length()) {
        throw DataError("preserved set covers length " + std::to_string(s.seq_len()) +
                        " but the sequence has length " + std::to_string(x.length()));
    }
    const Vocab& v = *x.vocab();
    if (v.emit_size() < 2 && cfg.p_sub > 0.0) {
        throw ConfigError("substitution needs at least two emittable tokens");
    }

    Rng rng(cfg.rng_seed);
    const int len = x.length();

    // A gap pinched between two preserved segments must keep at least one
    // token, or the re-indexed segments would fuse; likewise the whole
    // sequence when nothing is preserved, or the output would be empty.
    // Gaps at either end may vanish freely.
    std::vector<int> gap_end(static_cast<std::size_t>(len), -1);
    std::vector<bool> gap_must_keep(static_cast<std::size_t>(len), false);
    for (const Range& g : complement(s).ranges) {
        const bool interior = g.start > 0 && g.end < len - 1;
        for (int t = g.start; t <= g.end; ++t) {
            gap_end[static_cast<std::size_t>(t)] = g.end;
            gap_must_keep[static_cast<std::size_t>(t)] = interior || s.ranges().empty();
        }
    }

    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(len) + 4);
    CorruptionTrace trace;
    trace.old_to_new.assign(static_cast<std::size_t>(len), -1);

    int gap_emitted = 0;  // tokens the current gap has contributed so far
    for (int t = 0; t < len; ++t) {
        if (s.contains(t)) {
            trace.old_to_new[static_cast<std::size_t>(t)] = static_cast<int>(out.size());
            out.push_back(x.at(t));
            gap_emitted = 0;
            continue;
        }
        const bool last_chance = gap_must_keep[static_cast<std::size_t>(t)] &&
                                 t == gap_end[static_cast<std::size_t>(t)] && gap_emitted == 0;
        const double u = rng.next_real();
        if (u < cfg.p_sub) {
            const int tok = draw_token(v, x.at(t), rng);
            trace.edits.push_back({t, EditKind::kSubstitute, tok});
            trace.old_to_new[static_cast<std::size_t>(t)] = static_cast<int>(out.size());
            out.push_back(tok);
            ++gap_emitted;
        } else if (u < cfg.p_sub + cfg.p_del && !last_chance) {
            trace.edits.push_back({t, EditKind::kDelete, -1});
        } else {
            trace.old_to_new[static_cast<std::size_t>(t)] = static_cast<int>(out.size());
            out.push_back(x.at(t));
            ++gap_emitted;
        }
        if (rng.next_real() < cfg.p_ins) {
            const int tok = draw_token(v, -1, rng);
            trace.edits.push_back({t, EditKind::kInsertAfter, tok});
            out.push_back(tok);
            ++gap_emitted;
        }
    }
    trace.new_len = static_cast<int>(out.size());

    std::vector<Range> shifted;
    shifted.reserve(s.ranges().size());
    for (const Range& r : s.ranges()) {
        shifted.push_back({trace.old_to_new[static_cast<std::size_t>(r.start)],
                           trace.old_to_new[static_cast<std::size_t>(r.end)]});
    }
    SegmentSet s_new(std::move(shifted), trace.new_len);
    return {Sequence(std::move(out), x.vocab()), std::move(s_new), std::move(trace)};
}

UnrestrictedCorruptionResult corrupt_unrestricted(const Sequence& x, const CorruptionConfig& cfg) {
    CorruptionResult r = corrupt(x, SegmentSet({}, x.length()), cfg);
    return {std::move(r.corrupted), std::move(r.trace)};
}

std::vector<int> replay_trace(const Sequence& x, const CorruptionTrace& trace) {
    std::vector<int> out;
    std::size_t e = 0;
    for (int t = 0; t < x.length(); ++t) {
        bool deleted = false;
        int substitute = -1;
        int insert = -1;
        while (e < trace.edits.size() && trace.edits[e].pos == t) {
            switch (trace.edits[e].kind) {
                case EditKind::kSubstitute: substitute = trace.edits[e].payload; break;
                case EditKind::kDelete: deleted = true; break;
                case EditKind::kInsertAfter: insert = trace.edits[e].payload; break;
            }
            ++e;
        }
        if (!deleted) out.push_back(substitute >= 0 ? substitute : x.at(t));
        if (insert >= 0) out.push_back(insert);
    }
    if (e != trace.edits.size()) throw DataError("trace has edits past the end of the sequence");
    return out;
}

}  // namespace segdms
