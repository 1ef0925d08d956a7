#pragma once

#include <cstdint>
#include <vector>

#include "segdms/segments.hpp"
#include "segdms/vocab.hpp"

namespace segdms {

// Random substitution / insertion / deletion noise. Each non-preserved
// position receives one draw deciding substitute-vs-delete-vs-keep, plus an
// independent draw for an insertion after it. Preserved positions are copied
// verbatim and never host an insertion. A gap between two preserved segments
// always retains at least one token (deleting it entirely would fuse the
// re-indexed segments), as does the sequence itself when nothing is preserved;
// gaps at either end may vanish.
struct CorruptionConfig {
    double p_sub = 0.1;
    double p_ins = 0.05;
    double p_del = 0.05;
    std::uint64_t rng_seed = 0;
};

// Throws ConfigError unless all rates are in [0,1] and p_sub + p_del <= 1.
void validate(const CorruptionConfig& cfg);

enum class EditKind { kSubstitute, kDelete, kInsertAfter };

struct EditRecord {
    int pos;        // position in the original sequence
    EditKind kind;
    int payload;    // token id for substitute/insert, -1 for delete
};

struct CorruptionTrace {
    std::vector<EditRecord> edits;  // ordered by original position
    std::vector<int> old_to_new;    // -1 where the position was deleted
    int new_len = 0;

    int insertions() const;
    int deletions() const;
};

struct CorruptionResult {
    Sequence corrupted;
    SegmentSet segments;  // the preserved set re-indexed into the corrupted sequence
    CorruptionTrace trace;
};

CorruptionResult corrupt(const Sequence& x, const SegmentSet& s, const CorruptionConfig& cfg);

struct UnrestrictedCorruptionResult {
    Sequence corrupted;
    CorruptionTrace trace;
};

UnrestrictedCorruptionResult corrupt_unrestricted(const Sequence& x, const CorruptionConfig& cfg);

// Re-applies a recorded edit script; used to audit that a trace is sound.
std::vector<int> replay_trace(const Sequence& x, const CorruptionTrace& trace);

}  // namespace segdms
