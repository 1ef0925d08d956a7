#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "segdms/corruption.hpp"
#include "segdms/length_conversion.hpp"
#include "segdms/matrix.hpp"
#include "segdms/sampler_model.hpp"
#include "segdms/segments.hpp"
#include "segdms/vocab.hpp"

namespace segdms {

// Segment-preserving sampling: corrupt outside the preserved set, predict a
// length change, apportion it across the gaps, convert, carry the original
// hidden vectors back over preserved positions, mask the output logits so
// preserved tokens win, decode, and hard-substitute the preserved tokens.

enum class DecodeMode { kPosterior, kViterbi };

struct SamplingConfig {
    double beta = 0.5;            // carry-over strength
    int iterations = 1;
    CorruptionConfig corruption;  // rates only; streams derive from `seed`
    PickMode delta_mode = PickMode::kSample;
    DecodeMode decode = DecodeMode::kPosterior;
    std::uint64_t seed = 0;
};

void validate(const SamplingConfig& cfg);

// z[t] <- (1-beta)·z[t] + beta·h[map.inverse(t)] on preserved output rows
Matrix<float> carry_over(const Matrix<float>& z, const Matrix<float>& h, const IndexMap& map,
                         double beta);

// Raises the preserved token's score by the mask constant and lowers every
// other score by it, per preserved output position; other rows untouched.
Matrix<float> mask_logits(const Matrix<float>& emissions, const SegmentSet& preserved_out,
                          const std::vector<int>& corrupted_ids, const IndexMap& map);

constexpr float kLogitMask = 1e4f;

struct SampleRecord {
    int iteration = 0;           // 1-based
    Sequence input;              // sequence entering this iteration
    Sequence corrupted;          // after segment-respecting corruption
    int delta_len = 0;           // applied (clamped) length change
    Sequence output;
    SegmentSet segments_out;     // preserved set in output coordinates
    int edit_distance_to_seed = 0;
};

// One pipeline pass. `chain_seed` (when non-null) is the original chain seed
// the edit distance is measured against; defaults to `x`.
SampleRecord sample_step(const Sequence& x, const SegmentSet& s, const SamplerModel& model,
                         const SamplingConfig& cfg, std::uint64_t step_seed,
                         const Sequence* chain_seed = nullptr);

// `iterations` passes, each corrupting the latest sample and threading the
// re-indexed preserved set forward.
std::vector<SampleRecord> sample_chain(const Sequence& x, const SegmentSet& s,
                                       const SamplerModel& model, const SamplingConfig& cfg);

// exact equality of the preserved content (decoded text) of two sequences
bool preserved_content_equal(const Sequence& x, const SegmentSet& sx, const Sequence& y,
                             const SegmentSet& sy);

// --- sample files: one tab-separated record per line ------------------------

struct SampleFileRow {
    std::string seed_id;
    int iteration = 0;
    double beta = 0;
    std::string output;
    int delta_len = 0;
    int edit_distance = 0;
    std::string segments;  // preserved set in output coordinates, "a-b,c-d"

    bool operator==(const SampleFileRow&) const = default;
};

void write_sample_rows(const std::string& path, const std::vector<SampleFileRow>& rows);
std::vector<SampleFileRow> read_sample_rows(const std::string& path);

}  // namespace segdms
