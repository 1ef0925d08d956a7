#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "segdms/segments.hpp"
#include "segdms/vocab.hpp"

namespace segdms {

struct NamedRegion {
    std::string name;
    Range range;

    bool operator==(const NamedRegion&) const = default;
};

// A sequence with ordered named regions that tile it exactly (no gaps, no
// overlap). Variable regions (names starting with "CDR") never touch either
// sequence end, so a preserved set built from the other regions is always
// well-formed.
class AnnotatedSequence {
  public:
    AnnotatedSequence(std::string id, Sequence seq, std::vector<NamedRegion> regions);

    const std::string& id() const { return id_; }
    const Sequence& sequence() const { return seq_; }
    const std::vector<NamedRegion>& regions() const { return regions_; }

    // nullptr when no region carries the name
    const NamedRegion* find_region(const std::string& name) const;

    bool operator==(const AnnotatedSequence&) const = default;

  private:
    std::string id_;
    Sequence seq_;
    std::vector<NamedRegion> regions_;
};

// Preserved set covering every region except `region_name` (adjacent ranges
// merged). Throws DataError when the region does not exist.
SegmentSet preserve_all_but(const AnnotatedSequence& rec, const std::string& region_name);

// --- synthetic family --------------------------------------------------------

// One region of the synthetic family: either a fixed framework template with
// per-position substitution noise, or a variable region whose length is
// uniform on [min_len, max_len] and whose tokens draw from position-keyed
// weight rows — `head` rows count from the region start, `tail` rows from the
// region end (tail wins where they overlap), `body` covers anything else.
struct RegionSpec {
    std::string name;
    bool variable = false;
    std::string tmpl;    // framework only
    double noise = 0.0;  // framework only
    int min_len = 0, max_len = 0;
    std::vector<std::vector<double>> head;
    std::vector<std::vector<double>> tail;
    std::vector<double> body;
};

struct SyntheticFamilySpec {
    std::shared_ptr<const Vocab> vocab;
    std::vector<RegionSpec> regions;
};

void validate(const SyntheticFamilySpec& spec);

// Antibody-like default: four fixed frameworks (25/14/32/11 tokens, 1% noise)
// around CDR1 (8), CDR2 (7), and a CDR3 of uniform length 8..18 whose prefix
// follows a position ladder and whose last four positions follow an end motif.
SyntheticFamilySpec default_antibody_family();

// n unique annotated sequences, reproducible per seed; ids are sequential.
std::vector<AnnotatedSequence> generate_corpus(const SyntheticFamilySpec& spec, int n,
                                               std::uint64_t seed);

// --- CSV ingestion -----------------------------------------------------------

// Format: header `id,sequence,regions`; the regions field holds
// semicolon-separated `NAME:start-end` entries (0-based inclusive).
void save_csv(const std::vector<AnnotatedSequence>& records, const std::string& path);
std::vector<AnnotatedSequence> load_csv(const std::string& path,
                                        std::shared_ptr<const Vocab> vocab);

// --- splitting ---------------------------------------------------------------

struct SplitResult {
    std::vector<AnnotatedSequence> train;
    std::vector<AnnotatedSequence> valid;
    std::vector<AnnotatedSequence> test;
};

// Disjoint, exhaustive, seed-deterministic split; fractions must be
// non-negative and sum to 1.
SplitResult split(const std::vector<AnnotatedSequence>& records, double train_frac,
                  double valid_frac, double test_frac, std::uint64_t seed);

std::vector<Sequence> sequences_of(const std::vector<AnnotatedSequence>& records);

}  // namespace segdms
