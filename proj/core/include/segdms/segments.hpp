#pragma once

#include <string>
#include <utility>
#include <vector>

namespace segdms {

/// Inclusive 0-based index range.
struct Range {
    int start = 0;
    int end = 0;  // inclusive

    int length() const { return end - start + 1; }
    bool operator==(const Range&) const = default;
};

/// Ordered, non-overlapping preserved segments of a host sequence.
///
/// Segments are separated by at least one free position so each gap between
/// them is non-empty. Unlike the strictest reading, a segment may start at
/// position 0 or end at the last position: the CDR3-only protocol preserves
/// framework regions that span both sequence ends, and the algebra below
/// handles the missing edge gaps by simply not emitting them.
class SegmentSet {
public:
    SegmentSet(std::vector<Range> ranges, int seq_len);

    const std::vector<Range>& ranges() const { return ranges_; }
    int seq_len() const { return seq_len_; }
    bool empty() const { return ranges_.empty(); }
    int count() const { return static_cast<int>(ranges_.size()); }
    int total_length() const;
    bool contains(int pos) const;

    bool operator==(const SegmentSet&) const = default;

private:
    std::vector<Range> ranges_;
    int seq_len_ = 0;
};

/// All positions outside a SegmentSet, as ordered non-empty ranges.
struct ComplementSet {
    std::vector<Range> ranges;
    int seq_len = 0;

    int total_length() const;
};

/// Position correspondence between a sequence and its length-converted
/// counterpart. Defined on preserved positions (forward) and their images
/// (inverse); -1 elsewhere.
class IndexMap {
public:
    IndexMap(std::vector<int> forward, std::vector<int> inverse);

    int old_len() const { return static_cast<int>(forward_.size()); }
    int new_len() const { return static_cast<int>(inverse_.size()); }

    // new index of a preserved old position, -1 if not preserved
    int forward(int old_pos) const { return forward_[static_cast<std::size_t>(old_pos)]; }
    // old index of a preserved new position, -1 if not preserved
    int inverse(int new_pos) const { return inverse_[static_cast<std::size_t>(new_pos)]; }

private:
    std::vector<int> forward_;
    std::vector<int> inverse_;
};

/// Gaps between preserved segments: ((0, i1-1), (j1+1, i2-1), ..., (jK+1, L-1)),
/// with empty edge gaps omitted when a segment touches a sequence end.
ComplementSet complement(const SegmentSet& s);

/// Splits a total length change across the complement ranges proportionally
/// to their lengths (largest-remainder rounding, ties to the lower index).
/// Shrinks never take a range below length 1; an unabsorbable shrink is
/// rejected. Deltas always sum to exactly `delta_len`.
std::vector<int> apportion_length_change(const SegmentSet& s, int delta_len);

/// Largest shrink the complement of `s` can absorb, as a non-negative count.
int max_absorbable_shrink(const SegmentSet& s);

/// Applies per-gap deltas and returns the index map plus the re-indexed
/// preserved set o(s). Preserved segment lengths never change.
std::pair<IndexMap, SegmentSet> build_index_map(const SegmentSet& s,
                                                const std::vector<int>& deltas);

/// Parses "start-end[,start-end...]" (0-based inclusive). Empty string means
/// an empty preserved set.
SegmentSet parse_segments(const std::string& spec, int seq_len);

std::string format_segments(const SegmentSet& s);

}  // namespace segdms
