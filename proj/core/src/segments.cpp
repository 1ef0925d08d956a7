#include "segdms/segments.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>

#include "segdms/errors.hpp"

namespace segdms {

SegmentSet::SegmentSet(std::vector<Range> ranges, int seq_len)
    : ranges_(std::move(ranges)), seq_len_(seq_len) {
    if (seq_len_ < 1) throw DataError("segment set requires seq_len >= 1");
    for (std::size_t k = 0; k < ranges_.size(); ++k) {
        const Range& r = ranges_[k];
        if (r.start < 0 || r.end < r.start || r.end >= seq_len_) {
            throw DataError("segment " + std::to_string(r.start) + "-" + std::to_string(r.end) +
                            " invalid for sequence length " + std::to_string(seq_len_));
        }
        if (k > 0 && r.start <= ranges_[k - 1].end + 1) {
            throw DataError("segments " + std::to_string(ranges_[k - 1].start) + "-" +
                            std::to_string(ranges_[k - 1].end) + " and " +
                            std::to_string(r.start) + "-" + std::to_string(r.end) +
                            " must be separated by at least one free position");
        }
    }
}

int SegmentSet::total_length() const {
    int n = 0;
    for (const Range& r : ranges_) n += r.length();
    return n;
}

bool SegmentSet::contains(int pos) const {
    for (const Range& r : ranges_) {
        if (pos >= r.start && pos <= r.end) return true;
    }
    return false;
}

int ComplementSet::total_length() const {
    int n = 0;
    for (const Range& r : ranges) n += r.length();
    return n;
}

ComplementSet complement(const SegmentSet& s) {
    ComplementSet out;
    out.seq_len = s.seq_len();
    int cursor = 0;
    for (const Range& r : s.ranges()) {
        if (r.start > cursor) out.ranges.push_back({cursor, r.start - 1});
        cursor = r.end + 1;
    }
    if (cursor <= s.seq_len() - 1) out.ranges.push_back({cursor, s.seq_len() - 1});
    return out;
}

int max_absorbable_shrink(const SegmentSet& s) {
    int cap = 0;
    for (const Range& r : complement(s).ranges) cap += r.length() - 1;
    return cap;
}

namespace {

// Exact largest-remainder split of `amount` proportional to `lengths`:
// floor(len_k * amount / total) each, leftover units to the largest
// remainders (ties to the lower index). Integer arithmetic throughout.
std::vector<int> largest_remainder(const std::vector<std::int64_t>& lengths, std::int64_t amount) {
    const std::int64_t total = std::accumulate(lengths.begin(), lengths.end(), std::int64_t{0});
    std::vector<int> units(lengths.size(), 0);
    std::vector<std::int64_t> rem(lengths.size(), 0);
    std::int64_t assigned = 0;
    for (std::size_t k = 0; k < lengths.size(); ++k) {
        const std::int64_t num = lengths[k] * amount;
        units[k] = static_cast<int>(num / total);
        rem[k] = num % total;
        assigned += units[k];
    }
    std::vector<std::size_t> order(lengths.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
    for (std::int64_t u = 0; u < amount - assigned; ++u) {
        units[order[static_cast<std::size_t>(u)]] += 1;
    }
    return units;
}

}  // namespace

std::vector<int> apportion_length_change(const SegmentSet& s, int delta_len) {
    const ComplementSet comp = complement(s);
    const std::size_t n = comp.ranges.size();
    if (n == 0) {
        if (delta_len != 0) {
            throw DataError("no non-preserved segment can absorb a length change of " +
                            std::to_string(delta_len));
        }
        return {};
    }
    std::vector<int> deltas(n, 0);
    if (delta_len == 0) return deltas;

    if (delta_len > 0) {
        std::vector<std::int64_t> lengths(n);
        for (std::size_t k = 0; k < n; ++k) lengths[k] = comp.ranges[k].length();
        std::vector<int> units = largest_remainder(lengths, delta_len);
        for (std::size_t k = 0; k < n; ++k) deltas[k] = units[k];
        return deltas;
    }

    // shrink: every range keeps at least one position
    int magnitude = -delta_len;
    if (magnitude > max_absorbable_shrink(s)) {
        std::size_t tightest = 0;
        for (std::size_t k = 1; k < n; ++k) {
            if (comp.ranges[k].length() < comp.ranges[tightest].length()) tightest = k;
        }
        throw DataError("shrink of " + std::to_string(magnitude) + " exceeds absorbable capacity " +
                        std::to_string(max_absorbable_shrink(s)) + "; binding range " +
                        std::to_string(comp.ranges[tightest].start) + "-" +
                        std::to_string(comp.ranges[tightest].end));
    }

    // proportional split with per-range caps; ranges that hit their cap are
    // fixed there and the rest is re-apportioned among the others
    std::vector<bool> capped(n, false);
    while (magnitude > 0) {
        std::vector<std::int64_t> lengths;
        std::vector<std::size_t> active;
        for (std::size_t k = 0; k < n; ++k) {
            if (!capped[k]) {
                active.push_back(k);
                lengths.push_back(comp.ranges[k].length());
            }
        }
        std::vector<int> units = largest_remainder(lengths, magnitude);
        bool hit_cap = false;
        for (std::size_t i = 0; i < active.size(); ++i) {
            const std::size_t k = active[i];
            const int cap = comp.ranges[k].length() - 1;
            if (units[i] > cap) {
                deltas[k] = -cap;
                capped[k] = true;
                magnitude -= cap;
                hit_cap = true;
            }
        }
        if (!hit_cap) {
            for (std::size_t i = 0; i < active.size(); ++i) deltas[active[i]] = -units[i];
            magnitude = 0;
        }
    }
    return deltas;
}

std::pair<IndexMap, SegmentSet> build_index_map(const SegmentSet& s,
                                                const std::vector<int>& deltas) {
    const ComplementSet comp = complement(s);
    if (deltas.size() != comp.ranges.size()) {
        throw DataError("delta vector has " + std::to_string(deltas.size()) +
                        " entries but the complement has " + std::to_string(comp.ranges.size()) +
                        " ranges");
    }
    for (std::size_t k = 0; k < deltas.size(); ++k) {
        if (comp.ranges[k].length() + deltas[k] < 1) {
            throw DataError("delta " + std::to_string(deltas[k]) + " shrinks range " +
                            std::to_string(comp.ranges[k].start) + "-" +
                            std::to_string(comp.ranges[k].end) + " below length 1");
        }
    }

    const int old_len = s.seq_len();
    int new_len = old_len;
    for (int d : deltas) new_len += d;

    std::vector<int> forward(static_cast<std::size_t>(old_len), -1);
    std::vector<int> inverse(static_cast<std::size_t>(new_len), -1);
    std::vector<Range> new_ranges;

    // walk the interleaved gap/segment layout in position order
    std::size_t gap_idx = 0;
    std::size_t seg_idx = 0;
    int old_cursor = 0;
    int new_cursor = 0;
    while (old_cursor < old_len) {
        if (seg_idx < s.ranges().size() && s.ranges()[seg_idx].start == old_cursor) {
            const Range& seg = s.ranges()[seg_idx];
            for (int p = seg.start; p <= seg.end; ++p) {
                const int q = new_cursor + (p - seg.start);
                forward[static_cast<std::size_t>(p)] = q;
                inverse[static_cast<std::size_t>(q)] = p;
            }
            new_ranges.push_back({new_cursor, new_cursor + seg.length() - 1});
            new_cursor += seg.length();
            old_cursor = seg.end + 1;
            ++seg_idx;
        } else {
            const Range& gap = comp.ranges[gap_idx];
            new_cursor += gap.length() + deltas[gap_idx];
            old_cursor = gap.end + 1;
            ++gap_idx;
        }
    }

    return {IndexMap(std::move(forward), std::move(inverse)),
            SegmentSet(std::move(new_ranges), new_len)};
}

IndexMap::IndexMap(std::vector<int> forward, std::vector<int> inverse)
    : forward_(std::move(forward)), inverse_(std::move(inverse)) {
    for (std::size_t p = 0; p < forward_.size(); ++p) {
        const int q = forward_[p];
        if (q < 0) continue;
        if (q >= static_cast<int>(inverse_.size()) ||
            inverse_[static_cast<std::size_t>(q)] != static_cast<int>(p)) {
            throw DataError("index map is not its own inverse at old position " +
                            std::to_string(p));
        }
    }
}

SegmentSet parse_segments(const std::string& spec, int seq_len) {
    if (!spec.empty() && spec.back() == ',') {
        throw DataError("bad segment list '" + spec + "' (trailing separator)");
    }
    std::vector<Range> ranges;
    std::size_t pos = 0;
    while (pos < spec.size()) {
        std::size_t comma = spec.find(',', pos);
        if (comma == std::string::npos) comma = spec.size();
        const std::string token = spec.substr(pos, comma - pos);
        const std::size_t dash = token.find('-');
        if (dash == std::string::npos || dash == 0 || dash + 1 >= token.size()) {
            throw DataError("bad segment token '" + token + "' (expected start-end)");
        }
        try {
            ranges.push_back({std::stoi(token.substr(0, dash)), std::stoi(token.substr(dash + 1))});
        } catch (const std::exception&) {
            throw DataError("bad segment token '" + token + "' (expected start-end)");
        }
        pos = comma + 1;
    }
    return SegmentSet(std::move(ranges), seq_len);
}

std::string format_segments(const SegmentSet& s) {
    std::string out;
    for (const Range& r : s.ranges()) {
        if (!out.empty()) out += ',';
        out += std::to_string(r.start) + "-" + std::to_string(r.end);
    }
    return out;
}

}  // namespace segdms
