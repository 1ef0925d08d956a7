#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "segdms/corruption.hpp"
#include "segdms/errors.hpp"
#include "segdms/rng.hpp"
#include "segdms/vocab.hpp"

using namespace segdms;

namespace {

Sequence random_sequence(Rng& rng, int len) {
    std::vector<int> ids;
    for (int i = 0; i < len; ++i) {
        ids.push_back(static_cast<int>(rng.next_below(20)));
    }
    return Sequence(std::move(ids), amino_acid_vocab());
}

SegmentSet random_segment_set(Rng& rng, int len) {
    std::vector<Range> ranges;
    int pos = static_cast<int>(rng.next_below(3));
    while (pos < len) {
        const int start = pos + static_cast<int>(rng.next_below(4));
        if (start >= len) break;
        const int end = std::min(len - 1, start + static_cast<int>(rng.next_below(5)));
        ranges.push_back({start, end});
        pos = end + 2;
        if (rng.next_bernoulli(0.35)) break;
    }
    return SegmentSet(std::move(ranges), len);
}

}  // namespace

TEST_SUITE("corruption") {

TEST_CASE("rate validation") {
    CorruptionConfig ok;
    CHECK_NOTHROW(validate(ok));

    CorruptionConfig bad = ok;
    bad.p_sub = -0.1;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = ok;
    bad.p_ins = 1.5;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = ok;
    bad.p_sub = 0.7;
    bad.p_del = 0.5;  // one draw decides substitute-vs-delete, so they share a unit
    CHECK_THROWS_AS(validate(bad), ConfigError);
}

TEST_CASE("same seed reproduces the corruption exactly") {
    Rng rng(101);
    const Sequence x = random_sequence(rng, 40);
    const SegmentSet s = random_segment_set(rng, 40);
    CorruptionConfig cfg;
    cfg.rng_seed = 555;
    const CorruptionResult a = corrupt(x, s, cfg);
    const CorruptionResult b = corrupt(x, s, cfg);
    CHECK(a.corrupted == b.corrupted);
    CHECK(a.segments == b.segments);
    CHECK(a.trace.old_to_new == b.trace.old_to_new);

    cfg.rng_seed = 556;
    const CorruptionResult c = corrupt(x, s, cfg);
    CHECK(a.corrupted != c.corrupted);  // 40 positions at default rates: collision is negligible
}

TEST_CASE("preserved content is copied verbatim with no insertions inside") {
    Rng rng(202);
    CorruptionConfig cfg;
    cfg.p_sub = 0.3;  // aggressive rates to stress the boundary handling
    cfg.p_ins = 0.3;
    cfg.p_del = 0.3;
    for (int trial = 0; trial < 10000; ++trial) {
        const int len = 2 + static_cast<int>(rng.next_below(30));
        const Sequence x = random_sequence(rng, len);
        const SegmentSet s = random_segment_set(rng, len);
        cfg.rng_seed = derive_seed(777, static_cast<std::uint64_t>(trial));
        const CorruptionResult r = corrupt(x, s, cfg);

        REQUIRE(r.segments.count() == s.count());
        for (int k = 0; k < s.count(); ++k) {
            const Range before = s.ranges()[k];
            const Range after = r.segments.ranges()[k];
            REQUIRE(after.length() == before.length());
            for (int off = 0; off < before.length(); ++off) {
                CHECK(r.corrupted.at(after.start + off) == x.at(before.start + off));
            }
            // the index map sends every preserved position to its new home
            for (int off = 0; off < before.length(); ++off) {
                CHECK(r.trace.old_to_new[static_cast<std::size_t>(before.start + off)] ==
                      after.start + off);
            }
        }
    }
}

TEST_CASE("pure substitution never reuses the original token") {
    Rng rng(303);
    CorruptionConfig cfg;
    cfg.p_sub = 1.0;
    cfg.p_ins = 0.0;
    cfg.p_del = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const Sequence x = random_sequence(rng, 12);
        cfg.rng_seed = derive_seed(1, static_cast<std::uint64_t>(trial));
        const auto r = corrupt_unrestricted(x, cfg);
        REQUIRE(r.corrupted.length() == x.length());
        for (int t = 0; t < x.length(); ++t) CHECK(r.corrupted.at(t) != x.at(t));
        // substituted tokens stay inside the emission alphabet
        for (int t = 0; t < x.length(); ++t) CHECK(r.corrupted.at(t) < 20);
    }
}

TEST_CASE("total deletion keeps one token so the sequence never vanishes") {
    Rng rng(404);
    CorruptionConfig cfg;
    cfg.p_sub = 0.0;
    cfg.p_ins = 0.0;
    cfg.p_del = 1.0;
    const Sequence x = random_sequence(rng, 5);
    cfg.rng_seed = 9;
    const auto r = corrupt_unrestricted(x, cfg);
    CHECK(r.corrupted.length() == 1);
    CHECK(r.corrupted.at(0) == x.at(4));  // only the final position can be spared

    // with a preserved segment the preserved tokens already keep it non-empty;
    // the end gaps around it may vanish entirely
    const SegmentSet s({{2, 2}}, 5);
    const CorruptionResult rs = corrupt(x, s, cfg);
    CHECK(rs.corrupted.length() == 1);
    CHECK(rs.corrupted.at(0) == x.at(2));
    CHECK(rs.segments.ranges() == std::vector<Range>{{0, 0}});
}

TEST_CASE("a gap between two preserved segments never vanishes") {
    Rng rng(808);
    CorruptionConfig cfg;
    cfg.p_sub = 0.0;
    cfg.p_ins = 0.0;
    cfg.p_del = 1.0;
    const Sequence x = random_sequence(rng, 3);
    const SegmentSet s({{0, 0}, {2, 2}}, 3);
    cfg.rng_seed = 11;
    const CorruptionResult r = corrupt(x, s, cfg);
    CHECK(r.corrupted.ids() == x.ids());  // the lone gap token is the last survivor
    CHECK(r.segments == s);

    // and across many random shapes the gaps always separate the new segments
    cfg.p_del = 0.6;
    cfg.p_sub = 0.2;
    for (int trial = 0; trial < 3000; ++trial) {
        const int len = 3 + static_cast<int>(rng.next_below(20));
        const Sequence y = random_sequence(rng, len);
        const SegmentSet sy = random_segment_set(rng, len);
        cfg.rng_seed = derive_seed(99, static_cast<std::uint64_t>(trial));
        const CorruptionResult ry = corrupt(y, sy, cfg);  // ctor rejects fused segments
        for (int k = 1; k < ry.segments.count(); ++k) {
            CHECK(ry.segments.ranges()[k].start > ry.segments.ranges()[k - 1].end + 1);
        }
    }
}

TEST_CASE("insertion-only corruption grows the sequence as recorded") {
    Rng rng(505);
    CorruptionConfig cfg;
    cfg.p_sub = 0.0;
    cfg.p_ins = 1.0;
    cfg.p_del = 0.0;
    const Sequence x = random_sequence(rng, 6);
    cfg.rng_seed = 10;
    const auto r = corrupt_unrestricted(x, cfg);
    CHECK(r.corrupted.length() == 12);  // one insertion after every position
    CHECK(r.trace.insertions() == 6);
    CHECK(r.trace.deletions() == 0);
    for (int t = 0; t < x.length(); ++t) {
        CHECK(r.corrupted.at(r.trace.old_to_new[static_cast<std::size_t>(t)]) == x.at(t));
    }
}

TEST_CASE("replaying the recorded edits reproduces the corruption") {
    Rng rng(606);
    CorruptionConfig cfg;
    cfg.p_sub = 0.25;
    cfg.p_ins = 0.25;
    cfg.p_del = 0.25;
    for (int trial = 0; trial < 2000; ++trial) {
        const int len = 2 + static_cast<int>(rng.next_below(24));
        const Sequence x = random_sequence(rng, len);
        const SegmentSet s = random_segment_set(rng, len);
        cfg.rng_seed = derive_seed(42, static_cast<std::uint64_t>(trial));
        const CorruptionResult r = corrupt(x, s, cfg);
        CHECK(replay_trace(x, r.trace) == r.corrupted.ids());
        CHECK(r.trace.new_len == r.corrupted.length());

        // surviving positions keep their token unless a substitution names them
        std::vector<bool> substituted(static_cast<std::size_t>(len), false);
        for (const EditRecord& e : r.trace.edits) {
            if (e.kind == EditKind::kSubstitute) {
                substituted[static_cast<std::size_t>(e.pos)] = true;
            }
        }
        for (int t = 0; t < len; ++t) {
            const int nt = r.trace.old_to_new[static_cast<std::size_t>(t)];
            if (nt >= 0 && !substituted[static_cast<std::size_t>(t)]) {
                CHECK(r.corrupted.at(nt) == x.at(t));
            }
        }
    }
}

TEST_CASE("edit frequencies track the configured rates") {
    Rng rng(707);
    CorruptionConfig cfg;  // defaults: 0.1 / 0.05 / 0.05
    int subs = 0, inss = 0, dels = 0, positions = 0;
    for (int trial = 0; trial < 600; ++trial) {
        const Sequence x = random_sequence(rng, 50);
        cfg.rng_seed = derive_seed(3, static_cast<std::uint64_t>(trial));
        const auto r = corrupt_unrestricted(x, cfg);
        for (const EditRecord& e : r.trace.edits) {
            subs += e.kind == EditKind::kSubstitute ? 1 : 0;
            inss += e.kind == EditKind::kInsertAfter ? 1 : 0;
            dels += e.kind == EditKind::kDelete ? 1 : 0;
        }
        positions += x.length();
    }
    // 30,000 positions; four-sigma bands around the expected rates
    const auto band = [&](int count, double rate) {
        const double expect = positions * rate;
        return std::abs(count - expect) < 4.0 * std::sqrt(expect) + 10.0;
    };
    CHECK(band(subs, cfg.p_sub));
    CHECK(band(inss, cfg.p_ins));
    CHECK(band(dels, cfg.p_del));
}

}  // TEST_SUITE
