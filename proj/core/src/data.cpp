#include "segdms/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

#include "segdms/errors.hpp"
#include "segdms/rng.hpp"

namespace segdms {

namespace {

[[noreturn]] void data_fail(const std::string& what) { throw DataError(what); }

bool is_variable_name(const std::string& name) { return name.rfind("CDR", 0) == 0; }

void check_name(const std::string& name, const char* what) {
    if (name.empty()) data_fail(std::string(what) + " must not be empty");
    if (name.find_first_of(",;:\n\r") != std::string::npos) {
        data_fail(std::string(what) + " '" + name + "' contains a reserved character");
    }
}

}  // namespace

AnnotatedSequence::AnnotatedSequence(std::string id, Sequence seq,
                                     std::vector<NamedRegion> regions)
    : id_(std::move(id)), seq_(std::move(seq)), regions_(std::move(regions)) {
    check_name(id_, "sequence id");
    if (regions_.empty()) data_fail("sequence '" + id_ + "' has no regions");

    const int len = seq_.length();
    int expect_start = 0;
    for (std::size_t k = 0; k < regions_.size(); ++k) {
        const NamedRegion& r = regions_[k];
        check_name(r.name, "region name");
        for (std::size_t j = 0; j < k; ++j) {
            if (regions_[j].name == r.name) {
                data_fail("sequence '" + id_ + "' repeats region name '" + r.name + "'");
            }
        }
        if (r.range.start != expect_start || r.range.end < r.range.start) {
            data_fail("sequence '" + id_ + "': region '" + r.name +
                      "' breaks the contiguous tiling at position " +
                      std::to_string(expect_start));
        }
        expect_start = r.range.end + 1;
        if (is_variable_name(r.name) && (r.range.start == 0 || r.range.end == len - 1)) {
            data_fail("sequence '" + id_ + "': variable region '" + r.name +
                      "' touches a sequence end");
        }
    }
    if (expect_start != len) {
        data_fail("sequence '" + id_ + "': regions cover " + std::to_string(expect_start) +
                  " of " + std::to_string(len) + " positions");
    }
}

const NamedRegion* AnnotatedSequence::find_region(const std::string& name) const {
    for (const NamedRegion& r : regions_) {
        if (r.name == name) return &r;
    }
    return nullptr;
}

SegmentSet preserve_all_but(const AnnotatedSequence& rec, const std::string& region_name) {
    if (rec.find_region(region_name) == nullptr) {
        data_fail("sequence '" + rec.id() + "' has no region named '" + region_name + "'");
    }
    std::vector<Range> merged;
    for (const NamedRegion& r : rec.regions()) {
        if (r.name == region_name) continue;
        if (!merged.empty() && merged.back().end + 1 == r.range.start) {
            merged.back().end = r.range.end;
        } else {
            merged.push_back(r.range);
        }
    }
    return SegmentSet(std::move(merged), rec.sequence().length());
}

// --- synthetic family --------------------------------------------------------

namespace {

void check_weight_row(const std::vector<double>& row, int emit, const std::string& region,
                      const char* table) {
    if (static_cast<int>(row.size()) != emit) {
        throw ConfigError("region '" + region + "': " + table + " row has " +
                          std::to_string(row.size()) + " weights for " + std::to_string(emit) +
                          " tokens");
    }
    double total = 0.0;
    for (double w : row) {
        if (!(w >= 0.0)) {
            throw ConfigError("region '" + region + "': " + table + " weight is negative");
        }
        total += w;
    }
    if (!(total > 0.0)) {
        throw ConfigError("region '" + region + "': " + table + " row has no positive weight");
    }
}

}  // namespace

void validate(const SyntheticFamilySpec& spec) {
    if (!spec.vocab) throw ConfigError("family spec has no vocabulary");
    if (spec.regions.empty()) throw ConfigError("family spec has no regions");
    const int emit = spec.vocab->emit_size();

    for (std::size_t k = 0; k < spec.regions.size(); ++k) {
        const RegionSpec& r = spec.regions[k];
        check_name(r.name, "region name");
        for (std::size_t j = 0; j < k; ++j) {
            if (spec.regions[j].name == r.name) {
                throw ConfigError("family spec repeats region name '" + r.name + "'");
            }
        }
        if (!r.variable) {
            if (r.tmpl.empty()) {
                throw ConfigError("framework region '" + r.name + "' has an empty template");
            }
            for (char c : r.tmpl) {
                if (spec.vocab->id_of(std::string(1, c)) < 0) {
                    throw ConfigError("framework region '" + r.name +
                                      "' template uses unknown symbol '" + std::string(1, c) +
                                      "'");
                }
            }
            if (!(r.noise >= 0.0 && r.noise < 1.0)) {
                throw ConfigError("framework region '" + r.name +
                                  "' noise rate must lie in [0, 1)");
            }
            continue;
        }
        if (r.min_len < 1 || r.max_len < r.min_len) {
            throw ConfigError("variable region '" + r.name + "' has an empty length range");
        }
        for (const auto& row : r.head) check_weight_row(row, emit, r.name, "head");
        for (const auto& row : r.tail) check_weight_row(row, emit, r.name, "tail");
        const int tail = static_cast<int>(r.tail.size());
        const int head = static_cast<int>(r.head.size());
        if (r.max_len - tail > head) {
            // middle positions exist at the longest length, so a fallback is needed
            check_weight_row(r.body, emit, r.name, "body");
        }
    }
    if (spec.regions.front().variable || spec.regions.back().variable) {
        throw ConfigError("family spec must start and end with a framework region");
    }
}

namespace {

// one row: `mass` on the dominant symbol, the rest spread over the other tokens
std::vector<double> dominant_row(const Vocab& vocab, char symbol, double mass) {
    const int emit = vocab.emit_size();
    const int hot = vocab.id_of(std::string(1, symbol));
    std::vector<double> row(static_cast<std::size_t>(emit),
                            (1.0 - mass) / static_cast<double>(emit - 1));
    row[static_cast<std::size_t>(hot)] = mass;
    return row;
}

std::vector<std::vector<double>> dominant_table(const Vocab& vocab, const std::string& symbols,
                                                double mass) {
    std::vector<std::vector<double>> rows;
    rows.reserve(symbols.size());
    for (char c : symbols) rows.push_back(dominant_row(vocab, c, mass));
    return rows;
}

}  // namespace

SyntheticFamilySpec default_antibody_family() {
    SyntheticFamilySpec spec;
    spec.vocab = amino_acid_vocab();
    const Vocab& v = *spec.vocab;

    auto framework = [](std::string name, std::string tmpl) {
        RegionSpec r;
        r.name = std::move(name);
        r.tmpl = std::move(tmpl);
        r.noise = 0.01;
        return r;
    };

    spec.regions.push_back(framework("FR1", "QVQLVQSGAEVKKPGASVKVSCKAS"));

    RegionSpec cdr1;
    cdr1.name = "CDR1";
    cdr1.variable = true;
    cdr1.min_len = cdr1.max_len = 8;
    cdr1.head = dominant_table(v, "GYTFTSYG", 0.8);
    spec.regions.push_back(std::move(cdr1));

    spec.regions.push_back(framework("FR2", "ISWVRQAPGQGLEW"));

    RegionSpec cdr2;
    cdr2.name = "CDR2";
    cdr2.variable = true;
    cdr2.min_len = cdr2.max_len = 7;
    cdr2.head = dominant_table(v, "ISAYNGN", 0.8);
    spec.regions.push_back(std::move(cdr2));

    spec.regions.push_back(framework("FR3", "RVTITADKSTSTAYMELSSLRSEDTAVYYCAR"));

    // CDR3 varies in length. The prefix follows a position ladder (each slot
    // has its own dominant token) and the last four positions follow an end
    // motif, so the pre-corruption length stays inferable from content: the
    // highest ladder rung present pins it down even after random edits.
    RegionSpec cdr3;
    cdr3.name = "CDR3";
    cdr3.variable = true;
    cdr3.min_len = 8;
    cdr3.max_len = 18;
    cdr3.head = dominant_table(v, "ARDGSTNYWFKLHV", 0.7);
    cdr3.tail = dominant_table(v, "FDYW", 0.85);
    spec.regions.push_back(std::move(cdr3));

    spec.regions.push_back(framework("FR4", "WGQGTLVTVSS"));

    validate(spec);
    return spec;
}

namespace {

void append_region(const RegionSpec& r, const Vocab& vocab, Rng& rng, std::vector<int>& ids,
                   std::vector<NamedRegion>& regions) {
    const int start = static_cast<int>(ids.size());
    if (!r.variable) {
        for (char c : r.tmpl) {
            int id = vocab.id_of(std::string(1, c));
            if (r.noise > 0.0 && rng.next_bernoulli(r.noise)) {
                // uniform over the other tokens
                int other = static_cast<int>(rng.next_below(
                    static_cast<std::uint64_t>(vocab.emit_size() - 1)));
                id = other < id ? other : other + 1;
            }
            ids.push_back(id);
        }
    } else {
        const int len = rng.next_int(r.min_len, r.max_len);
        const int tail = static_cast<int>(r.tail.size());
        for (int p = 0; p < len; ++p) {
            const std::vector<double>* row = &r.body;
            if (p >= len - tail) {
                row = &r.tail[static_cast<std::size_t>(p - (len - tail))];
            } else if (p < static_cast<int>(r.head.size())) {
                row = &r.head[static_cast<std::size_t>(p)];
            }
            ids.push_back(rng.next_categorical(*row));
        }
    }
    regions.push_back({r.name, Range{start, static_cast<int>(ids.size()) - 1}});
}

}  // namespace

std::vector<AnnotatedSequence> generate_corpus(const SyntheticFamilySpec& spec, int n,
                                               std::uint64_t seed) {
    validate(spec);
    if (n < 1) throw ConfigError("corpus size must be at least 1");

    std::vector<AnnotatedSequence> out;
    out.reserve(static_cast<std::size_t>(n));
    std::set<std::vector<int>> seen;
    const long max_attempts = 50L * n + 1000L;
    for (long attempt = 0; static_cast<int>(out.size()) < n; ++attempt) {
        if (attempt >= max_attempts) {
            data_fail("family produced too many duplicate sequences; corpus of " +
                      std::to_string(n) + " not reachable");
        }
        Rng rng(derive_seed(seed, 0xda7a, static_cast<std::uint64_t>(attempt)));
        std::vector<int> ids;
        std::vector<NamedRegion> regions;
        for (const RegionSpec& r : spec.regions) append_region(r, *spec.vocab, rng, ids, regions);
        if (!seen.insert(ids).second) continue;

        std::ostringstream id;
        id << "s" << std::setw(6) << std::setfill('0') << out.size();
        out.emplace_back(id.str(), Sequence(std::move(ids), spec.vocab), std::move(regions));
    }
    return out;
}

// --- CSV ingestion -----------------------------------------------------------

namespace {

std::string format_regions(const std::vector<NamedRegion>& regions) {
    std::string out;
    for (const NamedRegion& r : regions) {
        if (!out.empty()) out += ';';
        out += r.name + ':' + std::to_string(r.range.start) + '-' + std::to_string(r.range.end);
    }
    return out;
}

std::vector<std::string> split_on(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::string::size_type from = 0;
    while (true) {
        auto to = line.find(sep, from);
        if (to == std::string::npos) {
            fields.push_back(line.substr(from));
            return fields;
        }
        fields.push_back(line.substr(from, to - from));
        from = to + 1;
    }
}

int parse_index(const std::string& text, long line_no, const char* what) {
    try {
        std::size_t used = 0;
        int value = std::stoi(text, &used);
        if (used != text.size() || value < 0) throw std::invalid_argument(text);
        return value;
    } catch (const std::exception&) {
        data_fail("line " + std::to_string(line_no) + ": bad " + what + " '" + text + "'");
    }
}

std::vector<NamedRegion> parse_regions(const std::string& field, long line_no) {
    std::vector<NamedRegion> regions;
    for (const std::string& entry : split_on(field, ';')) {
        auto colon = entry.find(':');
        auto dash = entry.find('-', colon == std::string::npos ? 0 : colon + 1);
        if (colon == std::string::npos || dash == std::string::npos) {
            data_fail("line " + std::to_string(line_no) + ": region '" + entry +
                      "' is not NAME:start-end");
        }
        NamedRegion r;
        r.name = entry.substr(0, colon);
        r.range.start = parse_index(entry.substr(colon + 1, dash - colon - 1), line_no,
                                    "region start");
        r.range.end = parse_index(entry.substr(dash + 1), line_no, "region end");
        regions.push_back(std::move(r));
    }
    return regions;
}

constexpr const char* kCsvHeader = "id,sequence,regions";

}  // namespace

void save_csv(const std::vector<AnnotatedSequence>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) data_fail("cannot open '" + path + "' for writing");
    out << kCsvHeader << '\n';
    for (const AnnotatedSequence& rec : records) {
        out << rec.id() << ',' << decode_text(rec.sequence()) << ','
            << format_regions(rec.regions()) << '\n';
    }
    if (!out) data_fail("failed while writing '" + path + "'");
}

std::vector<AnnotatedSequence> load_csv(const std::string& path,
                                        std::shared_ptr<const Vocab> vocab) {
    std::ifstream in(path);
    if (!in) data_fail("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) data_fail("'" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) {
        data_fail("'" + path + "' must start with header '" + kCsvHeader + "', got '" + line +
                  "'");
    }

    std::vector<AnnotatedSequence> out;
    for (long line_no = 2; std::getline(in, line); ++line_no) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields = split_on(line, ',');
        if (fields.size() != 3) {
            data_fail("line " + std::to_string(line_no) + ": expected 3 fields, got " +
                      std::to_string(fields.size()));
        }
        try {
            out.emplace_back(fields[0], encode_text(fields[1], vocab),
                             parse_regions(fields[2], line_no));
        } catch (const DataError& e) {
            data_fail("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

// --- splitting ---------------------------------------------------------------

SplitResult split(const std::vector<AnnotatedSequence>& records, double train_frac,
                  double valid_frac, double test_frac, std::uint64_t seed) {
    const double fracs[3] = {train_frac, valid_frac, test_frac};
    double total = 0.0;
    for (double f : fracs) {
        if (!(f >= 0.0)) throw ConfigError("split fractions must be non-negative");
        total += f;
    }
    if (std::abs(total - 1.0) > 1e-6) throw ConfigError("split fractions must sum to 1");
    if (records.empty()) throw ConfigError("cannot split an empty corpus");

    // largest-remainder rounding keeps the three parts exhaustive
    const int n = static_cast<int>(records.size());
    int counts[3];
    double remainders[3];
    int assigned = 0;
    for (int k = 0; k < 3; ++k) {
        double share = fracs[k] * n;
        counts[k] = static_cast<int>(share);
        remainders[k] = share - counts[k];
        assigned += counts[k];
    }
    for (int left = n - assigned; left > 0; --left) {
        int best = 0;
        for (int k = 1; k < 3; ++k) {
            if (remainders[k] > remainders[best]) best = k;
        }
        ++counts[best];
        remainders[best] = -1.0;
    }
    if (counts[0] == 0) throw ConfigError("split leaves the training part empty");

    std::vector<int> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, 0x5b11));
    rng.shuffle(order);

    SplitResult result;
    std::vector<AnnotatedSequence>* parts[3] = {&result.train, &result.valid, &result.test};
    int next = 0;
    for (int k = 0; k < 3; ++k) {
        for (int j = 0; j < counts[k]; ++j) {
            parts[k]->push_back(records[static_cast<std::size_t>(order[
                static_cast<std::size_t>(next++)])]);
        }
    }
    return result;
}

std::vector<Sequence> sequences_of(const std::vector<AnnotatedSequence>& records) {
    std::vector<Sequence> out;
    out.reserve(records.size());
    for (const AnnotatedSequence& rec : records) out.push_back(rec.sequence());
    return out;
}

}  // namespace segdms
