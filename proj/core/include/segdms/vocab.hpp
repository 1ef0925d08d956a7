#pragma once

#include <memory>
#include <string>
#include <vector>

namespace segdms {

/// Finite token vocabulary with a stable symbol<->id bijection.
///
/// An optional trailing pad symbol is reserved for batching; it is a valid
/// token id but is excluded from the emission label space, so models never
/// produce it.
class Vocab {
public:
    Vocab(std::vector<std::string> symbols, bool has_pad);

    int size() const { return static_cast<int>(symbols_.size()); }
    // number of emittable labels (pad excluded)
    int emit_size() const { return size() - (has_pad_ ? 1 : 0); }
    bool has_pad() const { return has_pad_; }
    int pad_id() const { return has_pad_ ? size() - 1 : -1; }

    const std::string& symbol(int id) const;
    // -1 when the symbol is unknown
    int id_of(const std::string& symbol) const;

    bool operator==(const Vocab& other) const {
        return symbols_ == other.symbols_ && has_pad_ == other.has_pad_;
    }

    // newline-separated symbol list
    void save(const std::string& path) const;
    static std::shared_ptr<const Vocab> load(const std::string& path, bool has_pad);

private:
    std::vector<std::string> symbols_;
    bool has_pad_ = false;
};

/// The 20 standard amino acids in alphabetical one-letter order plus the
/// reserved pad symbol "-" at the last id.
std::shared_ptr<const Vocab> amino_acid_vocab();

/// Immutable token-id sequence bound to a vocabulary. Never empty.
class Sequence {
public:
    Sequence(std::vector<int> ids, std::shared_ptr<const Vocab> vocab);

    int length() const { return static_cast<int>(ids_.size()); }
    int at(int pos) const { return ids_[static_cast<std::size_t>(pos)]; }
    const std::vector<int>& ids() const { return ids_; }
    const std::shared_ptr<const Vocab>& vocab() const { return vocab_; }

    bool same_vocab(const Sequence& other) const;
    bool operator==(const Sequence& other) const {
        return ids_ == other.ids_ && same_vocab(other);
    }

private:
    std::vector<int> ids_;
    std::shared_ptr<const Vocab> vocab_;
};

/// One symbol per character; rejects unknown characters naming the offender
/// and its position. Requires a single-character vocabulary.
Sequence encode_text(const std::string& text, std::shared_ptr<const Vocab> vocab);

std::string decode_text(const Sequence& seq);

}  // namespace segdms
