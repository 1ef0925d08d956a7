#include "segdms/vocab.hpp"

#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "segdms/errors.hpp"

namespace segdms {

Vocab::Vocab(std::vector<std::string> symbols, bool has_pad)
    : symbols_(std::move(symbols)), has_pad_(has_pad) {
    if (symbols_.size() < 2) {
        throw DataError("vocab needs at least 2 symbols, got " + std::to_string(symbols_.size()));
    }
    std::unordered_set<std::string> seen;
    for (const auto& s : symbols_) {
        if (s.empty()) throw DataError("vocab symbol must be non-empty");
        if (!seen.insert(s).second) throw DataError("duplicate vocab symbol '" + s + "'");
    }
}

const std::string& Vocab::symbol(int id) const {
    if (id < 0 || id >= size()) {
        throw DataError("token id " + std::to_string(id) + " outside vocab of size " +
                        std::to_string(size()));
    }
    return symbols_[static_cast<std::size_t>(id)];
}

int Vocab::id_of(const std::string& symbol) const {
    for (int i = 0; i < size(); ++i) {
        if (symbols_[static_cast<std::size_t>(i)] == symbol) return i;
    }
    return -1;
}

void Vocab::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    for (const auto& s : symbols_) out << s << '\n';
}

std::shared_ptr<const Vocab> Vocab::load(const std::string& path, bool has_pad) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open vocab file '" + path + "'");
    std::vector<std::string> symbols;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) symbols.push_back(line);
    }
    return std::make_shared<Vocab>(std::move(symbols), has_pad);
}

std::shared_ptr<const Vocab> amino_acid_vocab() {
    static const std::shared_ptr<const Vocab> v = [] {
        std::vector<std::string> symbols;
        for (char c : std::string("ACDEFGHIKLMNPQRSTVWY")) symbols.emplace_back(1, c);
        symbols.emplace_back("-");  // pad, never emitted
        return std::make_shared<Vocab>(std::move(symbols), true);
    }();
    return v;
}

Sequence::Sequence(std::vector<int> ids, std::shared_ptr<const Vocab> vocab)
    : ids_(std::move(ids)), vocab_(std::move(vocab)) {
    if (!vocab_) throw DataError("sequence requires a vocabulary");
    if (ids_.empty()) throw DataError("sequence must be non-empty");
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (ids_[i] < 0 || ids_[i] >= vocab_->size()) {
            throw DataError("token id " + std::to_string(ids_[i]) + " at position " +
                            std::to_string(i) + " outside vocab of size " +
                            std::to_string(vocab_->size()));
        }
    }
}

bool Sequence::same_vocab(const Sequence& other) const {
    return vocab_ == other.vocab_ || *vocab_ == *other.vocab_;
}

Sequence encode_text(const std::string& text, std::shared_ptr<const Vocab> vocab) {
    if (!vocab) throw DataError("encode_text requires a vocabulary");
    if (text.empty()) throw DataError("cannot encode an empty string");
    std::unordered_map<char, int> lookup;
    for (int i = 0; i < vocab->size(); ++i) {
        const std::string& s = vocab->symbol(i);
        if (s.size() != 1) {
            throw DataError("encode_text requires single-character symbols; '" + s + "' is not");
        }
        lookup.emplace(s[0], i);
    }
    std::vector<int> ids;
    ids.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        auto it = lookup.find(text[i]);
        if (it == lookup.end()) {
            throw DataError(std::string("unknown symbol '") + text[i] + "' at position " +
                            std::to_string(i));
        }
        ids.push_back(it->second);
    }
    return Sequence(std::move(ids), std::move(vocab));
}

std::string decode_text(const Sequence& seq) {
    std::string out;
    for (int id : seq.ids()) out += seq.vocab()->symbol(id);
    return out;
}

}  // namespace segdms
