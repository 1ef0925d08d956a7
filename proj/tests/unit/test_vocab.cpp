#include <cstdio>

#include "doctest.h"
#include "segdms/errors.hpp"
#include "segdms/vocab.hpp"

using namespace segdms;

TEST_SUITE("vocab") {

TEST_CASE("amino acid vocabulary maps twenty residues plus pad") {
    auto v = amino_acid_vocab();
    CHECK(v->size() == 21);
    CHECK(v->emit_size() == 20);
    CHECK(v->has_pad());
    CHECK(v->pad_id() == 20);
    CHECK(v->symbol(v->pad_id()) == "-");
    // alphabetical one-letter order
    CHECK(v->symbol(0) == "A");
    CHECK(v->symbol(19) == "Y");
    CHECK(v->id_of("W") >= 0);
    CHECK(v->id_of("B") == -1);
    CHECK(v->id_of("") == -1);
}

TEST_CASE("symbol and id round-trip over the whole table") {
    auto v = amino_acid_vocab();
    for (int id = 0; id < v->size(); ++id) {
        CHECK(v->id_of(v->symbol(id)) == id);
    }
}

TEST_CASE("vocabulary rejects duplicates and empty symbols") {
    CHECK_THROWS_AS(Vocab({"A", "A"}, false), DataError);
    CHECK_THROWS_AS(Vocab({"A", ""}, false), DataError);
    CHECK_THROWS_AS(Vocab({}, false), DataError);
}

TEST_CASE("save and load round-trip") {
    auto v = amino_acid_vocab();
    const std::string path = "vocab_roundtrip.txt";
    v->save(path);
    auto back = Vocab::load(path, true);
    CHECK(*back == *v);
    std::remove(path.c_str());
}

TEST_CASE("text encoding round-trips and rejects unknown characters") {
    auto v = amino_acid_vocab();
    const std::string text = "ACDEFGHIKLMNPQRSTVWY";
    Sequence seq = encode_text(text, v);
    CHECK(seq.length() == 20);
    CHECK(decode_text(seq) == text);

    CHECK_THROWS_WITH_AS(encode_text("ACZ", v), doctest::Contains("'Z'"), DataError);
    CHECK_THROWS_AS(encode_text("", v), DataError);
}

TEST_CASE("sequences are never empty and stay in vocabulary range") {
    auto v = amino_acid_vocab();
    CHECK_THROWS_AS(Sequence({}, v), DataError);
    CHECK_THROWS_AS(Sequence({21}, v), DataError);
    CHECK_THROWS_AS(Sequence({-1}, v), DataError);
    Sequence ok({0, 20}, v);  // pad is a valid token id
    CHECK(ok.length() == 2);
}

TEST_CASE("sequence equality requires the same vocabulary") {
    auto v = amino_acid_vocab();
    auto tiny = std::make_shared<const Vocab>(std::vector<std::string>{"A", "C"}, false);
    Sequence a({0}, v);
    Sequence b({0}, tiny);
    CHECK(a.same_vocab(Sequence({1}, v)));
    CHECK_FALSE(a.same_vocab(b));
    CHECK(a != b);
}

}  // TEST_SUITE
