#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "segdms/errors.hpp"
#include "segdms/matrix.hpp"
#include "segdms/params.hpp"
#include "segdms/rng.hpp"

using namespace segdms;
namespace fs = std::filesystem;

namespace {

struct ScratchDir {
    fs::path path;
    ScratchDir() : path(fs::temp_directory_path() / "segdms_params_test") {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~ScratchDir() { fs::remove_all(path); }
    std::string file(const char* name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(bool(in));
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

ParamStore<float> sample_store() {
    ParamStore<float> store;
    MatF w(2, 3);
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 3; ++c) w(r, c) = 0.25f * static_cast<float>(r * 3 + c) - 0.5f;
    }
    store.add("enc.w", w);
    store.add("enc.b", MatF(1, 3, -1.5f));
    store.add("u", MatF(1, 1, 0.125f));
    return store;
}

}  // namespace

TEST_SUITE("params") {

TEST_CASE("store bookkeeping") {
    ParamStore<double> store;
    CHECK(store.add("a", MatD(2, 2, 1.0)) == 0);
    CHECK(store.add("b", MatD(1, 3, 2.0)) == 1);
    CHECK(store.count() == 2);
    CHECK(store.name(0) == "a");
    CHECK(store.name(1) == "b");
    CHECK(store.contains("a"));
    CHECK_FALSE(store.contains("c"));
    CHECK(store.index_of("b") == 1);
    CHECK_THROWS_AS(store.index_of("c"), ConfigError);
    CHECK_THROWS_AS(store.add("a", MatD(1, 1)), ConfigError);
    CHECK_THROWS_AS(store.add("", MatD(1, 1)), ConfigError);
    CHECK(store.scalar_count() == 7);

    // gradients start at zero with the value's shape
    CHECK(store.grad("a").rows() == 2);
    CHECK(store.grad("a")(1, 1) == 0.0);
    store.grad("a")(0, 0) = 5.0;
    store.zero_grads();
    CHECK(store.grad("a")(0, 0) == 0.0);

    const ParamStore<float> f = store.cast<float>();
    CHECK(f.count() == 2);
    CHECK(f.name(0) == "a");
    CHECK(f.value("b")(0, 2) == 2.0f);
}

TEST_CASE("first optimizer step has a closed form") {
    ParamStore<double> store;
    MatD w(2, 2);
    w(0, 0) = 1.0;
    w(0, 1) = -2.0;
    w(1, 0) = 0.5;
    w(1, 1) = 3.0;
    store.add("w", w);
    MatD g(2, 2);
    g(0, 0) = 0.3;
    g(0, 1) = -1.2;
    g(1, 0) = 0.0;
    g(1, 1) = 4.0;
    store.grad("w") = g;

    AdamState<double> opt;
    opt.lr = 0.01;
    adam_step(store, opt);

    CHECK(opt.step == 1);
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            // bias correction cancels on step one: update = lr * g / (|g| + eps)
            const double expect =
                w(r, c) - opt.lr * g(r, c) / (std::abs(g(r, c)) + opt.eps);
            CHECK(store.value("w")(r, c) == doctest::Approx(expect).epsilon(1e-12));
        }
    }
    // the step consumes the gradient
    CHECK(store.grad("w")(1, 1) == 0.0);

    // growing the store after the optimizer was primed is an error
    store.add("late", MatD(1, 1));
    CHECK_THROWS_AS(adam_step(store, opt), NumericError);
}

TEST_CASE("optimizer momentum persists across steps") {
    ParamStore<double> store;
    store.add("w", MatD(1, 1, 1.0));
    AdamState<double> opt;
    opt.lr = 0.1;
    store.grad("w")(0, 0) = 1.0;
    adam_step(store, opt);
    const double after_one = store.value("w")(0, 0);
    CHECK(after_one == doctest::Approx(1.0 - 0.1).epsilon(1e-6));
    // zero gradient still moves the weight while momentum decays
    adam_step(store, opt);
    CHECK(store.value("w")(0, 0) < after_one);
}

TEST_CASE("weight init respects the fan bound") {
    Rng rng(77);
    const double bound = std::sqrt(6.0 / (4.0 + 6.0));
    const MatD m = xavier_uniform<double>(4, 6, rng);
    double biggest = 0.0;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 6; ++c) {
            CHECK(std::abs(m(r, c)) < bound);
            biggest = std::max(biggest, std::abs(m(r, c)));
        }
    }
    CHECK(biggest > 0.5 * bound);  // the draw actually spans the interval

    Rng rng_a(123), rng_b(123), rng_c(124);
    CHECK(xavier_uniform<double>(3, 3, rng_a) == xavier_uniform<double>(3, 3, rng_b));
    Rng rng_d(123);
    const MatD first = xavier_uniform<double>(3, 3, rng_d);
    CHECK_FALSE(first == xavier_uniform<double>(3, 3, rng_c));
}

TEST_CASE("parameter files round trip bit for bit") {
    ScratchDir dir;
    const ParamStore<float> store = sample_store();
    ParamHeader header{{"steps_done", "120"}, {"d_model", "64"}, {"note", "hello world"}};
    const std::string path = dir.file("model.bin");
    save_params(store, path, header);

    const LoadedParams loaded = load_params(path);
    CHECK(loaded.header == header);
    REQUIRE(loaded.params.count() == store.count());
    for (int i = 0; i < store.count(); ++i) {
        CHECK(loaded.params.name(i) == store.name(i));  // insertion order survives
        CHECK(loaded.params.value(i) == store.value(i));
    }

    // saving what was loaded reproduces the file exactly
    const std::string again = dir.file("model2.bin");
    save_params(loaded.params, again, loaded.header);
    CHECK(slurp(path) == slurp(again));

    ParamHeader bad{{"a=b", "x"}};
    CHECK_THROWS_AS(save_params(store, dir.file("bad.bin"), bad), ConfigError);
    ParamHeader newline{{"a", "x\ny"}};
    CHECK_THROWS_AS(save_params(store, dir.file("bad.bin"), newline), ConfigError);
}

TEST_CASE("damaged parameter files are reported by failure mode") {
    ScratchDir dir;
    const std::string path = dir.file("model.bin");
    save_params(sample_store(), path, {{"k", "v"}});
    const std::string good = slurp(path);

    CHECK_THROWS_AS(load_params(dir.file("absent.bin")), DataError);

    const std::string garbage = dir.file("garbage.bin");
    spit(garbage, "not a parameter file at all");
    CHECK_THROWS_AS(load_params(garbage), DataError);

    std::string wrong_version = good;
    wrong_version[4] = 9;
    spit(dir.file("version.bin"), wrong_version);
    CHECK_THROWS_AS(load_params(dir.file("version.bin")), DataError);

    spit(dir.file("chopped.bin"), good.substr(0, good.size() - 3));
    CHECK_THROWS_AS(load_params(dir.file("chopped.bin")), DataError);

    spit(dir.file("header.bin"), good.substr(0, 7));
    CHECK_THROWS_AS(load_params(dir.file("header.bin")), DataError);
}

}  // TEST_SUITE
