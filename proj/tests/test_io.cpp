#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "zvonkin/io.hpp"

using namespace zvonkin;
using Catch::Approx;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(std::string p) : path(std::move(p)) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("kv writer emits stable block layout") {
    std::ostringstream out;
    KvWriter w(out);
    w.block("run");
    w.kv("scenario", "ou-baseline");
    w.kv("seed", std::uint64_t{42});
    w.kv("dt", 0.001);
    w.kv("ok", true);
    w.block("norms");
    w.list("orders", {1.0, 2.0});
    REQUIRE(out.str() ==
            "[run]\n"
            "scenario = ou-baseline\n"
            "seed = 42\n"
            "dt = 0.001\n"
            "ok = true\n"
            "\n"
            "[norms]\n"
            "orders = 1, 2\n");
}

TEST_CASE("tables hold aligned columns and round trip doubles") {
    TempFile tmp("zv_test_table.dat");
    write_table(tmp.path, "t mean", {{0.0, 0.5}, {1.0, 2.0}});
    std::ifstream in(tmp.path);
    std::stringstream buf;
    buf << in.rdbuf();
    REQUIRE(buf.str() == "# t mean\n0 1\n0.5 2\n");

    REQUIRE_THROWS_AS(write_table(tmp.path, "bad", {{0.0}, {1.0, 2.0}}), ConfigError);
    REQUIRE_THROWS_AS(write_table(tmp.path, "bad", {}), ConfigError);
}

TEST_CASE("file hash matches the reference vector") {
    TempFile tmp("zv_test_hash.bin");
    {
        std::ofstream out(tmp.path, std::ios::binary);
        out << "abc";
    }
    REQUIRE(hash_file(tmp.path) == 0xe71fa2190541574bull);
    REQUIRE_THROWS_AS(hash_file("no_such_file_here"), ConfigError);
}

TEST_CASE("field hash separates values and declarations") {
    Grid g(1, 1.0, 0.5, 1.0, 0.5);
    auto mk = [&](double v, double alpha) {
        return SpaceTimeField::sample(g, 1, alpha, 2.0,
                                      [v](double, const double*, int) { return v; }, true);
    };
    std::uint64_t base = hash_field(mk(1.0, 1.0));
    REQUIRE(base == hash_field(mk(1.0, 1.0)));
    REQUIRE(base != hash_field(mk(1.0 + 1e-15, 1.0)));
    REQUIRE(base != hash_field(mk(1.0, 0.5)));
}

TEST_CASE("transform cache round trips the solution bit for bit") {
    Grid g(1, 2.0, 0.1, 0.5, 0.025);
    DriftDiffusion in;
    in.b = SpaceTimeField::sample(g, 1, 1.0, 2.0,
                                  [](double, const double* x, int) { return -x[0]; }, true);
    Transform tr = select_lambda(in);
    std::uint64_t key = hash_field(in.b);

    TempFile tmp("zv_test_transform_cache.txt");
    save_transform(tmp.path, key, tr, {"lambda=1 accepted", "second line"});

    std::vector<std::string> notes;
    auto back = load_transform(tmp.path, key, &notes);
    REQUIRE(back.has_value());
    REQUIRE(notes == std::vector<std::string>{"lambda=1 accepted", "second line"});
    REQUIRE(back->lambda() == tr.lambda());
    REQUIRE(back->certificate().sup_grad_u == tr.certificate().sup_grad_u);
    REQUIRE(back->certificate().margin == tr.certificate().margin);
    REQUIRE(back->solution().backend == tr.solution().backend);

    for (double x : {-1.3, -0.2, 0.7}) {
        for (double t : {0.0, 0.2, 0.5}) {
            double a, b;
            tr.phi(t, &x, &a);
            back->phi(t, &x, &b);
            REQUIRE(a == b);
            double y = a;
            tr.psi(t, &y, &a);
            back->psi(t, &y, &b);
            REQUIRE(a == b);
        }
    }

    // wrong key reads as a miss, as does a tampered certificate
    REQUIRE(!load_transform(tmp.path, key + 1).has_value());
    REQUIRE(!load_transform("no_such_cache.txt", key).has_value());

    std::ifstream src(tmp.path);
    std::stringstream buf;
    buf << src.rdbuf();
    std::string text = buf.str();
    auto pos = text.find("sup_grad_u = ");
    text.replace(pos, std::string("sup_grad_u = ").size(), "sup_grad_u = 9");
    {
        std::ofstream out(tmp.path);
        out << text;
    }
    REQUIRE(!load_transform(tmp.path, key).has_value());

    {
        std::ofstream out(tmp.path);
        out << "[transform]\ninput_hash = totally\n";
    }
    REQUIRE(!load_transform(tmp.path, key).has_value());
}
