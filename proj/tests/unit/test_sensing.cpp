#include <doctest.h>

#include <cmath>
#include <random>

#include "llmkey/errors.hpp"
#include "llmkey/sensing.hpp"

using namespace llmkey;

namespace {

KeyBits random_key(std::size_t n, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(0.5);
    std::vector<std::uint8_t> bits(n);
    for (auto& b : bits) b = coin(rng);
    return KeyBits(bits);
}

std::vector<double> random_unit(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

}  // namespace

TEST_SUITE("sensing") {

TEST_CASE("config defaults and validation") {
    SensingConfig cfg;
    CHECK(cfg.sparse_len() == 636);
    CHECK(cfg.rows_key() == 382);
    CHECK(cfg.rows_chk() == 64);
    CHECK(cfg.theta == 100.0);
    CHECK_NOTHROW(cfg.validate());

    cfg.key_len = 4;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.m_key = 637;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.m_chk = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.theta = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.zero_gap = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("default operators") {
    SUBCASE("deterministic in (seed, tag, dims)") {
        CHECK(default_operator(20, 30, 5, "a") == default_operator(20, 30, 5, "a"));
    }
    SUBCASE("stream tags separate") {
        CHECK(default_operator(20, 30, 5, "a") != default_operator(20, 30, 5, "b"));
        CHECK(default_operator(20, 30, 5, "a") != default_operator(20, 30, 6, "a"));
    }
    SUBCASE("entries have mean 0 and variance 1/rows") {
        const Matrix a = default_operator(1000, 1000, 42, "stats");
        double sum = 0.0;
        double sq = 0.0;
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            for (Eigen::Index j = 0; j < a.cols(); ++j) {
                sum += a(i, j);
                sq += a(i, j) * a(i, j);
            }
        }
        const double count = 1e6;
        CHECK(std::abs(sum / count) <= 0.01);
        CHECK(sq / count == doctest::Approx(1.0 / 1000).epsilon(0.01));
    }
    SUBCASE("zero dimensions") {
        CHECK_THROWS_AS(default_operator(0, 3, 1, "x"), ParameterError);
        CHECK_THROWS_AS(default_operator(3, 0, 1, "x"), ParameterError);
    }
}

TEST_CASE("circulant layout") {
    const std::vector<double> r{1, 2, 3};
    Matrix expected(3, 3);
    expected << 1, 3, 2,
                2, 1, 3,
                3, 2, 1;
    CHECK(circulant(r) == expected);

    const std::vector<double> c{7.5};
    CHECK(circulant(c) == Matrix::Constant(1, 1, 7.5));
    CHECK_THROWS_AS(circulant(std::vector<double>{}), ParameterError);

    std::mt19937_64 rng(8);
    const auto v = random_unit(5, rng);
    const Matrix m = circulant(v);
    for (int i = 1; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) CHECK(m(i, (j + 1) % 5) == m(i - 1, j));
    }
    for (int i = 0; i < 5; ++i) CHECK(m(i, 0) == v[static_cast<std::size_t>(i)]);
}

TEST_CASE("perturbation vectors") {
    const std::vector<double> s{0.2, 0.4, 0.6};
    const Vector direct = perturbation_vector(s, 3, 100.0);
    CHECK(direct[0] == doctest::Approx(0.002));
    CHECK(direct[2] == doctest::Approx(0.006));

    const Vector tiled = perturbation_vector(std::vector<double>{0.2, 0.4}, 5, 100.0);
    REQUIRE(tiled.size() == 5);
    const double want[] = {0.002, 0.004, 0.002, 0.004, 0.002};
    for (int i = 0; i < 5; ++i) CHECK(tiled[i] == doctest::Approx(want[i]));

    CHECK(perturbation_vector(std::vector<double>(4, 1.0), 4, 1.0) == Vector::Ones(4));
    CHECK_THROWS_AS(perturbation_vector(std::vector<double>{}, 4, 1.0), ParameterError);
    CHECK_THROWS_AS(perturbation_vector(s, 4, 0.0), ParameterError);
}

TEST_CASE("operator construction") {
    SensingConfig cfg;
    cfg.key_len = 16;
    cfg.zero_gap = 2;
    const int l = cfg.sparse_len();
    const Matrix a0_key = default_operator(cfg.rows_key(), l, cfg.a0_seed, kKeyStreamTag);
    const Matrix a0_chk = default_operator(cfg.rows_chk(), cfg.key_len, cfg.a0_seed, kCheckStreamTag);

    SUBCASE("zero recovery leaves the defaults untouched") {
        const auto ops = build_operators(cfg, std::vector<double>(40, 0.0), Party::Alice);
        CHECK(ops.a_key == a0_key);
        CHECK(ops.a_chk == a0_chk);
    }
    SUBCASE("equal recovered traces give equal operators") {
        std::mt19937_64 rng(2);
        const auto rec = random_unit(50, rng);
        const auto a = build_operators(cfg, rec, Party::Alice);
        const auto b = build_operators(cfg, rec, Party::Bob);
        CHECK(a.a_key == b.a_key);
        CHECK(a.a_chk == b.a_chk);
    }
    SUBCASE("A = A0 (I + E) with |E| <= 1/theta") {
        std::mt19937_64 rng(4);
        for (int trial = 0; trial < 10; ++trial) {
            const auto rec = random_unit(20 + trial * 7, rng);
            const auto ops = build_operators(cfg, rec, Party::Alice);
            CHECK(ops.e_key.cwiseAbs().maxCoeff() <= 1.0 / cfg.theta);
            CHECK(ops.e_chk.cwiseAbs().maxCoeff() <= 1.0 / cfg.theta);
            const Matrix ik = Matrix::Identity(l, l) + ops.e_key;
            const Matrix ic = Matrix::Identity(cfg.key_len, cfg.key_len) + ops.e_chk;
            CHECK((ops.a_key - a0_key * ik).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((ops.a_chk - a0_chk * ic).cwiseAbs().maxCoeff() < 1e-12);
            CHECK(ops.a_key.rows() == cfg.rows_key());
            CHECK(ops.a_key.cols() == l);
        }
    }
}

TEST_CASE("sparsify and desparsify") {
    const Vector two = sparsify(KeyBits({1, 1}), 4);
    Vector want2(6);
    want2 << 1, 0, 0, 0, 0, 1;
    CHECK(two == want2);

    const Vector three = sparsify(KeyBits({1, 0, 1}), 4);
    CHECK(three.size() == 11);
    CHECK(three[0] == 1.0);
    CHECK(three[10] == 1.0);
    CHECK(three.sum() == 2.0);

    const KeyBits k({1, 0, 0, 1, 1});
    CHECK(sparsify(k, 0) == k.to_real());

    Vector off = Vector::Zero(11);
    off[1] = 3.0;
    off[7] = -2.0;
    CHECK(desparsify(off, 4) == Vector::Zero(3));

    CHECK_THROWS_AS(desparsify(Vector::Zero(7), 4), DimensionError);
    CHECK_THROWS_AS(desparsify(Vector::Zero(0), 4), DimensionError);

    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const auto key = random_key(128, rng);
        const Vector s = sparsify(key, 4);
        REQUIRE(s.size() == 636);
        REQUIRE((s.array() != 0.0).count() <= 128);
        REQUIRE(desparsify(s, 4) == key.to_real());
    }
}

TEST_CASE("compression") {
    SensingConfig cfg;
    cfg.key_len = 16;
    std::mt19937_64 rng(31);
    const auto ops = build_operators(cfg, random_unit(30, rng), Party::Alice);

    SUBCASE("zero key") {
        const auto syn = compress(KeyBits::zeros(16), ops);
        CHECK(syn.syn1 == Vector::Zero(cfg.rows_key()));
        CHECK(syn.syn2 == Vector::Zero(cfg.rows_chk()));
    }
    SUBCASE("single bit selects a column") {
        for (int j : {0, 5, 15}) {
            std::vector<std::uint8_t> bits(16, 0);
            bits[static_cast<std::size_t>(j)] = 1;
            const auto syn = compress(KeyBits(bits), ops);
            CHECK(syn.syn1 == ops.a_key.col(j * (cfg.zero_gap + 1)));
            CHECK(syn.syn2 == ops.a_chk.col(j));
        }
    }
    SUBCASE("matches a naive triple loop") {
        const auto key = random_key(16, rng);
        const auto syn = compress(key, ops);
        // Build the sparse key and multiply entry by entry.
        std::vector<double> sparse(static_cast<std::size_t>(cfg.sparse_len()), 0.0);
        for (int i = 0; i < 16; ++i) sparse[static_cast<std::size_t>(i * (cfg.zero_gap + 1))] = key[static_cast<std::size_t>(i)];
        for (Eigen::Index r = 0; r < ops.a_key.rows(); ++r) {
            double acc = 0.0;
            for (Eigen::Index c = 0; c < ops.a_key.cols(); ++c) acc += ops.a_key(r, c) * sparse[static_cast<std::size_t>(c)];
            CHECK(std::abs(syn.syn1[r] - acc) <= 1e-12);
        }
        for (Eigen::Index r = 0; r < ops.a_chk.rows(); ++r) {
            double acc = 0.0;
            for (Eigen::Index c = 0; c < ops.a_chk.cols(); ++c) acc += ops.a_chk(r, c) * key[static_cast<std::size_t>(c)];
            CHECK(std::abs(syn.syn2[r] - acc) <= 1e-12);
        }
    }
    SUBCASE("linear over the reals") {
        for (int trial = 0; trial < 20; ++trial) {
            const auto k1 = random_key(16, rng);
            const auto k2 = random_key(16, rng);
            const auto s1 = compress(k1, ops);
            const auto s2 = compress(k2, ops);
            const Vector sum_sparse = sparsify(k1, cfg.zero_gap) + sparsify(k2, cfg.zero_gap);
            CHECK(((s1.syn1 + s2.syn1) - ops.a_key * sum_sparse).cwiseAbs().maxCoeff() <= 1e-12);
            CHECK(((s1.syn2 + s2.syn2) - ops.a_chk * (k1.to_real() + k2.to_real())).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(compress(KeyBits::zeros(12), ops), DimensionError);
    }
}

TEST_CASE("syndrome wire format") {
    Syndrome syn{Vector(3), Vector(2)};
    syn.syn1 << 1.5, -0.25, 1e-300;
    syn.syn2 << 0.0, -7.0;
    const auto bytes = encode_syndrome(syn);

    REQUIRE(bytes.size() == 16 + 8 * 5);
    CHECK(bytes[0] == 'L');
    CHECK(bytes[3] == 'Y');
    CHECK(bytes[4] == 1);   // version, little-endian
    CHECK(bytes[8] == 3);   // M1
    CHECK(bytes[12] == 2);  // M2
    // 1.5 = 0x3FF8000000000000, little-endian.
    CHECK(bytes[16] == 0x00);
    CHECK(bytes[22] == 0xF8);
    CHECK(bytes[23] == 0x3F);

    const Syndrome back = decode_syndrome(bytes);
    CHECK(back.syn1 == syn.syn1);
    CHECK(back.syn2 == syn.syn2);

    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode_syndrome(bad), ParseError);
    bad = bytes;
    bad.pop_back();
    CHECK_THROWS_AS(decode_syndrome(bad), ParseError);
    bad = bytes;
    bad[4] = 9;
    CHECK_THROWS_AS(decode_syndrome(bad), ParseError);

    const Syndrome from_json = syndrome_from_json(syndrome_to_json(syn));
    CHECK(from_json.syn1 == syn.syn1);
    CHECK(from_json.syn2 == syn.syn2);
    CHECK_THROWS_AS(syndrome_from_json("{\"syn1\": [1]}"), ParseError);
}

}  // TEST_SUITE
