#include <doctest.h>

#include <cmath>
#include <random>

#include "llmkey/channel_model.hpp"
#include "llmkey/errors.hpp"
#include "test_support.hpp"

using namespace llmkey;
using llmkey::testing::TempDir;
using llmkey::testing::write_file;

namespace {

// Straight textbook Pearson, two-pass, long double accumulation.
double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
    long double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= x.size();
    my /= y.size();
    long double num = 0, dx = 0, dy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += (x[i] - mx) * (y[i] - my);
        dx += (x[i] - mx) * (x[i] - mx);
        dy += (y[i] - my) * (y[i] - my);
    }
    return static_cast<double>(num / std::sqrt(dx * dy));
}

ProbedTrace probed_from(std::vector<std::optional<double>> values) {
    ProbedTrace p;
    p.values = std::move(values);
    for (const auto& v : p.values) {
        p.mask.push_back(v.has_value());
        p.n_probed += v.has_value();
    }
    return p;
}

}  // namespace

TEST_SUITE("channel_model") {

TEST_CASE("perfect reciprocity without noise gives identical traces") {
    SyntheticChannelConfig cfg;
    cfg.rho = 1.0;
    cfg.measurement_noise_sigma = 0.0;
    cfg.n_total = 300;
    const auto [a, b] = generate_trace_pair(cfg);
    CHECK(a.values() == b.values());
    CHECK(a.party() == Party::Alice);
    CHECK(b.party() == Party::Bob);
}

TEST_CASE("empirical correlation approaches rho") {
    SyntheticChannelConfig cfg;
    cfg.rho = 0.95;
    cfg.n_total = 512;
    cfg.rng_seed = 7;
    const auto [a, b] = generate_trace_pair(cfg);
    const double r = pearson_oracle(a.values(), b.values());
    CHECK(std::abs(r - 0.95) <= 0.05);
    CHECK(pearson_correlation(a.values(), b.values()) == doctest::Approx(r).epsilon(1e-12));
}

TEST_CASE("generation is deterministic under a fixed seed") {
    SyntheticChannelConfig cfg;
    cfg.rng_seed = 99;
    const auto first = generate_trace_pair(cfg);
    const auto second = generate_trace_pair(cfg);
    CHECK(first.first.values() == second.first.values());
    CHECK(first.second.values() == second.second.values());

    cfg.rng_seed = 100;
    CHECK(generate_trace_pair(cfg).first.values() != first.first.values());
}

TEST_CASE("invalid synthetic configs are rejected") {
    SyntheticChannelConfig cfg;
    cfg.rho = 1.5;
    CHECK_THROWS_AS(generate_trace_pair(cfg), ConfigError);
    cfg.rho = -0.1;
    CHECK_THROWS_AS(generate_trace_pair(cfg), ConfigError);
    cfg = {};
    cfg.n_total = 1;
    CHECK_THROWS_AS(generate_trace_pair(cfg), ConfigError);
    cfg = {};
    cfg.measurement_noise_sigma = -1.0;
    CHECK_THROWS_AS(generate_trace_pair(cfg), ConfigError);
}

TEST_CASE("traces reject too-short and non-finite input") {
    CHECK_THROWS_AS(ChannelTrace(Party::Alice, {1.0}), ParameterError);
    CHECK_THROWS_AS(ChannelTrace(Party::Alice, {1.0, NAN}), ParameterError);
    CHECK_THROWS_AS(ChannelTrace(Party::Alice, {1.0, INFINITY}), ParameterError);
}

TEST_CASE("csv ingestion") {
    TempDir dir("llmkey-ingest");

    SUBCASE("rows 0..99 give a trace of length 100") {
        std::string text = "index,value\n";
        for (int i = 0; i < 100; ++i) text += std::to_string(i) + "," + std::to_string(-70 + 0.1 * i) + "\n";
        write_file(dir / "t.csv", text);
        const auto t = ingest_trace_csv(dir / "t.csv", Party::Bob);
        CHECK(t.size() == 100);
        CHECK(t.party() == Party::Bob);
        CHECK(t.values()[10] == doctest::Approx(-69.0));
    }
    SUBCASE("a malformed value names its row") {
        write_file(dir / "t.csv", "index,value\n0,1.0\n1,2.0\n2,3.0\n3,abc\n");
        try {
            ingest_trace_csv(dir / "t.csv", Party::Alice);
            FAIL("expected an ingestion error");
        } catch (const IngestError& e) {
            CHECK(std::string(e.what()).find("row 3") != std::string::npos);
        }
    }
    SUBCASE("an empty file is rejected") {
        write_file(dir / "t.csv", "");
        CHECK_THROWS_AS(ingest_trace_csv(dir / "t.csv", Party::Alice), IngestError);
    }
    SUBCASE("non-finite values are rejected") {
        write_file(dir / "t.csv", "index,value\n0,1.0\n1,nan\n");
        CHECK_THROWS_AS(ingest_trace_csv(dir / "t.csv", Party::Alice), IngestError);
        write_file(dir / "t.csv", "index,value\n0,1.0\n1,inf\n");
        CHECK_THROWS_AS(ingest_trace_csv(dir / "t.csv", Party::Alice), IngestError);
    }
    SUBCASE("indices must strictly increase") {
        write_file(dir / "t.csv", "index,value\n0,1.0\n2,2.0\n2,3.0\n");
        CHECK_THROWS_AS(ingest_trace_csv(dir / "t.csv", Party::Alice), IngestError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(ingest_trace_csv(dir / "absent.csv", Party::Alice), IngestError);
    }
    SUBCASE("written traces read back exactly") {
        const auto [a, b] = generate_trace_pair(SyntheticChannelConfig{});
        write_trace_csv(dir / "a.csv", a.values());
        CHECK(ingest_trace_csv(dir / "a.csv", Party::Alice).values() == a.values());
    }
}

TEST_CASE("skipped probing keeps floor(alpha * n) samples") {
    const ChannelTrace trace(Party::Alice, std::vector<double>(100, 0.0));
    SUBCASE("alpha = 0.1 of 100") {
        const auto p = skip_probe(trace, 0.1, 1);
        CHECK(p.n_probed == 10);
        CHECK(std::count(p.mask.begin(), p.mask.end(), true) == 10);
    }
    SUBCASE("full probing") {
        const auto p = skip_probe(trace, 1.0, 1);
        CHECK(p.n_probed == 100);
        for (std::size_t i = 0; i < p.size(); ++i) {
            CHECK(p.mask[i]);
            CHECK(p.values[i].has_value());
        }
    }
    SUBCASE("floor of 50.5") {
        const ChannelTrace odd(Party::Alice, std::vector<double>(101, 1.0));
        CHECK(skip_probe(odd, 0.5, 3).n_probed == 50);
    }
    SUBCASE("alpha outside (0, 1]") {
        CHECK_THROWS_AS(skip_probe(trace, 0.0, 1), ParameterError);
        CHECK_THROWS_AS(skip_probe(trace, -0.2, 1), ParameterError);
        CHECK_THROWS_AS(skip_probe(trace, 1.01, 1), ParameterError);
    }
}

TEST_CASE("property: probe count and mask consistency over random alpha and length") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> per_mille(1, 1000);
    std::uniform_int_distribution<int> length(2, 400);
    for (int trial = 0; trial < 500; ++trial) {
        const int k = per_mille(rng);
        const int n = length(rng);
        const double alpha = k / 1000.0;
        std::vector<double> v(static_cast<std::size_t>(n));
        std::iota(v.begin(), v.end(), 0.0);
        const auto p = skip_probe(ChannelTrace(Party::Alice, v), alpha, static_cast<std::uint64_t>(trial));
        // Integer-only oracle for floor(k/1000 * n).
        const auto expected = static_cast<std::size_t>((k * n) / 1000);
        REQUIRE(p.n_probed == expected);
        std::size_t count = 0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            REQUIRE(p.mask[i] == p.values[i].has_value());
            if (p.mask[i]) {
                REQUIRE(*p.values[i] == v[i]);
                ++count;
            }
        }
        REQUIRE(count == expected);
    }
}

TEST_CASE("a shared seed gives both parties the same schedule") {
    const auto [a, b] = generate_trace_pair(SyntheticChannelConfig{});
    const auto pa = skip_probe(a, 0.37, 1234);
    const auto pb = skip_probe(b, 0.37, 1234);
    CHECK(pa.mask == pb.mask);
    CHECK(skip_probe(a, 0.37, 1235).mask != pa.mask);
}

TEST_CASE("rescale and truncate") {
    SUBCASE("endpoints and midpoint") {
        const auto n = rescale_truncate(probed_from({-80.0, -60.0, -70.0}));
        CHECK(*n.values[0] == 0.0);
        CHECK(*n.values[1] == 1.0);
        CHECK(*n.values[2] == 0.5);
        CHECK(n.s_min == -80.0);
        CHECK(n.s_max == -60.0);
    }
    SUBCASE("truncation keeps two decimals") {
        const auto n = rescale_truncate(probed_from({0.0, 1.0, 0.6789}));
        CHECK(*n.values[2] == 0.67);
        CHECK(*n.values[1] == 1.0);
    }
    SUBCASE("absent positions stay absent and do not affect the range") {
        const auto n = rescale_truncate(probed_from({std::nullopt, 10.0, std::nullopt, 20.0, 15.0}));
        CHECK_FALSE(n.values[0].has_value());
        CHECK_FALSE(n.values[2].has_value());
        CHECK(*n.values[4] == 0.5);
        CHECK(n.present_count() == 3);
    }
    SUBCASE("flat traces are rejected") {
        CHECK_THROWS_AS(rescale_truncate(probed_from({-70.0, -70.0, std::nullopt})), DegenerateRangeError);
    }
    SUBCASE("fewer than two present values") {
        CHECK_THROWS_AS(rescale_truncate(probed_from({-70.0, std::nullopt})), ParameterError);
    }
}

TEST_CASE("property: normalized values are floor(100 v) / 100 of the exact scaling, monotone") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(-70.0, 8.0);
    std::bernoulli_distribution present(0.7);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::optional<double>> vals(64);
        for (auto& v : vals) {
            if (present(rng)) v = g(rng);
        }
        vals[0] = -100.0;
        vals[1] = -40.0;
        const auto n = rescale_truncate(probed_from(vals));
        std::vector<std::pair<double, double>> pairs;
        for (std::size_t i = 0; i < vals.size(); ++i) {
            REQUIRE(vals[i].has_value() == n.values[i].has_value());
            if (!vals[i]) continue;
            const double v = *n.values[i];
            REQUIRE(v >= 0.0);
            REQUIRE(v <= 1.0);
            const double hundredths = v * 100.0;
            REQUIRE(std::abs(hundredths - std::round(hundredths)) < 1e-9);
            const double exact = (*vals[i] + 100.0) / 60.0;
            REQUIRE(std::round(hundredths) == std::floor(exact * 100.0 + 1e-9));
            pairs.emplace_back(*vals[i], v);
        }
        std::sort(pairs.begin(), pairs.end());
        for (std::size_t i = 1; i < pairs.size(); ++i) REQUIRE(pairs[i - 1].second <= pairs[i].second);
    }
}

TEST_CASE("mask export") {
    TempDir dir("llmkey-mask");
    const ChannelTrace trace(Party::Alice, {1.0, 2.0, 3.0, 4.0});
    const auto p = skip_probe(trace, 0.5, 9);
    write_mask_csv(dir / "mask.csv", p);
    const std::string text = llmkey::testing::read_file(dir / "mask.csv");
    CHECK(text.rfind("index,probed\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 5);
}

}  // TEST_SUITE
