#include "oracles.hpp"

#include "dmapar/error.hpp"
#include "dmapar/trace.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace dmapar;

namespace {

TraceSeries parse(const std::string& text) {
    std::istringstream in(text);
    return parse_trace(in);
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Refused;  // nothing thrown
}

}  // namespace

TEST_SUITE("trace") {

TEST_CASE("parse two rows") {
    auto t = parse("0.0,100\n0.5,200\n");
    REQUIRE(t.records.size() == 2);
    CHECK(t.records[0].size == 100.0);
    CHECK(t.records[1].size == 200.0);
}

TEST_CASE("parse sorts records and skips a header") {
    auto t = parse("timestamp_s,size_bytes\n2,1\n0,3\n1,2\n");
    REQUIRE(t.records.size() == 3);
    CHECK(t.records[0].timestamp == 0.0);
    CHECK(t.records[1].timestamp == 1.0);
    CHECK(t.records[2].size == 1.0);
}

TEST_CASE("parse errors") {
    CHECK(code_of([] { parse("0,1\nabc,100\n"); }) == ErrorCode::Parse);
    CHECK(code_of([] { parse("0,-1\n"); }) == ErrorCode::Parse);
    CHECK(code_of([] { parse(""); }) == ErrorCode::EmptyTrace);
}

TEST_CASE("default dt is mean inter-arrival over 40") {
    CHECK(default_dt(parse("0,1\n1,1\n2,1\n")) == doctest::Approx(0.025).epsilon(1e-12));
    CHECK(default_dt(parse("0,1\n4,1\n")) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(code_of([] { default_dt(parse("0,1\n")); }) == ErrorCode::Undefined);
}

TEST_CASE("discretize bins into right-closed slots") {
    auto d = discretize(parse("0,10\n0.03,5\n0.11,7\n"), 0.05);
    REQUIRE(d.a.size() == 3);
    CHECK(d.a[0] == 15.0);
    CHECK(d.a[1] == 0.0);
    CHECK(d.a[2] == 7.0);
    CHECK(code_of([] { discretize(parse("0,1\n"), 0.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("discretize conserves bytes") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::ostringstream os;
    double total = 0.0;
    for (int k = 0; k < 500; ++k) {
        double s = std::floor(u(rng) * 100.0);
        total += s;
        os << u(rng) << ',' << s << '\n';
    }
    auto d = discretize(parse(os.str()), 0.013);
    double sum = 0.0;
    for (double x : d.a) sum += x;
    CHECK(sum == doctest::Approx(total).epsilon(1e-12));
}

TEST_CASE("demodulate splits runs") {
    DiscretizedTrace t{{0, 0, 5, 3, 0, 4}, 1.0};
    auto d = demodulate(t);
    CHECK(d.y == std::vector<double>{5, 3, 4});
    CHECK(d.tau_off == std::vector<std::uint64_t>{2, 1});
    CHECK(d.tau_on == std::vector<std::uint64_t>{2, 1});
    CHECK_FALSE(d.first_on);

    auto on = demodulate({{1, 1, 1}, 1.0});
    CHECK(on.tau_off.empty());
    CHECK(on.tau_on == std::vector<std::uint64_t>{3});

    auto off = demodulate({{0, 0}, 1.0});
    CHECK(off.y.empty());
    CHECK(off.tau_off == std::vector<std::uint64_t>{2});
}

TEST_CASE("remodulate inverts demodulate") {
    std::mt19937_64 rng(11);
    std::bernoulli_distribution on(0.4);
    for (int rep = 0; rep < 20; ++rep) {
        DiscretizedTrace t{{}, 0.5};
        for (int k = 0; k < 200; ++k) t.a.push_back(on(rng) ? 1.0 + k : 0.0);
        auto back = remodulate(demodulate(t), t.dt);
        CHECK(back.a == t.a);
    }
}

TEST_CASE("cv") {
    std::vector<double> c{5, 5, 5};
    CHECK(cv(c) == 0.0);
    std::vector<double> two{0, 2};
    CHECK(cv(two) == doctest::Approx(1.0));
}

TEST_CASE("hurst of white noise is one half") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z;
    double acc = 0.0;
    for (int s = 0; s < 5; ++s) {
        std::vector<double> x(100000);
        for (double& v : x) v = z(rng);
        acc += hurst(x);
    }
    CHECK(acc / 5.0 == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("hurst tracks fractional Gaussian noise") {
    for (double H : {0.3, 0.5, 0.7, 0.8}) {
        double acc = 0.0;
        for (std::uint64_t s = 1; s <= 3; ++s) acc += hurst(oracle::fgn(100000, H, s));
        CAPTURE(H);
        CHECK(std::abs(acc / 3.0 - H) < 0.015);
    }
}

TEST_CASE("hurst rejects degenerate input") {
    std::vector<double> c(1000, 2.0);
    CHECK(code_of([&] { hurst(c); }) == ErrorCode::InsufficientData);
    std::vector<double> small(10, 1.0);
    CHECK(code_of([&] { hurst(small); }) == ErrorCode::InsufficientData);
}

}
