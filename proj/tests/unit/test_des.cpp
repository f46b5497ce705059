#include "dmapar/des.hpp"
#include "dmapar/error.hpp"
#include "dmapar/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace dmapar;

namespace {

TopologySpec one_server(int flows = 1) {
    TopologySpec t;
    t.servers = {{"S", 100e6, 2}};
    for (int k = 0; k < flows; ++k) t.flows.push_back({"f" + std::to_string(k), {"S"}, k, "", ""});
    return t;
}

}  // namespace

TEST_SUITE("des") {

TEST_CASE("single packet transmission time") {
    auto r = simulate(one_server(), {{"f0", {{0.0, 1000.0}}}});
    REQUIRE(r.delays["f0"].size() == 1);
    CHECK(r.delays["f0"][0] == doctest::Approx(80e-6).epsilon(1e-12));
    CHECK(r.injected == 1u);
    CHECK(r.departed == 1u);
}

TEST_CASE("strict priority on simultaneous arrival") {
    for (int rep = 0; rep < 5; ++rep) {
        SimConfig cfg;
        cfg.record_packets = true;
        auto r = simulate(one_server(2), {{"f0", {{1.0, 500.0}}}, {"f1", {{1.0, 500.0}}}}, cfg);
        CHECK(r.packets["f0"][0].departure < r.packets["f1"][0].departure);
    }
}

TEST_CASE("non-preemptive and FIFO within a queue") {
    SimConfig cfg;
    cfg.record_packets = true;
    // Low priority starts first; the high-priority packet waits for it.
    auto r = simulate(one_server(2), {{"f0", {{1e-6, 1000.0}}}, {"f1", {{0.0, 1000.0}}}}, cfg);
    CHECK(r.packets["f1"][0].departure == doctest::Approx(80e-6));
    CHECK(r.packets["f0"][0].departure == doctest::Approx(160e-6));

    auto f = simulate(one_server(), {{"f0", {{0.0, 1000.0}, {0.0, 10.0}, {1e-6, 10.0}}}}, cfg);
    CHECK(f.packets["f0"][0].departure < f.packets["f0"][1].departure);
    CHECK(f.packets["f0"][1].departure < f.packets["f0"][2].departure);
}

TEST_CASE("tandem adds transmission times") {
    TopologySpec t;
    t.servers = {{"A", 100e6, 2}, {"B", 50e6, 2}};
    t.flows = {{"f", {"A", "B"}, 0, "", ""}};
    auto r = simulate(t, {{"f", {{0.0, 1000.0}}}});
    CHECK(r.delays["f"][0] == doctest::Approx(80e-6 + 160e-6));
}

TEST_CASE("M/D/1 mean wait") {
    Rng rng = make_rng(3);
    const double size = 1250.0, c = 100e6, D = 8 * size / c, load = 0.5;
    const double lambda = load / D;
    std::vector<Packet> p;
    p.reserve(1000000);
    double t = 0.0;
    for (int k = 0; k < 1000000; ++k) {
        t += standard_exponential(rng) / lambda;
        p.push_back({t, size});
    }
    auto r = simulate(one_server(), {{"f0", p}});
    const auto& d = r.delays["f0"];
    double wait = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size()) - D;
    double ref = load / (2 * (1 - load)) * D;
    CHECK(wait == doctest::Approx(ref).epsilon(0.1));
}

TEST_CASE("packets from slots") {
    DiscretizedTrace tr{{0, 3000, 0, 500}, 1e-3};
    auto p = packets_from_slots(tr, 1500);
    REQUIRE(p.size() == 3);
    CHECK(p[0].time == doctest::Approx(1e-3));
    CHECK(p[0].size == 1500.0);
    CHECK(p[2].time == doctest::Approx(3e-3));
    auto whole = packets_from_slots(tr);
    CHECK(whole.size() == 2u);
}

TEST_CASE("empirical quantile") {
    std::vector<double> d(100);
    std::iota(d.begin(), d.end(), 1.0);
    CHECK(empirical_quantile(d, 0.05, false) == 95.0);
    CHECK(empirical_quantile({1, 2, 3, 4}, 0.5, false) == 2.0);
    try {
        empirical_quantile(d, 0.05);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InsufficientSamples);
    }
    std::vector<double> big(1000, 1.0);
    CHECK(empirical_quantile(big, 0.01) == 1.0);
}

TEST_CASE("compare bound") {
    std::vector<double> q(1000, 4e-3);
    auto a = compare_bound(q, 10e-3, 0.01);
    CHECK(a.reliable);
    CHECK(a.tightness == doctest::Approx(2.5));
    CHECK_FALSE(compare_bound(q, 3e-3, 0.01).reliable);
    auto same = compare_bound(q, 4e-3, 0.01);
    CHECK(same.reliable);
    CHECK(same.tightness == doctest::Approx(1.0));
}

TEST_CASE("missing source") {
    CHECK_THROWS_AS(simulate(one_server(2), {{"f0", {{0.0, 1.0}}}}), Error);
}

}
