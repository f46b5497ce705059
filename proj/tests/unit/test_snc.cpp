#include "dmapar/des.hpp"
#include "dmapar/error.hpp"
#include "dmapar/snc.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace dmapar;

namespace {

const std::vector<double> kGrid{1e-6, 1e-5, 1e-4, 1e-3};

SigmaRhoEnvelope constant(EnvelopeKind kind, double sigma, double rho, double dt = 1e-4) {
    SigmaRhoEnvelope e;
    e.kind = kind;
    e.dt = dt;
    for (double th : kGrid) {
        SigmaRhoPoint p;
        p.theta = th;
        p.sigma = sigma;
        p.rho = rho;
        p.valid = true;
        e.points.push_back(p);
    }
    return e;
}

DMaparHmm poisson(double lambda, double dt, double bytes = 1.0) {
    BaselineSpec b;
    b.name = "poisson";
    b.dt = dt;
    b.lambda = lambda;
    return scale_amplitudes(from_baseline(b), bytes);
}

RConfig identity_r() {
    RConfig r;
    r.method = RMethod::Identity;
    return r;
}

TopologySpec tandem(bool cross_both) {
    TopologySpec t;
    t.servers = {{"S1", 100e6, 2}, {"S2", 100e6, 2}};
    t.flows = {{"f", {"S1", "S2"}, 1, "", ""},
               {"x", cross_both ? std::vector<std::string>{"S1", "S2"} : std::vector<std::string>{"S1"}, 0, "", ""}};
    return t;
}

}  // namespace

TEST_SUITE("snc") {

TEST_CASE("constant-rate service") {
    auto s = constant_rate_service(100e6, kGrid);
    for (auto& p : s.points) {
        CHECK(p.sigma == 0.0);
        CHECK(p.rho == doctest::Approx(12.5e6));
    }
    CHECK(s.deterministic);
    CHECK(constant_rate_service(35e6, kGrid).points[0].rho == doctest::Approx(35e6 / 8));
    CHECK_THROWS_AS(constant_rate_service(0.0, kGrid), Error);
}

TEST_CASE("aggregate") {
    auto a = constant(EnvelopeKind::Arrival, 100, 1e6);
    auto z = constant(EnvelopeKind::Arrival, 0, 0);
    auto s = aggregate(a, z);
    for (std::size_t k = 0; k < kGrid.size(); ++k) {
        CHECK(s.points[k].sigma == a.points[k].sigma);
        CHECK(s.points[k].rho == a.points[k].rho);
    }
    auto b = constant(EnvelopeKind::Arrival, 7, 3e5);
    auto ab = aggregate(a, b), ba = aggregate(b, a);
    for (std::size_t k = 0; k < kGrid.size(); ++k) {
        CHECK(ab.points[k].sigma == ba.points[k].sigma);
        CHECK(ab.points[k].rho == ba.points[k].rho);
    }
}

TEST_CASE("aggregate of two Bernoulli flows is the closed form of the sum") {
    const double dt = 1e-3, lambda = 100;
    std::vector<double> grid{0.1, 1.0, 3.0};
    auto one = arrival_envelope(poisson(lambda, dt), grid, identity_r());
    auto sum = aggregate(one, one);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        double th = grid[k], q = lambda * dt;
        double ref = 2.0 * std::log(1 - q + q * std::exp(th)) / (th * dt);
        CHECK(std::abs(sum.points[k].rho - ref) <= 1e-9 * ref);
    }
}

TEST_CASE("leftover") {
    auto s = constant_rate_service(100e6, kGrid);
    auto cross = constant(EnvelopeKind::Arrival, 500, 30e6 / 8);
    auto l = leftover(s, cross);
    for (auto& p : l.points) {
        CHECK(p.valid);
        CHECK(p.sigma == doctest::Approx(500));
        CHECK(p.rho == doctest::Approx(70e6 / 8));
    }
    auto id = leftover(s, constant(EnvelopeKind::Arrival, 0, 0));
    CHECK(id.points[0].rho == doctest::Approx(12.5e6));
    auto over = leftover(s, constant(EnvelopeKind::Arrival, 0, 13e6));
    for (auto& p : over.points) CHECK_FALSE(p.valid);
}

TEST_CASE("concatenation") {
    ConcatOptions o;
    o.dt_ref = 1e-4;
    auto s = constant_rate_service(100e6, kGrid);
    auto c = concatenate(s, s, o);
    for (auto& p : c.points) {
        CHECK(p.rho == doctest::Approx(12.5e6 * (1 - 1e-3)).epsilon(1e-12));
        CHECK(std::isfinite(p.sigma));
        CHECK(p.sigma >= 0.0);
    }

    // A faster second server disturbs less and less.
    auto slow = constant(EnvelopeKind::Service, 0, 1e6);
    double prev = std::numeric_limits<double>::infinity();
    for (double r : {1e7, 1e8, 1e9}) {
        auto fast = constant(EnvelopeKind::Service, 0, r);
        auto cc = concatenate(slow, fast, o);
        double gap = std::abs(cc.points[2].sigma);
        CHECK(cc.points[2].rho == doctest::Approx(1e6));
        CHECK(gap < prev);
        prev = gap;
    }

    auto a = constant(EnvelopeKind::Service, 0, 3e6), b = constant(EnvelopeKind::Service, 0, 5e6),
         d = constant(EnvelopeKind::Service, 0, 4e6);
    auto left = concatenate(concatenate(a, b, o), d, o), right = concatenate(a, concatenate(b, d, o), o);
    CHECK(left.points[1].rho == right.points[1].rho);
}

TEST_CASE("topology validation") {
    TopologySpec t = tandem(true);
    auto order = t.validate();
    CHECK(order == std::vector<std::string>{"S1", "S2"});

    TopologySpec cyc;
    cyc.servers = {{"A", 1e6, 2}, {"B", 1e6, 2}};
    cyc.flows = {{"f", {"A", "B"}, 0, "", ""}, {"g", {"B", "A"}, 0, "", ""}};
    try {
        cyc.validate();
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotFeedForward);
    }

    TopologySpec missing = t;
    missing.flows[0].path = {"S9"};
    CHECK_THROWS_AS(missing.validate(), Error);

    TopologySpec prio = t;
    prio.flows[0].priority = 5;
    CHECK_THROWS_AS(prio.validate(), Error);
}

TEST_CASE("highest-priority flow sees the bare concatenation") {
    TopologySpec t;
    for (const char* s : {"S1", "S2", "S3", "S4", "S5", "S6", "S7"}) t.servers.push_back({s, 100e6, 2});
    t.flows = {{"f1", {"S1", "S2", "S5", "S6", "S7"}, 0, "", ""},
               {"f2", {"S3", "S2", "S5", "S6"}, 1, "", ""},
               {"f3", {"S4", "S5", "S6", "S7"}, 1, "", ""}};
    std::vector<double> grid{1e-5, 1e-4, 1e-3};
    std::map<std::string, SigmaRhoEnvelope> arr;
    for (const auto& f : t.flows) arr[f.id] = arrival_envelope(poisson(500, 1e-4, 1000), grid, identity_r(), f.id);
    auto e2e = pmoo_e2e(t, "f1", arr);
    // Constant-rate hops merge exactly; the generic concatenation is looser.
    auto ref = constant_rate_service(100e6, grid);
    ConcatOptions o;
    o.dt_ref = 1e-4;
    auto generic = ref;
    for (int k = 1; k < 5; ++k) generic = concatenate(generic, constant_rate_service(100e6, grid), o);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        CHECK(e2e.points[k].rho == doctest::Approx(ref.points[k].rho).epsilon(1e-12));
        CHECK(e2e.points[k].sigma == doctest::Approx(ref.points[k].sigma).epsilon(1e-12));
        CHECK(generic.points[k].rho <= e2e.points[k].rho);
        CHECK(generic.points[k].sigma >= e2e.points[k].sigma);
    }
    auto f2 = pmoo_e2e(t, "f2", arr);
    CHECK(f2.points[1].rho < e2e.points[1].rho);
}

TEST_CASE("single server with one cross flow is a leftover") {
    TopologySpec t;
    t.servers = {{"S", 100e6, 2}};
    t.flows = {{"f", {"S"}, 1, "", ""}, {"x", {"S"}, 0, "", ""}};
    std::vector<double> grid{1e-5, 1e-4};
    std::map<std::string, SigmaRhoEnvelope> arr;
    arr["f"] = arrival_envelope(poisson(500, 1e-4, 1000), grid, identity_r());
    arr["x"] = arrival_envelope(poisson(800, 1e-4, 1000), grid, identity_r());
    auto e2e = pmoo_e2e(t, "f", arr);
    auto ref = leftover(constant_rate_service(100e6, grid), arr["x"]);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        CHECK(e2e.points[k].rho == doctest::Approx(ref.points[k].rho).epsilon(1e-12));
        CHECK(e2e.points[k].sigma == doctest::Approx(ref.points[k].sigma).epsilon(1e-12));
    }
}

TEST_CASE("a shared segment is paid for once") {
    TopologySpec t = tandem(true);
    std::vector<double> grid{1e-5, 1e-4, 1e-3};
    std::map<std::string, SigmaRhoEnvelope> arr;
    arr["f"] = arrival_envelope(poisson(2000, 1e-4, 1000), grid, identity_r());
    arr["x"] = arrival_envelope(poisson(3000, 1e-4, 1000), grid, identity_r());
    auto pm = pmoo_e2e(t, "f", arr);
    auto hh = hop_by_hop_e2e(t, "f", arr);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        REQUIRE(pm.points[k].valid);
        REQUIRE(hh.points[k].valid);
        CHECK(pm.points[k].sigma < hh.points[k].sigma);
    }
    CHECK(delay_bound(arr["f"], pm, 1e-4).value <= delay_bound(arr["f"], hh, 1e-4).value);
}

TEST_CASE("delay and backlog bounds") {
    std::vector<double> grid = log_grid(1e-7, 1e-2, 40);
    auto a = arrival_envelope(poisson(4000, 1e-5, 1000), grid, identity_r());
    auto s = constant_rate_service(100e6, grid);
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {1e-6, 1e-4, 1e-2}) {
        auto d = delay_bound(a, s, eps);
        CHECK(std::isfinite(d.value));
        CHECK(d.value <= prev);
        CHECK(d.value <= d.grid_value + 1e-15);
        prev = d.value;
    }
    auto b1 = backlog_bound(a, s, 1e-4), b2 = backlog_bound(a, s, 1e-2);
    CHECK(b1.value > b2.value);

    auto hot = arrival_envelope(poisson(20000, 1e-5, 1000), grid, identity_r());
    try {
        delay_bound(hot, s, 1e-3);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Unstable);
    }
}

TEST_CASE("deterministic flow backlog shrinks with epsilon") {
    auto a = constant(EnvelopeKind::Arrival, 0, 1e6);
    auto s = constant(EnvelopeKind::Service, 0, 2e6);
    double b1 = backlog_bound(a, s, 1e-3).value, b2 = backlog_bound(a, s, 0.5).value;
    CHECK(b2 > 0.0);
    CHECK(b2 < b1);
}

TEST_CASE("Poisson bounds hold against simulation") {
    const double dt = 1e-5, lambda = 4000, bytes = 1000;
    auto m = poisson(lambda, dt, bytes);
    std::vector<double> grid = default_theta_grid(bytes);
    auto a = arrival_envelope(m, grid, identity_r());
    auto s = constant_rate_service(100e6, grid);
    const double eps = 1e-2;
    double d = delay_bound(a, s, eps).value, b = backlog_bound(a, s, eps).value;
    TopologySpec t;
    t.servers = {{"S", 100e6, 2}};
    t.flows = {{"f", {"S"}, 0, "", ""}};
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng = make_rng(seed, 1);
        auto g = generate(m, 400000, rng);
        auto res = simulate(t, {{"f", packets_from_slots(g.trace)}});
        CHECK(empirical_quantile(res.delays["f"], eps) <= d);
        CHECK(empirical_quantile(res.backlog["S"], eps) <= b);
    }
}

TEST_CASE("grids") {
    auto g = log_grid(1e-3, 1.0, 4);
    REQUIRE(g.size() == 4);
    CHECK(g[0] == doctest::Approx(1e-3));
    CHECK(g[3] == doctest::Approx(1.0));
    auto d = default_theta_grid(1000);
    CHECK(d.size() == 64);
    CHECK(d.front() == doctest::Approx(1e-9));
    CHECK(d.back() == doctest::Approx(1e-2));
}

}
