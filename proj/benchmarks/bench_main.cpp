#include "dmapar/des.hpp"
#include "dmapar/envelope.hpp"
#include "dmapar/io.hpp"
#include "dmapar/map.hpp"
#include "dmapar/model.hpp"
#include "dmapar/rng.hpp"
#include "dmapar/snc.hpp"
#include "dmapar/trace.hpp"

#include <benchmark/benchmark.h>

#include <filesystem>

using namespace dmapar;

namespace {

DMaparHmm scenario(const char* name) {
    return load_model((std::filesystem::path(DMAPAR_DATA_DIR) / "scenarios" / name).string());
}

void BM_SigmaRhoPoint(benchmark::State& state) {
    DMaparHmm m = scenario("model_b.json");
    double th = 1.0 / (mean_slot_bytes(m) / on_fraction(m));
    for (auto _ : state) benchmark::DoNotOptimize(sigma_rho(m, th));
}
BENCHMARK(BM_SigmaRhoPoint);

void BM_ArrivalEnvelope(benchmark::State& state) {
    DMaparHmm m = scenario("model_a.json");
    auto grid = default_theta_grid(mean_slot_bytes(m) / on_fraction(m));
    RConfig r;
    r.method = RMethod::Identity;
    for (auto _ : state) benchmark::DoNotOptimize(arrival_envelope(m, grid, r));
}
BENCHMARK(BM_ArrivalEnvelope)->Unit(benchmark::kMillisecond);

void BM_Generate(benchmark::State& state) {
    DMaparHmm m = scenario("model_c.json");
    Rng rng = make_rng(1);
    for (auto _ : state) benchmark::DoNotOptimize(generate(m, static_cast<std::size_t>(state.range(0)), rng));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Generate)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
    TopologySpec topo = load_topology((std::filesystem::path(DMAPAR_DATA_DIR) / "scenarios/three_flow_topology.json").string());
    DMaparHmm m = scenario("model_a.json");
    std::map<std::string, std::vector<Packet>> src;
    for (std::size_t k = 0; k < topo.flows.size(); ++k) {
        Rng rng = make_rng(1, k + 1);
        src[topo.flows[k].id] = packets_from_slots(generate(m, 100000, rng).trace, 1500.0);
    }
    for (auto _ : state) benchmark::DoNotOptimize(simulate(topo, src));
}
BENCHMARK(BM_Simulate)->Unit(benchmark::kMillisecond);

void BM_DiscreteRefine(benchmark::State& state) {
    ContinuousMap truth;
    truth.C0 = Mat{{-60.0, 10.0}, {5.0, -400.0}};
    truth.C1 = Mat{{40.0, 10.0}, {45.0, 350.0}};
    Rng rng = make_rng(2);
    auto counts = sample_map(discretize_map(truth, 1e-3), 50000, rng);
    ContinuousMap c;
    c.C0 = Mat{{-100.0, 20.0}, {20.0, -200.0}};
    c.C1 = Mat{{40.0, 40.0}, {80.0, 100.0}};
    DiscreteMap init = discretize_map(c, 1e-3);
    for (auto _ : state) benchmark::DoNotOptimize(refine_discrete_map(counts, init, Vec::Constant(2, 0.5), 20));
}
BENCHMARK(BM_DiscreteRefine)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
