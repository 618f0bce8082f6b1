#include <vector>

#include <benchmark/benchmark.h>

#include "eepn/channel.hpp"
#include "eepn/constellation.hpp"
#include "eepn/cpr.hpp"
#include "eepn/fft.hpp"
#include "eepn/harness.hpp"

using namespace eepn;

namespace {

LinkConfig desk() {
    LinkConfig c;
    apply_profile(c, Profile::Desk);
    return c;
}

void BM_Fft(benchmark::State& state) {
    std::vector<cplx> data(static_cast<std::size_t>(state.range(0)), cplx(1.0, 0.5));
    for (auto _ : state) {
        Fft::forward(data);
        benchmark::DoNotOptimize(data.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Fft)->RangeMultiplier(2)->Range(1 << 14, 1 << 18);

void BM_RealizeLink(benchmark::State& state) {
    const LinkConfig c = desk();
    const auto con = build_qam(64);
    std::uint64_t r = 0;
    for (auto _ : state) benchmark::DoNotOptimize(realize_link(c, con, derive_stream(1, {r++})));
}
BENCHMARK(BM_RealizeLink)->Unit(benchmark::kMillisecond);

void BM_BpsTable(benchmark::State& state) {
    const auto con = build_qam(64);
    const auto rec = simulate_link(desk(), con, RngStream(1, 1));
    for (auto _ : state) {
        BpsDistanceTable table(rec.y, con, static_cast<std::size_t>(state.range(0)));
        benchmark::DoNotOptimize(table.at(0, 0));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rec.size()));
}
BENCHMARK(BM_BpsTable)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_BpsSelect(benchmark::State& state) {
    const auto con = build_qam(64);
    const auto rec = simulate_link(desk(), con, RngStream(1, 1));
    const BpsDistanceTable table(rec.y, con, 64);
    for (auto _ : state) benchmark::DoNotOptimize(table.select(static_cast<std::size_t>(state.range(0))));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rec.size()));
}
BENCHMARK(BM_BpsSelect)->Arg(30)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
