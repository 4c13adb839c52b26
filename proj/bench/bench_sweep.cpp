// Serial vs OpenMP sweeps over the two heaviest kernels: the Weyl tensor and
// the dual-route spray.  Workload is the square family on navigation data,
// the same construction the harness scenarios run.

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "finsler/gallery.hpp"
#include "finsler/metric.hpp"
#include "finsler/rng.hpp"
#include "finsler/sweep.hpp"

using namespace finsler;

namespace {

struct Workload {
    ABMetric metric;
    std::vector<Point> xs, ys;

    Workload() {
        NavigationData nd;
        nd.n = 3;
        nd.mu = 1.0;
        nd.k = 0.3;
        nd.a = {0.12, -0.08, 0.05};
        ABParams p{2.0, 0.0, -3.0, 2.0};
        metric = family_from_navigation(nd, p, TripleSource::family(p)).metric;
        for (int i = 0; i < 256; ++i) {
            Rng rng(substream_seed(4242, i));
            xs.push_back(random_chart_point(3, nd.mu, rng));
            Point y(3);
            double n2 = 0;
            do {
                n2 = 0;
                for (auto& c : y) {
                    c = rng.uniform(-1.0, 1.0);
                    n2 += c * c;
                }
            } while (n2 < 0.09);
            ys.push_back(y);
        }
    }
};

const Workload& load() {
    static const Workload w;
    return w;
}

double max_abs(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

void bench_sweep(benchmark::State& state, SweepMode mode, bool heavy) {
    const auto& w = load();
    const int n = static_cast<int>(state.range(0));
    const auto f = heavy ? std::function<double(int)>([&](int i) {
        return max_abs(weyl(w.metric, w.xs[i], w.ys[i]).W);
    })
                         : std::function<double(int)>([&](int i) {
        return finsler_spray(w.metric, w.xs[i], w.ys[i]).max_diff;
    });
    for (auto _ : state) {
        const auto r = sweep_max(n, f, mode);
        benchmark::DoNotOptimize(r.max_value);
    }
    state.SetItemsProcessed(state.iterations() * n);
}

} // namespace

BENCHMARK_CAPTURE(bench_sweep, weyl_serial, SweepMode::serial, true)
    ->Arg(16)
    ->Arg(64)
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();
BENCHMARK_CAPTURE(bench_sweep, weyl_parallel, SweepMode::parallel, true)
    ->Arg(16)
    ->Arg(64)
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();
BENCHMARK_CAPTURE(bench_sweep, spray_serial, SweepMode::serial, false)
    ->Arg(64)
    ->Arg(256)
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();
BENCHMARK_CAPTURE(bench_sweep, spray_parallel, SweepMode::parallel, false)
    ->Arg(64)
    ->Arg(256)
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

BENCHMARK_MAIN();
