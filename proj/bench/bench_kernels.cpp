// Serial vs OpenMP kernels. Run with RANKPRIOR_THREADS to pin the thread count.

#include <cmath>
#include <vector>

#include <benchmark/benchmark.h>

#include "rankprior/npmle.hpp"
#include "rankprior/parallel.hpp"
#include "rankprior/posterior.hpp"
#include "rankprior/rng.hpp"

using namespace rankprior;

namespace {

std::vector<Observation> make_obs(std::size_t n) {
    Rng rng(42);
    std::vector<Observation> obs(n);
    for (auto& o : obs) {
        const double theta = 0.5 / std::pow(rng.uniform(), 0.5);
        const double s = 0.0001 + rng.exponential(50.0);
        o = {theta + s * rng.normal(), s};
    }
    return obs;
}

template <bool Parallel>
void posterior_means(benchmark::State& state) {
    const auto obs = make_obs(static_cast<std::size_t>(state.range(0)));
    const auto prior = PriorSpec::pareto(2.0, 0.5);
    for (auto _ : state) {
        auto v = Parallel ? kernels::posterior_means_parallel(prior, obs) : kernels::posterior_means_serial(prior, obs);
        benchmark::DoNotOptimize(v.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void em_step(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const std::size_t g = 400;
    Rng rng(7);
    std::vector<double> lik(n * g);
    for (auto& v : lik) v = rng.uniform();
    std::vector<double> w(g, 1.0 / g), next(g), grad(g);
    for (auto _ : state) {
        const double ll = Parallel ? kernels::mixture_em_step_parallel(lik, g, w, next, grad)
                                   : kernels::mixture_em_step_serial(lik, g, w, next, grad);
        benchmark::DoNotOptimize(ll);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(n * g));
}

}  // namespace

BENCHMARK(posterior_means<false>)->Name("posterior_means/serial")->Arg(1000)->Arg(10000);
BENCHMARK(posterior_means<true>)->Name("posterior_means/parallel")->Arg(1000)->Arg(10000);
BENCHMARK(em_step<false>)->Name("em_step/serial")->Arg(1000)->Arg(10000);
BENCHMARK(em_step<true>)->Name("em_step/parallel")->Arg(1000)->Arg(10000);

int main(int argc, char** argv) {
    parallel::apply_env_thread_cap();
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
