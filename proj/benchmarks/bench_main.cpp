#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "tunnelwatch/dataset.hpp"
#include "tunnelwatch/dns_wire.hpp"
#include "tunnelwatch/features.hpp"
#include "tunnelwatch/model.hpp"
#include "tunnelwatch/network.hpp"

using namespace tunnelwatch;

namespace {

const Dataset& corpus() {
    static const Dataset d = generate_synthetic({.n_normal = 2000, .n_tunnel = 2000, .rng_seed = 1});
    return d;
}

void BM_ShannonEntropy(benchmark::State& state) {
    std::string s(static_cast<std::size_t>(state.range(0)), '\0');
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<char>('a' + i % 26);
    for (auto _ : state) benchmark::DoNotOptimize(shannon_entropy(s));
    state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ShannonEntropy)->Arg(16)->Arg(64)->Arg(253);

void BM_ExtractLex7(benchmark::State& state) {
    const auto& d = corpus();
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(extract_features(d.examples()[i].domain, FeatureSet::Lex7));
        i = (i + 1) % d.size();
    }
}
BENCHMARK(BM_ExtractLex7);

void BM_ParseDnsQuery(benchmark::State& state) {
    // mail.example.com plus www.example.com via a compression pointer
    const std::vector<std::uint8_t> msg{0x12, 0x34, 0x01, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
                                        0x04, 'm',  'a',  'i',  'l',  0x07, 'e',  'x',  'a',  'm',  'p',  'l',
                                        'e',  0x03, 'c',  'o',  'm',  0x00, 0x00, 0x01, 0x00, 0x01, 0x03, 'w',
                                        'w',  'w',  0xc0, 0x11, 0x00, 0x01, 0x00, 0x01};
    for (auto _ : state) benchmark::DoNotOptimize(parse_dns_message(msg));
}
BENCHMARK(BM_ParseDnsQuery);

void BM_NetworkForward(benchmark::State& state) {
    Rng rng(3);
    const NetworkParams net = init_network(kDnsClassifierShape, rng);
    Matrix batch(static_cast<std::size_t>(state.range(0)), 2);
    for (std::size_t r = 0; r < batch.rows(); ++r) {
        batch(r, 0) = rng.uniform();
        batch(r, 1) = rng.uniform();
    }
    for (auto _ : state) benchmark::DoNotOptimize(network_forward(net, batch));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_NetworkForward)->Arg(1)->Arg(256);

void BM_PredictByKind(benchmark::State& state) {
    const auto kind = base_model_kinds()[static_cast<std::size_t>(state.range(0))];
    state.SetLabel(std::string(to_string(kind)));
    const ModelArtifact m = train(kind, corpus(), FeatureSet::Core2, {});
    const auto& ex = corpus().examples();
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(predict(m, extract_features(ex[i].domain, FeatureSet::Core2)));
        i = (i + 1) % ex.size();
    }
}
BENCHMARK(BM_PredictByKind)->DenseRange(0, 9);

} // namespace

BENCHMARK_MAIN();
