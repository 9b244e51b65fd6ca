#include <benchmark/benchmark.h>

#include "floqflow/block.hpp"
#include "floqflow/dense.hpp"
#include "floqflow/flow.hpp"
#include "floqflow/models.hpp"
#include "floqflow/mpo.hpp"
#include "floqflow/pauli.hpp"

using namespace floqflow;

namespace {

models::ModelParams ising_params() {
    models::ModelParams p;
    p.J = 1;
    p.h_z = 0.7;
    p.h_x = 0.4;
    p.A = 0.5;
    p.omega = 3.5;
    return p;
}

void bm_dense_commutator(benchmark::State& state) {
    const int L = int(state.range(0));
    HilbertSpace space(L, 2, Boundary::periodic);
    auto ht = models::build_driven_ising(space, ising_params());
    auto a = dense::from_terms(ht.h0);
    auto b = dense::from_terms(ht.h1);
    for (auto _ : state) benchmark::DoNotOptimize(dense::commutator(a, b));
}

void bm_block_rhs(benchmark::State& state) {
    const int L = int(state.range(0));
    HilbertSpace space(L, 2, Boundary::periodic);
    auto ht = models::build_driven_ising(space, ising_params());
    auto basis = block::build_momentum_basis(space);
    block::Backend b(basis);
    flow::FlowState<block::Backend> st;
    st.h.omega = 3.5;
    st.h.h = {block::from_terms(*basis, ht.h0), block::from_terms(*basis, ht.h1)};
    for (auto _ : state) benchmark::DoNotOptimize(flow::flow_rhs_state(b, st));
}

void bm_string_commutator(benchmark::State& state) {
    const int L = int(state.range(0));
    HilbertSpace space(L, 2, Boundary::periodic);
    auto ht = models::build_driven_ising(space, ising_params());
    auto a = pauli::from_terms(ht.h0);
    auto b = pauli::from_terms(ht.h1);
    // densify a little so the benchmark sees a realistic string count
    auto c = pauli::string_commutator(a, b);
    auto d = pauli::string_commutator(a, c);
    for (auto _ : state) benchmark::DoNotOptimize(pauli::string_commutator(a, d));
}

void bm_mpo_commutator(benchmark::State& state) {
    const int L = int(state.range(0));
    models::ModelParams p = ising_params();
    p.L_J = 0.5;
    Eigen::MatrixXcd sx(2, 2), sz(2, 2);
    sx << 0, 0.5, 0.5, 0;
    sz << 0.5, 0, 0, -0.5;
    auto a = mpo::exponential_mpo(-p.J, p.L_J, Eigen::Vector4d(1, 0, 0, 0), sx,
                                  sx, p.h_x * sx + p.h_z * sz, L);
    auto b = mpo::local_sum_mpo(0.5 * p.A * sz, L);
    mpo::CompressionConfig cc;
    cc.max_bond = 32;
    for (auto _ : state) benchmark::DoNotOptimize(mpo::mpo_commutator(a, b, cc));
}

void bm_rk4_step_dense(benchmark::State& state) {
    const int L = int(state.range(0));
    HilbertSpace space(L, 2, Boundary::periodic);
    auto ht = models::build_driven_ising(space, ising_params());
    dense::Backend b(L);
    flow::FlowState<dense::Backend> st;
    st.h.omega = 3.5;
    st.h.h = {dense::from_terms(ht.h0), dense::from_terms(ht.h1)};
    flow::StepperConfig cfg;
    cfg.scheme = flow::Scheme::rk4_fixed;
    cfg.dl = 0.01;
    cfg.lambda_max = 0.01;
    for (auto _ : state) {
        auto s = st;
        benchmark::DoNotOptimize(flow::integrate_flow(b, std::move(s), cfg));
    }
}

}  // namespace

BENCHMARK(bm_dense_commutator)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_block_rhs)->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_string_commutator)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_mpo_commutator)->Arg(31)->Arg(61)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_rk4_step_dense)->Arg(8)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
