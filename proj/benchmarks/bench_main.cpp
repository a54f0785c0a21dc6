#include <benchmark/benchmark.h>

#include "evor/critic.hpp"
#include "evor/extraction.hpp"
#include "evor/flow.hpp"
#include "evor/nn/mlp.hpp"
#include "evor/oracle.hpp"
#include "evor/policy.hpp"
#include "evor/runtime.hpp"

using namespace evor;

namespace {

const bool kTuned = (tune_allocator(), true);

void BM_MlpForward(benchmark::State& st) {
  Rng rng(1);
  const int width = static_cast<int>(st.range(0)), B = static_cast<int>(st.range(1));
  const auto net = nn::Mlp<float>::init(nn::MlpSpec::make(32, {width, width}, 8, nn::Activation::gelu, true), rng);
  const Eigen::MatrixXf x = standard_normal<float>(32, B, rng);
  for (auto _ : st) benchmark::DoNotOptimize(net.forward(x));
  st.SetItemsProcessed(st.iterations() * B);
}
BENCHMARK(BM_MlpForward)->Args({64, 256})->Args({64, 1600})->Args({512, 256});

void BM_MlpForwardBackward(benchmark::State& st) {
  Rng rng(2);
  const int width = static_cast<int>(st.range(0)), B = static_cast<int>(st.range(1));
  const auto net = nn::Mlp<float>::init(nn::MlpSpec::make(32, {width, width}, 8, nn::Activation::gelu, true), rng);
  const Eigen::MatrixXf x = standard_normal<float>(32, B, rng);
  for (auto _ : st) {
    nn::Tape<float> tape;
    const Eigen::MatrixXf out = net.forward(x, tape);
    benchmark::DoNotOptimize(net.backward(tape, out));
  }
  st.SetItemsProcessed(st.iterations() * B);
}
BENCHMARK(BM_MlpForwardBackward)->Args({64, 256})->Args({512, 256});

void BM_EulerSample(benchmark::State& st) {
  Rng rng(3);
  const int steps = static_cast<int>(st.range(0)), B = static_cast<int>(st.range(1));
  const auto model = ConditionalFlowModel::init(FlowSpec{4, 24, false}, {64, 64}, nn::Activation::gelu, false, rng);
  const Eigen::MatrixXf cond = standard_normal<float>(24, B, rng);
  for (auto _ : st) benchmark::DoNotOptimize(euler_sample(model, cond, steps, rng));
  st.SetItemsProcessed(st.iterations() * B);
}
BENCHMARK(BM_EulerSample)->Args({10, 256})->Args({10, 1600})->Args({50, 256});

// One extraction decision on gridworld5 shapes: N_pi candidates x N returns.
void BM_ExtractAction(benchmark::State& st) {
  Rng rng(4);
  const auto env = make_env("gridworld5");
  BasePolicy pi(env->obs_dim(), env->action_space(), PolicyConfig{}, rng);
  RewardToGoCritic critic(env->obs_dim(), env->act_dim(), CriticConfig{}, rng);
  ExtractionConfig cfg;
  cfg.n_candidates = static_cast<int>(st.range(0));
  cfg.n_rtg = static_cast<int>(st.range(1));
  const Eigen::VectorXd obs = env->observe(env->reset(rng));
  for (auto _ : st) benchmark::DoNotOptimize(extract_action(pi, critic, obs, cfg, rng));
}
BENCHMARK(BM_ExtractAction)->Args({1, 50})->Args({4, 50})->Args({16, 50})->Args({32, 50})->Args({32, 10});

void BM_CriticTdUpdate(benchmark::State& st) {
  Rng rng(5);
  const int B = static_cast<int>(st.range(0));
  RewardToGoCritic critic(24, 4, CriticConfig{}, rng);
  TdBatch b;
  b.obs = standard_normal<float>(24, B, rng);
  b.action = standard_normal<float>(4, B, rng);
  b.next_obs = standard_normal<float>(24, B, rng);
  b.next_action = standard_normal<float>(4, B, rng);
  b.reward = Eigen::VectorXf::Zero(B);
  b.rtg = Eigen::VectorXf::Zero(B);
  b.terminal.assign(B, 0);
  for (auto _ : st) benchmark::DoNotOptimize(critic.td_update(b, nullptr, rng));
  st.SetItemsProcessed(st.iterations() * B);
}
BENCHMARK(BM_CriticTdUpdate)->Arg(256);

void BM_OracleGridworld(benchmark::State& st) {
  Gridworld5 env;
  for (auto _ : st) {
    benchmark::DoNotOptimize(soft_value_iteration(env, RefPolicySpec{}, 1.0, 0.99));
    benchmark::DoNotOptimize(exact_rtg_distribution(env, RefPolicySpec{}, 0.99));
  }
}
BENCHMARK(BM_OracleGridworld);

}  // namespace
BENCHMARK_MAIN();
