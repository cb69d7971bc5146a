// Copyright 2026 The uapkit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <benchmark/benchmark.h>

#include "uap/architectures.hpp"
#include "uap/attacks.hpp"
#include "uap/linearizer.hpp"
#include "uap/rng.hpp"

namespace {

const uap::Model& mnist_model() {
  static const uap::Model m = [] {
    uap::Rng rng(7);
    return uap::Model::initialize(uap::mnist_cnn({1, 28, 28}, 10), rng);
  }();
  return m;
}

void BM_ExtractU(benchmark::State& state) {
  const uap::Model lin = uap::linearize(mnist_model());
  for (auto _ : state) benchmark::DoNotOptimize(uap::extract_u(lin));
}
BENCHMARK(BM_ExtractU)->Unit(benchmark::kMillisecond);

void BM_ExtractUBasisProbe(benchmark::State& state) {
  const uap::Model lin = uap::linearize(mnist_model());
  for (auto _ : state) benchmark::DoNotOptimize(uap::extract_u_basis_probe(lin));
}
BENCHMARK(BM_ExtractUBasisProbe)->Unit(benchmark::kMillisecond);

void BM_UniversalAttack(benchmark::State& state) {
  const uap::AffineMap map = uap::extract_u(uap::linearize(mnist_model()));
  for (auto _ : state) benchmark::DoNotOptimize(uap::universal_attack(map, 0.3));
}
BENCHMARK(BM_UniversalAttack);

void BM_BaselineAttack(benchmark::State& state) {
  uap::Rng rng(8);
  uap::Tensor x({1, 28, 28});
  for (float& v : x.mutable_data()) v = static_cast<float>(rng.uniform());
  for (auto _ : state) benchmark::DoNotOptimize(uap::baseline_attack(mnist_model(), x, 0.3));
}
BENCHMARK(BM_BaselineAttack)->Unit(benchmark::kMillisecond);

}  // namespace
