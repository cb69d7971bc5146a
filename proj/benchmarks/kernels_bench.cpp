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

#include "uap/kernels.hpp"
#include "uap/rng.hpp"

namespace {

uap::Tensor random_tensor(const uap::Shape& shape, uap::Rng& rng) {
  uap::Tensor t(shape);
  for (float& v : t.mutable_data()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

void BM_AffineForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  uap::Rng rng(1);
  const uap::Tensor x = random_tensor({n, 1600}, rng);
  const uap::Tensor w = random_tensor({1024, 1600}, rng), b = random_tensor({1024}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(uap::affine_forward(x, w, b));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}
BENCHMARK(BM_AffineForward)->Arg(1)->Arg(64);

void BM_Conv2dForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  uap::Rng rng(2);
  const uap::Tensor x = random_tensor({n, 32, 13, 13}, rng);
  const uap::Tensor k = random_tensor({64, 32, 3, 3}, rng), b = random_tensor({64}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(uap::conv2d_forward(x, k, b, {}));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}
BENCHMARK(BM_Conv2dForward)->Arg(1)->Arg(64);

void BM_Conv2dBackward(benchmark::State& state) {
  uap::Rng rng(3);
  const uap::Tensor x = random_tensor({64, 32, 13, 13}, rng);
  const uap::Tensor k = random_tensor({64, 32, 3, 3}, rng);
  const uap::Tensor g = random_tensor({64, 64, 11, 11}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(uap::conv2d_backward(x, k, g, {}));
}
BENCHMARK(BM_Conv2dBackward);

void BM_MaxPool(benchmark::State& state) {
  uap::Rng rng(4);
  const uap::Tensor x = random_tensor({64, 32, 26, 26}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(uap::pool2d_forward(x, uap::PoolMode::kMax, 2, 2));
  }
}
BENCHMARK(BM_MaxPool);

}  // namespace
