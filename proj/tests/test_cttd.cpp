#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "ttcast/cttd.hpp"

using namespace ttcast;
using testutil::fd_check;
using testutil::fill_uniform;

namespace {

// Random chain of `m` cores K×K×R_l×R_{l+1}.
template <class T>
cttd::CttdChain<T> random_chain(std::size_t m, std::size_t k, const std::vector<std::size_t>& ranks,
                                std::mt19937& rng) {
  cttd::CttdChain<T> chain;
  for (std::size_t l = 0; l < m; ++l) {
    auto core = Tensor<T>::zeros({k, k, ranks[l], ranks[l + 1]});
    fill_uniform(core, rng, -0.5, 0.5);
    chain.cores.push_back(core);
  }
  return chain;
}

// Inputs whose support keeps every cascade intermediate inside the grid, so
// the truncation-free dense composition is an exact oracle.
template <class T>
std::vector<Tensor<T>> interior_inputs(const cttd::CttdChain<T>& chain, std::size_t h,
                                       std::size_t w, std::mt19937& rng) {
  const std::size_t margin = chain.order() * (chain.kernel_size() - 1) / 2;
  std::vector<Tensor<T>> inputs;
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (std::size_t l = 0; l < chain.order(); ++l) {
    auto u = Tensor<T>::zeros({h, w, chain.cores[l].shape()[2]});
    auto& v = u.mutable_value();
    const std::size_t c = chain.cores[l].shape()[2];
    for (std::size_t i = margin; i + margin < h; ++i)
      for (std::size_t j = margin; j + margin < w; ++j)
        for (std::size_t ch = 0; ch < c; ++ch) v[(i * w + j) * c + ch] = static_cast<T>(d(rng));
    inputs.push_back(u);
  }
  return inputs;
}

// Dense oracle: Σ_l conv_same(U^l, compose(cores l..m)).
template <class T>
Tensor<T> dense_oracle(const cttd::CttdChain<T>& chain, const std::vector<Tensor<T>>& inputs) {
  const auto& s0 = inputs[0].shape();
  Tensor<T> out = Tensor<T>::zeros({s0[0], s0[1], chain.ranks().back()});
  for (std::size_t l = 0; l < chain.order(); ++l)
    out = add(out, conv2d(inputs[l], cttd::compose(chain, l)));
  return out;
}

}  // namespace

TEST_CASE("chain validation") {
  cttd::CttdChain<float> empty;
  CHECK_THROWS_AS(empty.validate(), ConfigError);

  cttd::CttdChain<float> bad;
  bad.cores.push_back(Tensor<float>::zeros({3, 3, 2, 3}));
  bad.cores.push_back(Tensor<float>::zeros({3, 3, 2, 1}));  // expects R=3 in
  CHECK_THROWS_AS(bad.validate(), ShapeError);

  std::mt19937 rng(0);
  auto ok = random_chain<float>(3, 3, {1, 2, 3, 4}, rng);
  CHECK_NOTHROW(ok.validate());
  CHECK(ok.ranks() == std::vector<std::size_t>{1, 2, 3, 4});
  CHECK(cttd::param_count(ok) == 9 * 1 * 2 + 9 * 2 * 3 + 9 * 3 * 4);
}

TEST_CASE("compose: single-tap kernels place the tap at the offset sum") {
  cttd::CttdChain<double> chain;
  auto c1 = Tensor<double>::zeros({3, 3, 1, 1});
  auto c2 = Tensor<double>::zeros({3, 3, 1, 1});
  c1.mutable_value()[0 * 3 + 2] = 2.0;  // (0,2)
  c2.mutable_value()[1 * 3 + 0] = 3.0;  // (1,0)
  chain.cores = {c1, c2};
  auto dense = cttd::compose(chain);
  REQUIRE(dense.shape() == std::vector<std::size_t>{5, 5, 1, 1});
  for (std::size_t x = 0; x < 5; ++x)
    for (std::size_t y = 0; y < 5; ++y)
      CHECK(dense.value()[x * 5 + y] == (x == 1 && y == 2 ? 6.0 : 0.0));
}

TEST_CASE("compose: all-ones 3x3 pair gives the 5x5 overlap-count kernel") {
  cttd::CttdChain<double> chain;
  chain.cores = {Tensor<double>::full({3, 3, 1, 1}, 1.0), Tensor<double>::full({3, 3, 1, 1}, 1.0)};
  auto dense = cttd::compose(chain);
  // separable triangle: t = (1,2,3,2,1), dense(x,y) = t[x]·t[y]
  const double t[5] = {1, 2, 3, 2, 1};
  for (std::size_t x = 0; x < 5; ++x)
    for (std::size_t y = 0; y < 5; ++y)
      CHECK(dense.value()[x * 5 + y] == t[x] * t[y]);
}

TEST_CASE("apply input validation") {
  std::mt19937 rng(1);
  auto chain = random_chain<float>(2, 3, {2, 2, 2}, rng);
  std::vector<Tensor<float>> wrong_count{Tensor<float>::zeros({4, 4, 2})};
  CHECK_THROWS_AS(cttd::apply(chain, wrong_count), ShapeError);
  std::vector<Tensor<float>> wrong_rank{Tensor<float>::zeros({4, 4, 3}),
                                        Tensor<float>::zeros({4, 4, 2})};
  CHECK_THROWS_AS(cttd::apply(chain, wrong_rank), ShapeError);
}

TEST_CASE("apply matches the dense composition oracle on interior support") {
  std::mt19937 rng(2);
  std::uniform_int_distribution<std::size_t> md(1, 3), rd(1, 3), gd(7, 8);
  std::uniform_int_distribution<int> kd(0, 1);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t m = md(rng), k = kd(rng) ? 3 : 1, g = gd(rng);
    std::vector<std::size_t> ranks;
    for (std::size_t l = 0; l <= m; ++l) ranks.push_back(rd(rng));
    auto chain = random_chain<double>(m, k, ranks, rng);
    auto inputs = interior_inputs(chain, g, g, rng);
    auto got = cttd::apply(chain, inputs);
    auto want = dense_oracle(chain, inputs);
    REQUIRE(got.shape() == want.shape());
    double worst = 0;
    for (std::size_t i = 0; i < got.size(); ++i)
      worst = std::max(worst, std::abs(got.value()[i] - want.value()[i]));
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("apply gradients vs finite differences") {
  std::mt19937 rng(3);
  auto chain = random_chain<double>(2, 3, {2, 2, 3}, rng);
  GradientContext<double> ctx;
  for (auto& core : chain.cores) ctx.track(core);
  auto inputs = interior_inputs(chain, 6, 6, rng);
  for (auto& u : inputs) ctx.track(u);
  auto target = Tensor<double>::zeros({6, 6, 3});
  fill_uniform(target, rng);
  auto loss = std::function<Tensor<double>()>(
      [&] { return mse_loss(cttd::apply(chain, inputs), target); });
  for (auto& core : chain.cores) CHECK(fd_check(ctx, core, loss) < 1e-4);
  for (auto& u : inputs) CHECK(fd_check(ctx, u, loss) < 1e-4);
}

TEST_CASE("compose stays off the gradient tape") {
  std::mt19937 rng(4);
  auto chain = random_chain<double>(2, 3, {1, 2, 1}, rng);
  for (auto& core : chain.cores) core.set_requires_grad(true);
  auto dense = cttd::compose(chain);
  CHECK_FALSE(dense.requires_grad());
  CHECK(dense.node()->parents.empty());
}

TEST_CASE("dense_equivalent_count closed form") {
  // m=3, K=3, ranks (8,8,8,32): extents 7,5,3 per stage.
  CHECK(cttd::dense_equivalent_count(3, 3, {8, 8, 8, 32}) ==
        std::size_t(49 * 8 * 32 + 25 * 8 * 32 + 9 * 8 * 32));
  CHECK_THROWS_AS(cttd::dense_equivalent_count(2, 3, {1, 1}), ConfigError);
  // factorized chain beats the dense equivalent at the paper-preset geometry
  std::mt19937 rng(5);
  auto chain = random_chain<float>(3, 3, {8, 8, 8, 32}, rng);
  CHECK(cttd::param_count(chain) * 4 < cttd::dense_equivalent_count(3, 3, {8, 8, 8, 32}));
}
