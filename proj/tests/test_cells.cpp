#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "ttcast/cells.hpp"

using namespace ttcast;
using testutil::fd_check;
using testutil::fill_uniform;

TEST_CASE("split_gates ordering is (input, forget, candidate, output)") {
  std::vector<double> v(1 * 1 * 8);
  for (std::size_t i = 0; i < 8; ++i) v[i] = static_cast<double>(i);
  auto pre = Tensor<double>::from({1, 1, 8}, v);
  auto g = cells::split_gates(pre, 2);
  CHECK(g.input.value() == std::vector<double>{0, 1});
  CHECK(g.forget.value() == std::vector<double>{2, 3});
  CHECK(g.candidate.value() == std::vector<double>{4, 5});
  CHECK(g.output.value() == std::vector<double>{6, 7});
}

TEST_CASE("lstm_update closed form on scalars") {
  // gates = (i, f, c̃, o) = (0.3, -0.2, 0.8, 1.1), memory = 0.5
  auto gates = Tensor<double>::from({1, 1, 4}, {0.3, -0.2, 0.8, 1.1});
  auto memory = Tensor<double>::from({1, 1, 1}, {0.5});
  auto [h, c] = cells::lstm_update(gates, memory, 1);
  auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  const double want_c = sig(-0.2) * 0.5 + sig(0.3) * std::tanh(0.8);
  const double want_h = sig(1.1) * std::tanh(want_c);
  CHECK(c.scalar() == doctest::Approx(want_c).epsilon(1e-12));
  CHECK(h.scalar() == doctest::Approx(want_h).epsilon(1e-12));
}

TEST_CASE("ConvLstmCell: zero input with bias-only gates matches the closed form") {
  std::mt19937 rng(1);
  cells::ConvLstmCell<double> cell(1, 1, 3, rng);
  // zero the weights, set gate biases to (i,f,c̃,o) = (0.4, 1.0, -0.6, 0.2)
  std::fill(cell.w_input().mutable_value().begin(), cell.w_input().mutable_value().end(), 0.0);
  std::fill(cell.t_hidden().mutable_value().begin(), cell.t_hidden().mutable_value().end(), 0.0);
  cell.bias().mutable_value() = {0.4, 1.0, -0.6, 0.2};
  cell.reset(3, 3);
  auto h1 = cell.step(Tensor<double>::zeros({3, 3, 1}));
  auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  const double c1 = sig(0.4) * std::tanh(-0.6);
  const double want = sig(0.2) * std::tanh(c1);
  for (double v : h1.value()) CHECK(v == doctest::Approx(want).epsilon(1e-12));
  // second step folds the previous memory through the forget gate
  auto h2 = cell.step(Tensor<double>::zeros({3, 3, 1}));
  const double c2 = sig(1.0) * c1 + sig(0.4) * std::tanh(-0.6);
  const double want2 = sig(0.2) * std::tanh(c2);
  for (double v : h2.value()) CHECK(v == doctest::Approx(want2).epsilon(1e-12));
}

TEST_CASE("ConvLstmCell: forget bias initialized to one, weights within fan-in bound") {
  std::mt19937 rng(2);
  cells::ConvLstmCell<double> cell(2, 3, 3, rng);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(cell.bias().value()[c] == 0.0);          // input gate
    CHECK(cell.bias().value()[3 + c] == 1.0);      // forget gate
    CHECK(cell.bias().value()[6 + c] == 0.0);      // candidate
    CHECK(cell.bias().value()[9 + c] == 0.0);      // output gate
  }
  const double limit = std::sqrt(1.0 / (3.0 * 3.0 * 2.0));
  for (double v : cell.w_input().value()) CHECK(std::abs(v) <= limit);
}

TEST_CASE("PittCellConfig validation") {
  cells::PittCellConfig bad;
  bad.order = 3;
  bad.steps = 2;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.steps = 3;
  bad.kernel = 4;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("first-order reduction: m=n=1 kind=none PITT cell embeds a ConvLSTM") {
  // Window kernel restricted to its center tap acts as a pure channel map A;
  // the single chain core B then makes the hidden path equal to one 3x3
  // convolution with kernel A·B, which a vanilla ConvLSTM realizes directly.
  const std::size_t C = 2, R = 3, K = 3, H = 5, W = 4;
  std::mt19937 rng(3);
  cells::PittCellConfig cfg;
  cfg.in_channels = C;
  cfg.channels = C;
  cfg.kernel = K;
  cfg.order = 1;
  cfg.steps = 1;
  cfg.rank = R;
  cfg.kind = physics::Kind::none;
  cells::PittConvLstmCell<double> pitt(cfg, rng);

  auto& wk = pitt.window_kernels()[0];  // K×K×1×C×R
  {
    std::mt19937 wrng(4);
    std::fill(wk.mutable_value().begin(), wk.mutable_value().end(), 0.0);
    std::uniform_real_distribution<double> d(-0.5, 0.5);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t r = 0; r < R; ++r)
        wk.mutable_value()[(((1 * K + 1) * 1 + 0) * C + c) * R + r] = d(wrng);
  }
  auto& core = pitt.chain().cores[0];  // K×K×R×4C
  fill_uniform(core, rng, -0.5, 0.5);

  std::mt19937 rng2(5);
  cells::ConvLstmCell<double> conv(C, C, K, rng2);
  conv.w_input().mutable_value() = pitt.w_input().value();
  conv.bias().mutable_value() = pitt.bias().value();
  // t_hidden(ki,kj) = A · B(ki,kj)
  auto& th = conv.t_hidden().mutable_value();
  std::fill(th.begin(), th.end(), 0.0);
  for (std::size_t ki = 0; ki < K; ++ki)
    for (std::size_t kj = 0; kj < K; ++kj)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t g = 0; g < 4 * C; ++g) {
          double acc = 0;
          for (std::size_t r = 0; r < R; ++r)
            acc += wk.value()[(((1 * K + 1) * 1 + 0) * C + c) * R + r] *
                   core.value()[((ki * K + kj) * R + r) * 4 * C + g];
          th[((ki * K + kj) * C + c) * 4 * C + g] = acc;
        }

  pitt.reset(H, W);
  conv.reset(H, W);
  std::mt19937 xrng(6);
  NoGradGuard ng;
  for (int t = 0; t < 20; ++t) {
    auto x = Tensor<double>::zeros({H, W, C});
    fill_uniform(x, xrng);
    auto hp = pitt.step(x);
    auto hc = conv.step(x);
    double worst = 0;
    for (std::size_t i = 0; i < hp.size(); ++i)
      worst = std::max(worst, std::abs(hp.value()[i] - hc.value()[i]));
    CHECK(worst < 1e-5);
  }
  CHECK(pitt.physics_loss().scalar() == 0.0);
}

TEST_CASE("PITT history discipline") {
  std::mt19937 rng(7);
  cells::PittCellConfig cfg;
  cfg.in_channels = 1;
  cfg.channels = 2;
  cfg.order = 2;
  cfg.steps = 4;
  cfg.rank = 2;
  cells::PittConvLstmCell<double> cell(cfg, rng);
  CHECK_THROWS_AS(cell.window_map(), ContractError);

  cell.reset(4, 4);
  REQUIRE(cell.history().size() == 4);
  for (const auto& h : cell.history())
    for (double v : h.value()) CHECK(v == 0.0);

  NoGradGuard ng;
  auto x = Tensor<double>::zeros({4, 4, 1});
  fill_uniform(x, rng);
  auto h1 = cell.step(x);
  CHECK(cell.history().size() == 4);  // window length is invariant
  CHECK(cell.history().front().value() == h1.value());

  // maps have rank channels, one per order
  auto maps = cell.window_map();
  REQUIRE(maps.size() == 2);
  for (const auto& m : maps) CHECK(m.shape() == std::vector<std::size_t>{4, 4, 2});
}

TEST_CASE("physics loss accumulates across steps and resets") {
  std::mt19937 rng(8);
  cells::PittCellConfig cfg;
  cfg.in_channels = 1;
  cfg.channels = 2;
  cfg.order = 2;
  cfg.steps = 2;
  cfg.rank = 2;
  cfg.kind = physics::Kind::diffusion;
  cells::PittConvLstmCell<double> cell(cfg, rng);
  cell.reset(4, 4);
  NoGradGuard ng;
  auto x = Tensor<double>::zeros({4, 4, 1});
  fill_uniform(x, rng);
  cell.step(x);
  const double after1 = cell.physics_loss().scalar();
  cell.step(x);
  const double after2 = cell.physics_loss().scalar();
  CHECK(after2 >= after1);
  CHECK(after2 > 0.0);
  cell.reset(4, 4);
  CHECK(cell.physics_loss().scalar() == 0.0);
}

TEST_CASE("named_params covers every tensor exactly once") {
  std::mt19937 rng(9);
  cells::PittCellConfig cfg;
  cfg.in_channels = 2;
  cfg.channels = 3;
  cfg.order = 2;
  cfg.steps = 3;
  cfg.rank = 2;
  cfg.kind = physics::Kind::wave;
  cells::PittConvLstmCell<double> cell(cfg, rng);
  auto params = cell.named_params();
  // w_input, bias, 2 window kernels, 2 physics maps, 2 cores, physics_coeff
  CHECK(params.size() == 9);
  std::set<std::string> names;
  for (auto& [n, p] : params) {
    CHECK(p != nullptr);
    names.insert(n);
  }
  CHECK(names.size() == params.size());
  CHECK(names.count("physics_coeff") == 1);

  cfg.kind = physics::Kind::none;
  cells::PittConvLstmCell<double> plain(cfg, rng);
  CHECK(plain.named_params().size() == 8);
}

TEST_CASE("whole-cell gradients vs finite differences (tiny scale)") {
  std::mt19937 rng(10);
  cells::PittCellConfig cfg;
  cfg.in_channels = 1;
  cfg.channels = 2;
  cfg.order = 2;
  cfg.steps = 2;
  cfg.rank = 2;
  cfg.kind = physics::Kind::wave;
  cells::PittConvLstmCell<double> cell(cfg, rng);
  GradientContext<double> ctx;
  auto params = cell.named_params();
  for (auto& [n, p] : params) ctx.track(*p);

  auto x1 = Tensor<double>::zeros({3, 3, 1});
  auto x2 = Tensor<double>::zeros({3, 3, 1});
  auto target = Tensor<double>::zeros({3, 3, 2});
  fill_uniform(x1, rng);
  fill_uniform(x2, rng);
  fill_uniform(target, rng);

  auto loss = std::function<Tensor<double>()>([&] {
    cell.reset(3, 3);
    cell.step(x1);
    auto h = cell.step(x2);
    return add(mse_loss(h, target), scale(cell.physics_loss(), 0.1));
  });
  for (auto& [n, p] : params) {
    INFO("param ", n);
    CHECK(fd_check(ctx, *p, loss, 1e-5) < 1e-3);
  }
}
