#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "capolab/policy.hpp"
#include "capolab/rng.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

using namespace capolab;

namespace {

PolicyParams make_params(int contexts, int actions) {
  return PolicyParams(contexts, actions);
}

// Finite-difference oracle for a scalar function of the logits.
template <typename F>
Matrix fd_gradient(PolicyParams params, F f, double h = 1e-6) {
  Matrix g(params.logits.rows, params.logits.cols);
  for (int i = 0; i < params.logits.rows; ++i) {
    for (int j = 0; j < params.logits.cols; ++j) {
      const double orig = params.logits(i, j);
      params.logits(i, j) = orig + h;
      const double up = f(params);
      params.logits(i, j) = orig - h;
      const double down = f(params);
      params.logits(i, j) = orig;
      g(i, j) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

}  // namespace

TEST_CASE("uniform policy probabilities and log-prob") {
  auto params = make_params(2, 4);
  auto probs = action_probabilities(params, 0);
  REQUIRE(probs.size() == 4);
  for (double p : probs) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(log_prob(params, 0, 2) ==
        doctest::Approx(-1.3862943611198906).epsilon(1e-12));
}

TEST_CASE("softmax is invariant to shifting a context row") {
  auto params = make_params(1, 3);
  params.logits(0, 0) = 0.3;
  params.logits(0, 1) = -1.2;
  params.logits(0, 2) = 2.0;
  auto before = action_probabilities(params, 0);
  const double lp_before = log_prob(params, 0, 1);
  for (int j = 0; j < 3; ++j) params.logits(0, j) += 1234.5;
  auto after = action_probabilities(params, 0);
  for (int j = 0; j < 3; ++j)
    CHECK(after[j] == doctest::Approx(before[j]).epsilon(1e-12));
  CHECK(log_prob(params, 0, 1) == doctest::Approx(lp_before).epsilon(1e-12));
}

TEST_CASE("extreme logits stay finite and normalized") {
  auto params = make_params(1, 3);
  params.logits(0, 0) = 1000.0;
  params.logits(0, 1) = -1000.0;
  params.logits(0, 2) = 0.0;
  auto probs = action_probabilities(params, 0);
  double total = 0.0;
  for (double p : probs) {
    CHECK(std::isfinite(p));
    total += p;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(log_prob(params, 0, 0) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(log_prob(params, 0, 1) <= 0.0);
}

TEST_CASE("log-prob gradient matches finite differences") {
  auto params = make_params(2, 3);
  params.logits(0, 0) = 0.5;
  params.logits(0, 1) = -0.25;
  params.logits(0, 2) = 0.75;
  params.logits(1, 0) = -1.0;
  params.logits(1, 1) = 0.0;
  params.logits(1, 2) = 2.0;
  for (int ctx = 0; ctx < 2; ++ctx) {
    for (int act = 0; act < 3; ++act) {
      auto analytic = logprob_gradient(params, ctx, act);
      auto numeric = fd_gradient(
          params, [&](const PolicyParams& p) { return log_prob(p, ctx, act); });
      for (int i = 0; i < analytic.rows; ++i)
        for (int j = 0; j < analytic.cols; ++j)
          CHECK(analytic(i, j) ==
                doctest::Approx(numeric(i, j)).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("log-prob gradient structure: onehot minus probabilities") {
  auto params = make_params(2, 3);
  params.logits(0, 1) = 1.5;
  auto grad = logprob_gradient(params, 0, 1);
  auto probs = action_probabilities(params, 0);
  for (int j = 0; j < 3; ++j) {
    const double expect = (j == 1 ? 1.0 : 0.0) - probs[j];
    CHECK(grad(0, j) == doctest::Approx(expect).epsilon(1e-12));
  }
  // The unvisited context row must be untouched.
  for (int j = 0; j < 3; ++j) CHECK(grad(1, j) == 0.0);
}

TEST_CASE("entropy of deterministic-vs-uniform rows") {
  auto params = make_params(2, 3);
  params.logits(0, 0) = 60.0;  // effectively deterministic in double precision
  auto ent0 = policy_entropy(params, 0);
  auto ent1 = policy_entropy(params, 1);
  CHECK(ent0 == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(ent1 == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(mean_policy_entropy(params) ==
        doctest::Approx(0.5 * (ent0 + ent1)).epsilon(1e-12));
  // Mean over the documented two-row example: (0 + ln 3) / 2.
  CHECK(mean_policy_entropy(params) ==
        doctest::Approx(0.5493061443340548).epsilon(1e-6));
}

TEST_CASE("KL matches the hand-computed two-action example") {
  // p = (0.75, 0.25) vs q = (0.5, 0.5):
  // KL = 0.75 ln 1.5 + 0.25 ln 0.5 = 0.13081203...
  auto params = make_params(1, 2);
  params.logits(0, 0) = std::log(0.75);
  params.logits(0, 1) = std::log(0.25);
  auto ref_params = make_params(1, 2);
  ReferencePolicy ref{ref_params};
  std::vector<int> ctx{0};
  CHECK(kl_to_reference(params, ref, ctx) ==
        doctest::Approx(0.1308120359411369).epsilon(1e-9));
}

TEST_CASE("KL is zero against itself and non-negative in general") {
  Rng rng(7);
  auto params = make_params(3, 4);
  for (auto& v : params.logits.data) v = rng.normal(0.0, 1.0);
  ReferencePolicy self{params};
  std::vector<int> all{0, 1, 2};
  CHECK(kl_to_reference(params, self, all) == doctest::Approx(0.0));
  for (int trial = 0; trial < 200; ++trial) {
    auto other = make_params(3, 4);
    for (auto& v : other.logits.data) v = rng.normal(0.0, 2.0);
    ReferencePolicy ref{other};
    CHECK(kl_to_reference(params, ref, all) >= 0.0);
  }
}

TEST_CASE("KL gradient matches finite differences") {
  Rng rng(11);
  auto params = make_params(2, 4);
  for (auto& v : params.logits.data) v = rng.normal(0.0, 0.8);
  auto other = make_params(2, 4);
  for (auto& v : other.logits.data) v = rng.normal(0.0, 0.8);
  ReferencePolicy ref{other};
  std::vector<int> ctx{0, 1};
  auto analytic = kl_gradient(params, ref, ctx);
  auto numeric = fd_gradient(params, [&](const PolicyParams& p) {
    return kl_to_reference(p, ref, ctx);
  });
  for (int i = 0; i < analytic.rows; ++i)
    for (int j = 0; j < analytic.cols; ++j)
      CHECK(analytic(i, j) ==
            doctest::Approx(numeric(i, j)).epsilon(1e-5).scale(1.0));
}

TEST_CASE("sampling frequencies match probabilities (binomial CI)") {
  auto params = make_params(1, 3);
  params.logits(0, 0) = std::log(0.5);
  params.logits(0, 1) = std::log(0.3);
  params.logits(0, 2) = std::log(0.2);
  Rng rng(123);
  const int n = 200000;
  std::vector<int> counts(3, 0);
  for (int i = 0; i < n; ++i) {
    auto [a, lp] = sample_action(params, 0, rng);
    REQUIRE(a >= 0);
    REQUIRE(a < 3);
    CHECK(lp == doctest::Approx(log_prob(params, 0, a)).epsilon(1e-12));
    counts[a] += 1;
  }
  const double expect[3] = {0.5, 0.3, 0.2};
  for (int j = 0; j < 3; ++j) {
    const double freq = static_cast<double>(counts[j]) / n;
    const double se = std::sqrt(expect[j] * (1.0 - expect[j]) / n);
    CHECK(std::abs(freq - expect[j]) < 5.0 * se);
  }
}

TEST_CASE("sampling is reproducible for a fixed seed") {
  auto params = make_params(2, 5);
  params.logits(0, 3) = 0.7;
  params.logits(1, 1) = -0.4;
  std::vector<int> first;
  {
    Rng rng(99);
    for (int i = 0; i < 50; ++i)
      first.push_back(sample_action(params, i % 2, rng).first);
  }
  std::vector<int> second;
  {
    Rng rng(99);
    for (int i = 0; i < 50; ++i)
      second.push_back(sample_action(params, i % 2, rng).first);
  }
  CHECK(first == second);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  Rng rng(5);
  auto params = make_params(4, 3);
  for (auto& v : params.logits.data) v = rng.normal(0.0, 3.0);
  params.logits(2, 1) = 1e-17;
  params.logits(3, 2) = -123456.789012345678;
  const auto path =
      std::filesystem::temp_directory_path() / "capolab_policy_ckpt.txt";
  save_checkpoint(params, path.string());
  auto loaded = load_checkpoint(path.string());
  REQUIRE(loaded.logits.rows == 4);
  REQUIRE(loaded.logits.cols == 3);
  for (size_t i = 0; i < params.logits.data.size(); ++i)
    CHECK(loaded.logits.data[i] == params.logits.data[i]);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint loader rejects malformed input") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto bad1 = dir / "capolab_bad1.txt";
  {
    FILE* f = std::fopen(bad1.string().c_str(), "w");
    std::fputs("contexts=2 actions=2\n0.5 0.25\n", f);  // missing a row
    std::fclose(f);
  }
  CHECK_THROWS(load_checkpoint(bad1.string()));
  const auto bad2 = dir / "capolab_bad2.txt";
  {
    FILE* f = std::fopen(bad2.string().c_str(), "w");
    std::fputs("contexts=1 actions=2\n0.5 nan\n", f);
    std::fclose(f);
  }
  CHECK_THROWS(load_checkpoint(bad2.string()));
  std::filesystem::remove(bad1);
  std::filesystem::remove(bad2);
}

TEST_CASE("accumulate_logprob_gradient scales and adds in place") {
  auto params = make_params(2, 3);
  params.logits(0, 0) = 0.2;
  Matrix into(2, 3);
  accumulate_logprob_gradient(params, 0, 1, 2.5, into);
  accumulate_logprob_gradient(params, 1, 2, -1.0, into);
  auto g0 = logprob_gradient(params, 0, 1);
  auto g1 = logprob_gradient(params, 1, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(into(i, j) ==
            doctest::Approx(2.5 * g0(i, j) - g1(i, j)).epsilon(1e-12));
}
