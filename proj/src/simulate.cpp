#include <algorithm>
#include <random>
#include <thread>

#include "prefplan/error.hpp"
#include "prefplan/policy.hpp"

namespace prefplan {

namespace {

// 53 high bits of a 64-bit draw; identical on every platform, unlike
// std::uniform_real_distribution.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1p-53; }

template <typename Weights>
int pick(std::mt19937_64& rng, int size, Weights&& weight) {
  const double u = unit(rng);
  double acc = 0.0;
  int last = -1;
  for (int i = 0; i < size; ++i) {
    const double w = weight(i);
    if (w <= 0.0) continue;
    acc += w;
    last = i;
    if (u < acc) return i;
  }
  return last;
}

std::mt19937_64 trajectory_rng(std::uint64_t seed, long i) {
  const auto idx = static_cast<std::uint64_t>(i);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(idx >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

Eigen::VectorXd simulate(const ProductMdp& product, const Policy& policy, int horizon, long n, std::uint64_t seed,
                         int threads) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "need at least one trajectory");
  if (horizon < 1) throw Error(ErrorKind::InvalidArgument, "horizon must be at least 1");
  if (static_cast<int>(policy.rules.size()) < horizon) {
    throw Error(ErrorKind::UndefinedDecisionRule, "policy has fewer decision rules than the horizon");
  }
  const auto& init = product.initial();
  const int num_q = product.num_automaton_states();

  auto run_range = [&](long begin, long end, std::vector<long>& counts) {
    for (long i = begin; i < end; ++i) {
      auto rng = trajectory_rng(seed, i);
      int x = pick(rng, product.num_states(), [&](int k) { return init(k); });
      for (int t = 0; t + 1 < horizon; ++t) {
        const auto& rule = policy.rules[t];
        const int a = pick(rng, product.num_actions(), [&](int k) { return rule(x, k); });
        if (a < 0 || !product.enabled(x, a)) {
          throw Error(ErrorKind::UndefinedDecisionRule,
                      "no decision rule at stage " + std::to_string(t) + " for " + product.state_label(x));
        }
        const auto& succ = product.successors(x, a);
        const int k = pick(rng, static_cast<int>(succ.size()), [&](int j) { return succ[j].prob; });
        x = succ[k].target;
      }
      ++counts[product.state(x).automaton_state];
    }
  };

  const int workers = static_cast<int>(std::clamp<long>(threads, 1, n));
  std::vector<std::vector<long>> counts(workers, std::vector<long>(num_q, 0));
  if (workers == 1) {
    run_range(0, n, counts[0]);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> failures(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          run_range(n * w / workers, n * (w + 1) / workers, counts[w]);
        } catch (...) {
          failures[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }
  }
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(num_q);
  for (const auto& c : counts) {
    for (int q = 0; q < num_q; ++q) freq(q) += static_cast<double>(c[q]);
  }
  return freq / static_cast<double>(n);
}

}  // namespace prefplan
