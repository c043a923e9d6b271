#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include <doctest.h>

#include "cdsrnp/eval.hpp"
#include "cdsrnp/rng.hpp"
#include "testutil.hpp"

using namespace cdsrnp;
using data::Domain;

namespace {

/// Uniform-popularity two-domain log: big vocabulary, every item popular
/// enough to survive filtering, every user overlapped.
data::DatasetSplit uniform_split(std::size_t users, std::size_t items, std::uint64_t seed) {
  rng::Rng r(seed);
  std::vector<data::Interaction> evs;
  for (std::size_t u = 0; u < users; ++u) {
    const std::string id = "u" + std::to_string(u);
    std::int64_t ts = 0;
    for (Domain d : {Domain::A, Domain::B}) {
      const std::size_t len = 10 + r.below(7);
      for (std::size_t k = 0; k < len; ++k) {
        evs.push_back({id, (d == Domain::A ? "a" : "b") + std::to_string(r.below(items)), d,
                       ++ts});
      }
    }
  }
  return data::prepare_split(evs, 0.0, seed + 1);
}

std::vector<unsigned char> param_bytes(const model::Model& m) {
  std::vector<unsigned char> bytes;
  for (const auto& [name, t] : m.params()) {
    const auto* p = reinterpret_cast<const unsigned char*>(t->data.data());
    bytes.insert(bytes.end(), p, p + t->size() * sizeof(double));
  }
  return bytes;
}

}  // namespace

TEST_CASE("rank_positive matches a full-sort oracle with pessimistic ties") {
  CHECK(eval::rank_positive(std::vector<double>{0.9, 0.1, 0.5}, 0) == 1);
  CHECK(eval::rank_positive(std::vector<double>{0.5, 0.5}, 0) == 2);  // tie goes against us

  rng::Rng r(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + r.below(30);
    std::vector<double> scores(n);
    for (auto& s : scores) s = r.below(8) * 0.125;  // force frequent ties
    const std::size_t pos = r.below(n);

    // oracle: stable sort descending, positive placed after equal scores
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      if (scores[x] != scores[y]) return scores[x] > scores[y];
      return (x == pos) < (y == pos);  // positive loses ties
    });
    const std::size_t oracle_rank =
        1 + static_cast<std::size_t>(std::find(order.begin(), order.end(), pos) -
                                     order.begin());
    CHECK(eval::rank_positive(scores, pos) == oracle_rank);
  }
}

TEST_CASE("ndcg and hr at k") {
  CHECK(eval::ndcg_at_k(1) == 1.0);
  CHECK(eval::ndcg_at_k(11) == 0.0);
  CHECK(eval::ndcg_at_k(3) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(eval::hr_at_k(10) == 1.0);
  CHECK(eval::hr_at_k(11) == 0.0);
  CHECK_THROWS_AS(eval::ndcg_at_k(0), std::invalid_argument);

  for (std::size_t rank = 1; rank <= 25; ++rank) {
    CHECK(eval::ndcg_at_k(rank) <= eval::hr_at_k(rank));
  }

  // uniform random ranks over 1000 candidates: mean HR@10 near 10/1000
  rng::Rng r(23);
  double hr = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    hr += eval::hr_at_k(1 + r.below(1000));
  }
  hr /= n;
  CHECK(std::abs(hr - 0.01) < 3.0 * std::sqrt(0.01 * 0.99 / n));
}

TEST_CASE("random_baseline sits at the analytic calibration floor") {
  const auto split = uniform_split(700, 1050, 11);
  REQUIRE(split.test.size() >= 120);

  double hr_sum = 0, ndcg_sum = 0;
  const std::size_t n_seeds = 20;
  for (std::size_t s = 0; s < n_seeds; ++s) {
    const auto report = eval::random_baseline(split, data::Split::test, 999, 100 + s);
    const double na = static_cast<double>(report.users_a), nb = static_cast<double>(report.users_b);
    hr_sum += (report.hr_a.mean * na + report.hr_b.mean * nb) / (na + nb);
    ndcg_sum += (report.ndcg_a.mean * na + report.ndcg_b.mean * nb) / (na + nb);
  }
  const double hr = hr_sum / n_seeds;
  const double ndcg = ndcg_sum / n_seeds;
  CHECK(hr > 0.005);
  CHECK(hr < 0.02);
  double ndcg_expect = 0;
  for (std::size_t rank = 1; rank <= 10; ++rank) ndcg_expect += eval::ndcg_at_k(rank);
  ndcg_expect /= 1000.0;
  CHECK(std::abs(ndcg - ndcg_expect) < 0.002);

  const auto a = eval::random_baseline(split, data::Split::test, 99, 7);
  const auto b = eval::random_baseline(split, data::Split::test, 99, 7);
  CHECK(a.serialize() == b.serialize());
  CHECK(a.ndcg_a.variance == 0.0);  // single seed
}

TEST_CASE("evaluate: ties, variance, immutability, and order invariance") {
  const auto split = uniform_split(160, 300, 13);
  model::ModelConfig cfg;
  cfg.embed_dim = 8;
  cfg.seq_len = 8;
  model::Model net(cfg, split.vocabs.a.size(), split.vocabs.b.size(), 3);

  eval::EvalOptions options{120, 5, 0, false};

  SUBCASE("constant scores rank pessimistically, giving zero HR") {
    auto& w2 = net.params().at("head/y_w2");
    auto& b2 = net.params().at("head/y_b2");
    std::fill(w2->data.begin(), w2->data.end(), 0.0);
    std::fill(b2->data.begin(), b2->data.end(), 0.0);
    const std::uint64_t seeds[1] = {5};
    const auto report = eval::evaluate(net, split, data::Split::test, options, seeds);
    CHECK(report.hr_a.mean == 0.0);
    CHECK(report.hr_b.mean == 0.0);
    CHECK(report.ndcg_a.variance == 0.0);  // single seed
  }

  SUBCASE("parameters stay untouched and order does not matter") {
    const auto before = param_bytes(net);
    const std::uint64_t seeds[2] = {5, 6};
    const auto report = eval::evaluate(net, split, data::Split::test, options, seeds);
    CHECK(param_bytes(net) == before);
    CHECK(report.seeds == std::vector<std::uint64_t>{5, 6});
    CHECK(report.users_a + report.users_b == split.test.size());

    auto shuffled = split;
    rng::Rng r(99);
    r.shuffle(shuffled.test);
    const auto report2 = eval::evaluate(net, shuffled, data::Split::test, options, seeds);
    CHECK(report2.serialize() == report.serialize());
  }

  SUBCASE("report serialization carries the protocol fields") {
    const std::uint64_t seeds[1] = {5};
    const auto report = eval::evaluate(net, split, data::Split::validation, options, seeds);
    const auto text = report.serialize();
    for (const char* key :
         {"domain=A", "domain=B", "metric=ndcg10", "metric=hr10", "mean=", "variance=",
          "stddev=", "n_seeds=1", "n_users="}) {
      CHECK(text.find(key) != std::string::npos);
    }
  }
}

TEST_CASE("a random-parameter model ranks at chance level over 999 negatives") {
  const auto split = uniform_split(1500, 1050, 17);
  REQUIRE(split.test.size() >= 280);
  // every test user must support the 999-negative protocol
  for (const auto& e : split.test) {
    const auto& seq = split.test_records[e.user_index].seq(e.domain);
    const std::unordered_set<std::size_t> h(seq.begin(), seq.end());
    REQUIRE(split.vocabs.of(e.domain).size() - h.size() >= 999);
  }

  model::ModelConfig cfg;
  cfg.embed_dim = 8;
  cfg.seq_len = 8;
  model::Model net(cfg, split.vocabs.a.size(), split.vocabs.b.size(), 19);

  eval::EvalOptions options{999, 5, 0, false};
  std::vector<std::uint64_t> seeds(7);
  std::iota(seeds.begin(), seeds.end(), 40);
  const auto report = eval::evaluate(net, split, data::Split::test, options, seeds);

  const std::size_t rankings = (report.users_a + report.users_b) * seeds.size();
  REQUIRE(rankings >= 2000);
  const double na = static_cast<double>(report.users_a), nb = static_cast<double>(report.users_b);
  const double hr = (report.hr_a.mean * na + report.hr_b.mean * nb) / (na + nb);
  CHECK(hr >= 0.005);
  CHECK(hr <= 0.02);
}
