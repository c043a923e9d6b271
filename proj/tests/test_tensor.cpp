#include <cstring>
#include <sstream>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <doctest.h>

#include "cdsrnp/tensor.hpp"
#include "cdsrnp/param_store.hpp"
#include "testutil.hpp"

using namespace cdsrnp;
using ad::TensorPtr;

TEST_CASE("matmul identity and basis selection") {
  auto identity = ad::make_tensor({2, 2}, {1, 0, 0, 1});
  auto m = ad::make_tensor({2, 2}, {1, 2, 3, 4});
  auto out = ad::matmul(identity, m);
  CHECK(out->data == std::vector<double>{1, 2, 3, 4});

  auto selector = ad::make_tensor({1, 2}, {1, 0});
  auto column = ad::make_tensor({2, 1}, {2, 5});
  CHECK(ad::matmul(selector, column)->data == std::vector<double>{2});
}

TEST_CASE("matmul shape error names both shapes") {
  auto a = ad::make_tensor({2, 3});
  auto b = ad::make_tensor({2, 2});
  CHECK_THROWS_WITH_AS(ad::matmul(a, b),
                       "matmul: inner dimensions disagree: [2x3] vs [2x2]",
                       std::invalid_argument);
}

TEST_CASE("matmul gradients match finite differences") {
  rng::Rng r(11);
  auto a = testutil::random_tensor({3, 4}, r);
  auto b = testutil::random_tensor({4, 2}, r);
  const double err =
      testutil::max_grad_error({a, b}, [&] { return ad::sum_all(ad::matmul(a, b)); });
  CHECK(err < 1e-6);
}

TEST_CASE("elementwise basics") {
  auto x = ad::make_tensor({2}, {-1, 2});
  CHECK(ad::relu(x)->data == std::vector<double>{0, 2});

  auto zero = ad::make_scalar(0.0, true);
  auto s = ad::sigmoid(zero);
  CHECK(s->scalar() == doctest::Approx(0.5));
  ad::backward(s);
  CHECK(zero->grad[0] == doctest::Approx(0.25));
}

TEST_CASE("exp derivative at 1 matches finite differences") {
  auto x = ad::make_scalar(1.0, true);
  const double err = testutil::max_grad_error({x}, [&] { return ad::sum_all(ad::exp(x)); });
  CHECK(err < 1e-6);
}

TEST_CASE("log rejects non-positive input") {
  auto x = ad::make_tensor({2}, {1.0, 0.0});
  CHECK_THROWS_AS(ad::log(x), std::domain_error);
}

TEST_CASE("differentiable ops match finite differences on random inputs") {
  rng::Rng r(202);
  for (int trial = 0; trial < 20; ++trial) {
    auto a = testutil::random_tensor({2, 3}, r);
    auto b = testutil::random_tensor({2, 3}, r);
    auto w = testutil::random_tensor({3, 2}, r);
    auto v = testutil::random_tensor({3}, r);
    auto loss = [&] {
      auto mixed = ad::mul(ad::add(a, b), ad::sub(a, ad::scale(b, 0.5)));
      auto mm = ad::matmul(ad::sigmoid(mixed), w);          // 2x2
      auto act = ad::exp(ad::scale(ad::relu(mm), 0.3));     // keeps exp bounded
      auto shifted = ad::bias_add(ad::matmul(act, ad::transpose(w)), v);
      return ad::sum_all(ad::mean(shifted, 1));
    };
    CHECK(testutil::max_grad_error({a, b, w, v}, loss) < 1e-4);
  }
}

TEST_CASE("concat basics and gradient routing") {
  auto a = ad::make_tensor({1, 2}, {1, 2});
  auto b = ad::make_tensor({1, 1}, {3.0});
  auto joined = ad::concat({a, b}, 1);
  CHECK(joined->shape == std::vector<std::size_t>{1, 3});
  CHECK(joined->data == std::vector<double>{1, 2, 3});

  auto single = ad::concat({a}, 0);
  CHECK(single->data == a->data);
  CHECK(single->shape == a->shape);

  // gradient slice [0, 0, 1] reaches only the second operand
  auto ag = ad::make_tensor({1, 2}, {1, 2}, true);
  auto bg = ad::make_tensor({1, 1}, {3.0}, true);
  auto out = ad::concat({ag, bg}, 1);
  auto picked = ad::mul(out, ad::make_tensor({1, 3}, {0, 0, 1}));
  ad::backward(ad::sum_all(picked));
  CHECK(ag->grad == std::vector<double>{0, 0});
  CHECK(bg->grad == std::vector<double>{1});
}

TEST_CASE("concat then slice reproduces operands exactly") {
  rng::Rng r(7);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t rows = 1 + r.below(4);
    const std::size_t c1 = 1 + r.below(4), c2 = 1 + r.below(4), c3 = 1 + r.below(4);
    auto a = testutil::random_tensor({rows, c1}, r, false);
    auto b = testutil::random_tensor({rows, c2}, r, false);
    auto c = testutil::random_tensor({rows, c3}, r, false);
    auto joined = ad::concat({a, b, c}, 1);
    CHECK(ad::slice(joined, 1, 0, c1)->data == a->data);
    CHECK(ad::slice(joined, 1, c1, c2)->data == b->data);
    CHECK(ad::slice(joined, 1, c1 + c2, c3)->data == c->data);
  }
}

TEST_CASE("concat rejects incompatible shapes") {
  auto a = ad::make_tensor({2, 2});
  auto b = ad::make_tensor({3, 3});
  CHECK_THROWS_AS(ad::concat({a, b}, 1), std::invalid_argument);
}

TEST_CASE("masked_softmax handles the contract rows") {
  auto flat = ad::make_tensor({2}, {0, 0});
  CHECK(ad::masked_softmax(flat, {1, 1})->data == std::vector<double>{0.5, 0.5});

  auto tied = ad::make_tensor({2}, {5, 5});
  CHECK(ad::masked_softmax(tied, {1, 0})->data == std::vector<double>{1, 0});

  auto blocked = ad::make_tensor({1, 3}, {4, 2, 9});
  CHECK(ad::masked_softmax(blocked, {0, 0, 0})->data == std::vector<double>{0, 0, 0});
}

TEST_CASE("masked_softmax matches the direct exponent-sum formula") {
  auto row = ad::make_tensor({3}, {1, 2, 3});
  auto out = ad::masked_softmax(row, {1, 1, 1});
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(out->data[i] == doctest::Approx(std::exp(1.0 + i) / z).epsilon(1e-12));
  }
  const double total = out->data[0] + out->data[1] + out->data[2];
  CHECK(std::abs(total - 1.0) < 1e-12);
}

TEST_CASE("masked_softmax rows sum to one over attendable entries") {
  rng::Rng r(31);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 5;
    auto scores = testutil::random_tensor({n, n}, r, false, -5.0, 5.0);
    std::vector<std::uint8_t> mask(n * n);
    for (auto& m : mask) m = r.below(2);
    auto out = ad::masked_softmax(scores, mask);
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      bool any = false;
      for (std::size_t j = 0; j < n; ++j) {
        if (!mask[i * n + j]) CHECK(out->data[i * n + j] == 0.0);
        sum += out->data[i * n + j];
        any = any || mask[i * n + j];
      }
      if (any) CHECK(std::abs(sum - 1.0) < 1e-12);
      else CHECK(sum == 0.0);
    }
  }
}

TEST_CASE("masked_softmax gradient matches finite differences") {
  rng::Rng r(77);
  auto scores = testutil::random_tensor({3, 3}, r);
  auto weights = testutil::random_tensor({3, 3}, r, false);
  std::vector<std::uint8_t> mask{1, 0, 1, 1, 1, 1, 0, 0, 1};
  auto loss = [&] { return ad::sum_all(ad::mul(ad::masked_softmax(scores, mask), weights)); };
  CHECK(testutil::max_grad_error({scores}, loss) < 1e-4);
}

TEST_CASE("mean basics") {
  auto m = ad::make_tensor({1, 2}, {1, 3});
  CHECK(ad::mean(m, 1)->data == std::vector<double>{2});

  auto rows = ad::make_tensor({3, 2}, {4, 7, 4, 7, 4, 7});
  CHECK(ad::mean(rows, 0)->data == std::vector<double>{4, 7});

  auto g = ad::make_tensor({4}, {1, 2, 3, 4}, true);
  ad::backward(ad::mean(g, 0));
  for (double v : g->grad) CHECK(v == doctest::Approx(0.25));
}

TEST_CASE("backward fills gradients and accumulates") {
  auto x = ad::make_tensor({3}, {1, 2, 3}, true);
  auto unused = ad::make_tensor({3}, {9, 9, 9}, true);
  auto loss = ad::sum_all(x);
  ad::backward(loss);
  CHECK(x->grad == std::vector<double>{1, 1, 1});
  CHECK(unused->grad == std::vector<double>{0, 0, 0});

  ad::backward(loss);  // accumulate without zeroing
  CHECK(x->grad == std::vector<double>{2, 2, 2});
}

TEST_CASE("backward rejects non-scalar losses") {
  auto x = ad::make_tensor({2}, {1, 2}, true);
  CHECK_THROWS_AS(ad::backward(x), std::invalid_argument);
}

TEST_CASE("backward is deterministic after zeroing") {
  rng::Rng r(5);
  auto a = testutil::random_tensor({4, 4}, r);
  auto b = testutil::random_tensor({4, 4}, r);
  auto loss = ad::sum_all(ad::sigmoid(ad::matmul(a, ad::relu(ad::mul(a, b)))));
  ad::backward(loss);
  const auto ga = a->grad, gb = b->grad;
  ad::zero_all_grads(loss);
  ad::backward(loss);
  CHECK(a->grad == ga);
  CHECK(b->grad == gb);
}

TEST_CASE("rows gathers and scatter-adds") {
  auto table = ad::make_tensor({3, 2}, {0, 0, 10, 11, 20, 21}, true);
  const std::size_t idx[4] = {2, 0, 2, 1};
  auto picked = ad::rows(table, idx);
  CHECK(picked->data == std::vector<double>{20, 21, 0, 0, 20, 21, 10, 11});
  ad::backward(ad::sum_all(picked));
  CHECK(table->grad == std::vector<double>{1, 1, 1, 1, 2, 2});
  CHECK_THROWS_AS(ad::rows(table, std::vector<std::size_t>{3}), std::out_of_range);
}

TEST_CASE("structural op gradients match finite differences") {
  rng::Rng r(404);
  auto table = testutil::random_tensor({4, 3}, r);
  auto m = testutil::random_tensor({2, 3}, r);
  auto v = testutil::random_tensor({3}, r);
  const std::size_t idx[3] = {1, 3, 1};
  auto loss = [&] {
    auto gathered = ad::rows(table, idx);                       // 3x3
    auto sliced = ad::slice(gathered, 0, 0, 2);                 // 2x3
    auto joined = ad::concat({sliced, m}, 0);                   // 4x3
    auto shaped = ad::reshape(ad::bias_add(joined, v), {3, 4});
    return ad::sum_all(ad::mul(shaped, shaped));
  };
  CHECK(testutil::max_grad_error({table, m, v}, loss) < 1e-4);
}

TEST_CASE("parameter store keeps unique names in lexicographic order") {
  ad::ParameterStore store;
  store.create("b/two", {2});
  store.create("a/one", {1, 3});
  CHECK_THROWS_AS(store.create("a/one", {1}), std::invalid_argument);
  std::vector<std::string> names;
  for (const auto& [name, t] : store) names.push_back(name);
  CHECK(names == std::vector<std::string>{"a/one", "b/two"});
  CHECK(store.element_count() == 5);
}

TEST_CASE("parameter store serialization round-trips bit-exactly") {
  rng::Rng r(99);
  ad::ParameterStore store;
  for (const char* name : {"embed/items", "enc/wq", "head/bias"}) {
    auto t = store.create(name, {3, 4});
    for (auto& v : t->data) v = r.normal() * std::pow(10.0, r.range(-8, 8));
  }
  store.at("head/bias")->data[0] = -0.0;
  store.at("head/bias")->data[1] = 1e-308;  // subnormal territory

  std::stringstream buffer;
  store.save(buffer);
  auto loaded = ad::ParameterStore::load(buffer);
  CHECK(loaded.size() == store.size());
  for (const auto& [name, t] : store) {
    const auto& u = loaded.at(name);
    CHECK(u->shape == t->shape);
    for (std::size_t i = 0; i < t->size(); ++i) {
      CHECK(std::memcmp(&u->data[i], &t->data[i], sizeof(double)) == 0);
    }
  }

  std::stringstream again;
  loaded.save(again);
  CHECK(again.str() == buffer.str());
}
