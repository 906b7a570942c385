#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ser/error.hpp"
#include "ser/losses/losses.hpp"
#include "ser/nn/gradcheck.hpp"

using namespace ser;
using namespace ser::loss;

namespace {

using Vec = std::vector<double>;

Vec random_vec(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

double norm(const Vec& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Both contrastive losses as functions of the concatenation [x1, x2].
double pair_loss(ContrastiveType t, std::span<const double> v, std::size_t n, int y, double m) {
  auto a = v.subspan(0, n), b = v.subspan(n, n);
  return t == ContrastiveType::loss_1 ? contrastive_loss_1(a, b, y, m) : contrastive_loss_2(a, b, y, m);
}

}  // namespace

TEST_CASE("cosine similarity examples") {
  CHECK(cosine_similarity(Vec{1, 0}, Vec{1, 0}) == doctest::Approx(1.0));
  CHECK(cosine_similarity(Vec{1, 0}, Vec{0, 1}) == doctest::Approx(0.0));
  CHECK(cosine_similarity(Vec{1, 1}, Vec{1, 0}) == doctest::Approx(0.70711).epsilon(1e-5));
  Vec d1(2, 9.0), d2(2, 9.0);
  CHECK(cosine_similarity(Vec{0, 0}, Vec{1, 0}, d1, d2) == 0.0);
  CHECK(d1 == Vec{0, 0});
  CHECK(d2 == Vec{0, 0});
}

TEST_CASE("contrastive loss examples") {
  CHECK(contrastive_loss_1(Vec{1, 0}, Vec{1, 0}, 1, 0.5) == doctest::Approx(0.0));
  CHECK(contrastive_loss_1(Vec{1, 0}, Vec{0, 1}, 0, 0.5) == 0.0);
  CHECK(contrastive_loss_1(Vec{1, 0}, Vec{1, 1}, 0, 0.5) == doctest::Approx(0.20711).epsilon(1e-5));
  CHECK(contrastive_loss_2(Vec{2, 7}, Vec{2, 7}, 1, 1.0) == 0.0);
  CHECK(contrastive_loss_2(Vec{0, 0}, Vec{3, 4}, 1, 1.0) == doctest::Approx(5.0));
  CHECK(contrastive_loss_2(Vec{0, 0}, Vec{3, 4}, 0, 10.0) == doctest::Approx(5.0));
  CHECK(contrastive_loss_2(Vec{0, 0}, Vec{3, 4}, 0, 4.0) == 0.0);

  Vec d1(2, 9.0), d2(2, 9.0);
  CHECK(contrastive_loss_2(Vec{1, 1}, Vec{1, 1}, 1, 1.0, d1, d2) == 0.0);
  CHECK(d1 == Vec{0, 0});
  CHECK(d2 == Vec{0, 0});
}

TEST_CASE("loss properties over random inputs") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 9;
    auto a = random_vec(rng, n), b = random_vec(rng, n);
    for (int y : {0, 1}) {
      const double l1 = contrastive_loss_1(a, b, y, 0.5);
      const double l2 = contrastive_loss_2(a, b, y, 1.0);
      CHECK(l1 >= 0.0);
      CHECK(l2 >= 0.0);
      CHECK(contrastive_loss_1(b, a, y, 0.5) == doctest::Approx(l1).epsilon(1e-12));
      CHECK(contrastive_loss_2(b, a, y, 1.0) == doctest::Approx(l2).epsilon(1e-12));
      auto sa = a, sb = b;
      const double c1 = scale(rng), c2 = scale(rng);
      for (auto& x : sa) x *= c1;
      for (auto& x : sb) x *= c2;
      CHECK(contrastive_loss_1(sa, sb, y, 0.5) == doctest::Approx(l1).epsilon(1e-9));
    }
    CHECK(contrastive_loss_1(a, a, 1, 0.5) == doctest::Approx(0.0));
    CHECK(contrastive_loss_2(a, a, 1, 1.0) == 0.0);
  }
}

TEST_CASE("hinge dead zones have exactly zero gradient") {
  std::mt19937_64 rng(2);
  int checked1 = 0, checked2 = 0;
  for (int trial = 0; trial < 300; ++trial) {
    auto a = random_vec(rng, 5), b = random_vec(rng, 5);
    Vec d1(5), d2(5);
    if (cosine_similarity(a, b) < 0.5) {
      CHECK(contrastive_loss_1(a, b, 0, 0.5, d1, d2) == 0.0);
      for (int i = 0; i < 5; ++i) CHECK((d1[i] == 0.0 && d2[i] == 0.0));
      ++checked1;
    }
    Vec diff(5);
    for (int i = 0; i < 5; ++i) diff[i] = a[i] - b[i];
    if (norm(diff) > 1.5) {
      CHECK(contrastive_loss_2(a, b, 0, 1.5, d1, d2) == 0.0);
      for (int i = 0; i < 5; ++i) CHECK((d1[i] == 0.0 && d2[i] == 0.0));
      ++checked2;
    }
  }
  CHECK(checked1 > 50);
  CHECK(checked2 > 50);
}

TEST_CASE("contrastive gradients match finite differences away from kinks") {
  std::mt19937_64 rng(3);
  const std::size_t n = 6;
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    auto a = random_vec(rng, n), b = random_vec(rng, n);
    Vec v(a);
    v.insert(v.end(), b.begin(), b.end());
    Vec diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
    const double cos = cosine_similarity(a, b), dist = norm(diff);
    for (auto t : {ContrastiveType::loss_1, ContrastiveType::loss_2}) {
      for (int y : {0, 1}) {
        const double m = t == ContrastiveType::loss_1 ? 0.1 : 3.0;
        const double kink = t == ContrastiveType::loss_1 ? std::abs(cos - m) : std::min(std::abs(dist - m), dist);
        if (kink < 1e-3) continue;
        Vec d1(n), d2(n);
        if (t == ContrastiveType::loss_1) contrastive_loss_1(a, b, y, m, d1, d2);
        else contrastive_loss_2(a, b, y, m, d1, d2);
        Vec g(d1);
        g.insert(g.end(), d2.begin(), d2.end());
        auto f = [&](std::span<const double> x) { return pair_loss(t, x, n, y, m); };
        auto res = nn::finite_diff_check(f, v, g);
        CHECK(res.max_rel_error <= 1e-6);
        ++checked;
      }
    }
  }
  CHECK(checked > 600);
}

TEST_CASE("pairwise batch loss") {
  nn::Tensor x1({2, 2}), x2({2, 2});
  x1.data = {1, 0, 1, 0};
  x2.data = {1, 0, 1, 0};
  std::vector<int> y = {1, 1};
  LossConfig cfg;
  CHECK(pairwise_batch_loss(x1, x2, y, cfg) == doctest::Approx(0.0));

  // per-pair losses 0 and 1
  x2.data = {1, 0, 0, 1};
  CHECK(pairwise_batch_loss(x1, x2, y, cfg) == doctest::Approx(0.5));
  cfg.reduction = Reduction::sum;
  CHECK(pairwise_batch_loss(x1, x2, y, cfg) == doctest::Approx(1.0));

  std::mt19937_64 rng(4);
  for (auto t : {ContrastiveType::loss_1, ContrastiveType::loss_2}) {
    LossConfig c;
    c.type = t;
    c.margin = default_margin(t);
    nn::Tensor a({7, 5}), b({7, 5});
    for (auto& v : a.data) v = std::normal_distribution<double>(0.0, 0.4)(rng);
    for (auto& v : b.data) v = std::normal_distribution<double>(0.0, 0.4)(rng);
    std::vector<int> labels = {1, 0, 0, 1, 0, 1, 0};
    double brute = 0;
    for (std::size_t i = 0; i < 7; ++i) {
      brute += t == ContrastiveType::loss_1 ? contrastive_loss_1(a.slice(i), b.slice(i), labels[i], c.margin)
                                            : contrastive_loss_2(a.slice(i), b.slice(i), labels[i], c.margin);
    }
    CHECK(pairwise_batch_loss(a, b, labels, c) == doctest::Approx(brute / 7).epsilon(1e-12));

    nn::Tensor da, db;
    const auto before = contrastive_evaluations();
    pairwise_batch_loss(a, b, labels, c, &da, &db, 0.3);
    CHECK(contrastive_evaluations() == before + 1);
    REQUIRE(da.shape == a.shape);
    for (std::size_t i = 0; i < 7; ++i) {
      Vec g1(5), g2(5);
      if (t == ContrastiveType::loss_1) contrastive_loss_1(a.slice(i), b.slice(i), labels[i], c.margin, g1, g2);
      else contrastive_loss_2(a.slice(i), b.slice(i), labels[i], c.margin, g1, g2);
      for (std::size_t k = 0; k < 5; ++k) {
        CHECK(da.slice(i)[k] == doctest::Approx(0.3 * g1[k] / 7).epsilon(1e-12));
        CHECK(db.slice(i)[k] == doctest::Approx(0.3 * g2[k] / 7).epsilon(1e-12));
      }
    }
  }

  nn::Tensor empty({0, 2});
  CHECK_THROWS(pairwise_batch_loss(empty, empty, std::vector<int>{}, cfg));
  CHECK_THROWS(pairwise_batch_loss(x1, x2, std::vector<int>{1}, cfg));
}

TEST_CASE("cross entropy") {
  CHECK(cross_entropy(Vec{1, 0, 0, 0}, Vec{0.25, 0.25, 0.25, 0.25}) == doctest::Approx(1.38629).epsilon(1e-5));
  CHECK(cross_entropy(Vec{1, 0, 0, 0}, Vec{1, 0, 0, 0}) == doctest::Approx(0.0));
  CHECK(cross_entropy(Vec{1, 0, 0, 0}, Vec{0.7, 0.1, 0.1, 0.1}) == doctest::Approx(0.35667).epsilon(1e-5));
  CHECK(cross_entropy(Vec{0, 1, 0, 0}, Vec{1, 0, 0, 0}) == doctest::Approx(-std::log(kProbFloor)));

  nn::Tensor probs({2, 4});
  probs.data = {0.25, 0.25, 0.25, 0.25, 0.7, 0.1, 0.1, 0.1};
  std::vector<int> labels = {2, 0};
  nn::Tensor d;
  const double l = softmax_cross_entropy(probs, labels, &d, 2.0);
  CHECK(l == doctest::Approx((std::log(4.0) - std::log(0.7)) / 2));
  CHECK(d.data[2] == doctest::Approx(2.0 * (0.25 - 1.0) / 2));
  CHECK(d.data[0] == doctest::Approx(2.0 * 0.25 / 2));
  CHECK(d.data[4] == doctest::Approx(2.0 * (0.7 - 1.0) / 2));
}

TEST_CASE("softmax cross entropy gradient through logits") {
  std::mt19937_64 rng(5);
  auto logits = random_vec(rng, 12);
  std::vector<int> labels = {3, 0, 1};
  auto probs_of = [](std::span<const double> z) {
    nn::Tensor p({3, 4});
    for (std::size_t b = 0; b < 3; ++b) {
      double mx = z[b * 4], s = 0;
      for (int k = 1; k < 4; ++k) mx = std::max(mx, z[b * 4 + k]);
      for (int k = 0; k < 4; ++k) s += std::exp(z[b * 4 + k] - mx);
      for (int k = 0; k < 4; ++k) p.data[b * 4 + k] = std::exp(z[b * 4 + k] - mx) / s;
    }
    return p;
  };
  nn::Tensor d;
  softmax_cross_entropy(probs_of(logits), labels, &d);
  auto f = [&](std::span<const double> z) { return softmax_cross_entropy(probs_of(z), labels); };
  CHECK(nn::finite_diff_check(f, logits, d.data).max_rel_error <= 1e-6);
}

TEST_CASE("combined and multi-task losses") {
  CHECK(combined_loss(3.0, 0.7, 0.0) == 0.7);
  CHECK(combined_loss(3.0, 0.7, 1.0) == 3.0);
  CHECK(combined_loss(1.0, 0.5, 0.8) == doctest::Approx(0.9));
  double prev = combined_loss(2.0, 1.0, 0.0);
  for (int i = 1; i <= 10; ++i) {
    const double v = combined_loss(2.0, 1.0, i / 10.0);
    CHECK(v > prev);
    prev = v;
  }
  CHECK(multitask_loss(0.9, 5.0, 0.0) == 0.9);
  CHECK(multitask_loss(1.0, 1.0, 0.5) == doctest::Approx(1.0));
  CHECK(multitask_loss(1.0, 2.0, 0.04) == doctest::Approx(0.96 + 0.08));
}

TEST_CASE("config validation and parsing") {
  LossConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  cfg.lambda = 1.2;
  CHECK_THROWS_AS(validate(cfg), RangeError);
  cfg.lambda = 0.5;
  cfg.margin = 1.0;
  CHECK_THROWS_AS(validate(cfg), RangeError);
  cfg.type = ContrastiveType::loss_2;
  CHECK_NOTHROW(validate(cfg));
  cfg.margin = 0.0;
  CHECK_THROWS_AS(validate(cfg), RangeError);

  CHECK(default_margin(ContrastiveType::loss_1) == 0.5);
  CHECK(default_margin(ContrastiveType::loss_2) == 1.0);
  CHECK(parse_contrastive_type("loss_2") == ContrastiveType::loss_2);
  CHECK(parse_tap(to_string(Tap::pos_2)) == Tap::pos_2);
  CHECK(parse_reduction("sum") == Reduction::sum);
  CHECK_THROWS(parse_tap("pos_3"));

  CHECK(aux_classes(AuxTask::gender) == 2);
  CHECK(aux_classes(AuxTask::dominance) == 3);
  CHECK(aux_classes(AuxTask::none) == 0);
  CHECK(parse_aux_task("valence") == AuxTask::valence);
  MultiTaskConfig mt{AuxTask::dominance, 0.04};
  CHECK_NOTHROW(validate(mt));
  mt.lambda = 0.6;
  CHECK_THROWS_AS(validate(mt), RangeError);
}
