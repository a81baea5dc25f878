#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "obsnet/graph.hpp"
#include "obsnet/heads.hpp"
#include "obsnet/rng.hpp"

using namespace obsnet;

namespace {

// Brute-force reference for the full similarity -> weights -> class mass
// pipeline, written independently of the production code.
std::vector<double> reference_class_probs(const std::vector<double>& u,
                                          const Tensor<double>& bank,
                                          const std::vector<int>& labels,
                                          int n_classes) {
  const std::size_t n = bank.rows();
  std::vector<double> scores(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < u.size(); ++j) scores[i] += u[j] * bank.at(i, j);
  double mx = scores[0];
  for (double s : scores) mx = std::max(mx, s);
  double z = 0.0;
  for (double s : scores) z += std::exp(s - mx);
  std::vector<double> probs(static_cast<std::size_t>(n_classes), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    probs[static_cast<std::size_t>(labels[i])] += std::exp(scores[i] - mx) / z;
  return probs;
}

}  // namespace

TEST_CASE("similarity scores, weights, and class mass match the brute-force oracle") {
  Rng rng(2024);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rng.index(12), d = 1 + rng.index(8);
    const int n_classes = 1 + static_cast<int>(rng.index(5));
    std::vector<double> u(d);
    for (auto& x : u) x = rng.normal();
    Tensor<double> bank = Tensor<double>::zeros({n, d});
    for (auto& x : bank.data) x = rng.normal();
    std::vector<int> labels(n);
    for (auto& y : labels) y = static_cast<int>(rng.index(static_cast<std::size_t>(n_classes)));

    const auto probs =
        class_probs(similarity_weights(example_logits(u, bank)), labels, n_classes);
    const auto want = reference_class_probs(u, bank, labels, n_classes);
    double total = 0.0;
    for (int c = 0; c < n_classes; ++c) {
      CHECK(std::abs(probs[static_cast<std::size_t>(c)] -
                     want[static_cast<std::size_t>(c)]) < 1e-9);
      total += probs[static_cast<std::size_t>(c)];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("classes without bank entries get exactly zero mass") {
  const std::vector<double> u = {1.0, 0.0};
  Tensor<double> bank = Tensor<double>::matrix(2, 2, {1, 0, 0, 1});
  const auto probs =
      class_probs(similarity_weights(example_logits(u, bank)), {0, 0}, 4);
  CHECK(probs[0] == 1.0);
  CHECK(probs[1] == 0.0);
  CHECK(probs[2] == 0.0);
  CHECK(probs[3] == 0.0);
}

TEST_CASE("bank permutation leaves the class distribution unchanged") {
  Rng rng(5);
  const std::size_t n = 9, d = 4;
  std::vector<double> u(d);
  for (auto& x : u) x = rng.normal();
  Tensor<double> bank = Tensor<double>::zeros({n, d});
  for (auto& x : bank.data) x = rng.normal();
  std::vector<int> labels = {0, 1, 2, 0, 1, 2, 0, 1, 2};

  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  rng.shuffle(perm);
  Tensor<double> bank_p = Tensor<double>::zeros({n, d});
  std::vector<int> labels_p(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels_p[i] = labels[perm[i]];
    for (std::size_t j = 0; j < d; ++j) bank_p.at(i, j) = bank.at(perm[i], j);
  }

  const auto a = class_probs(similarity_weights(example_logits(u, bank)), labels, 3);
  const auto b =
      class_probs(similarity_weights(example_logits(u, bank_p)), labels_p, 3);
  for (int c = 0; c < 3; ++c)
    CHECK(a[static_cast<std::size_t>(c)] ==
          doctest::Approx(b[static_cast<std::size_t>(c)]).epsilon(1e-12));
}

TEST_CASE("duplicating a class example never lowers that class's mass") {
  Rng rng(6);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rng.index(8), d = 1 + rng.index(6);
    std::vector<double> u(d);
    for (auto& x : u) x = rng.normal();
    Tensor<double> bank = Tensor<double>::zeros({n, d});
    for (auto& x : bank.data) x = rng.normal();
    std::vector<int> labels(n);
    for (auto& y : labels) y = static_cast<int>(rng.index(3));
    const std::size_t dup = rng.index(n);

    const auto before = class_probs(similarity_weights(example_logits(u, bank)), labels, 3);

    Tensor<double> bigger = Tensor<double>::zeros({n + 1, d});
    for (std::size_t i = 0; i < n * d; ++i) bigger.data[i] = bank.data[i];
    for (std::size_t j = 0; j < d; ++j) bigger.at(n, j) = bank.at(dup, j);
    std::vector<int> labels2 = labels;
    labels2.push_back(labels[dup]);
    const auto after =
        class_probs(similarity_weights(example_logits(u, bigger)), labels2, 3);

    const auto c = static_cast<std::size_t>(labels[dup]);
    CHECK(after[c] >= before[c] - 1e-12);
  }
}

TEST_CASE("one example per class equals a softmax over per-class scores") {
  Rng rng(8);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t d = 1 + rng.index(6);
    const int n_classes = 2 + static_cast<int>(rng.index(4));
    std::vector<double> u(d);
    for (auto& x : u) x = rng.normal();
    Tensor<double> bank = Tensor<double>::zeros({static_cast<std::size_t>(n_classes), d});
    for (auto& x : bank.data) x = rng.normal();
    std::vector<int> labels(static_cast<std::size_t>(n_classes));
    for (int c = 0; c < n_classes; ++c) labels[static_cast<std::size_t>(c)] = c;

    const auto probs = class_probs(similarity_weights(example_logits(u, bank)), labels,
                                   n_classes);
    // Plain softmax over the per-class dot products (a linear head whose
    // weight rows are the class examples, zero bias).
    const auto logits = example_logits(u, bank);
    const auto soft = similarity_weights(logits);
    for (int c = 0; c < n_classes; ++c)
      CHECK(std::abs(probs[static_cast<std::size_t>(c)] -
                     soft[static_cast<std::size_t>(c)]) < 1e-12);
  }
}

TEST_CASE("cosine and temperature variants rescale the raw scores") {
  const std::vector<double> u = {3.0, 4.0};
  Tensor<double> bank = Tensor<double>::matrix(1, 2, {6.0, 8.0});
  const auto plain = example_logits(u, bank);
  CHECK(plain[0] == doctest::Approx(50.0));
  const auto cos = example_logits(u, bank, true);
  CHECK(cos[0] == doctest::Approx(1.0).epsilon(1e-9));
  const auto warm = example_logits(u, bank, false, 2.0);
  CHECK(warm[0] == doctest::Approx(25.0));
}

TEST_CASE("example_logits validates its inputs") {
  const std::vector<double> u = {1.0, 2.0};
  CHECK_THROWS_AS(example_logits(u, Tensor<double>::zeros({0, 2})), ContractError);
  CHECK_THROWS_AS(example_logits(u, Tensor<double>::zeros({3, 5})), DimensionError);
  CHECK_THROWS_AS(class_probs<double>({0.5, 0.5}, {0, 7}, 3), DataError);
}

TEST_CASE("nearest_examples sorts by weight with stable index tie-breaks") {
  const std::vector<float> alpha = {0.1f, 0.4f, 0.1f, 0.4f};
  const std::vector<int> labels = {0, 1, 2, 3};
  const auto top = nearest_examples(alpha, labels, 4);
  CHECK(top[0].bank_index == 1);  // ties keep the lower index first
  CHECK(top[1].bank_index == 3);
  CHECK(top[2].bank_index == 0);
  CHECK(top[3].bank_index == 2);
  CHECK(top[0].intent == 1);
  CHECK(top[0].weight == doctest::Approx(0.4f));
  CHECK_THROWS_AS(nearest_examples(alpha, labels, 5), ContractError);
}

TEST_CASE("example_loss is the negative log of gold-class mass") {
  Tensor<double> scores = Tensor<double>::matrix(1, 4, {0.2, -1.0, 0.7, 0.1});
  const std::vector<int> labels = {0, 1, 0, 2};

  Graph<double> g;
  const auto row = g.leaf(scores, true);
  const auto loss = g.value(example_loss(g, row, labels, 0)).data[0];

  double z = 0.0, gold = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    z += std::exp(scores.data[i]);
    if (labels[i] == 0) gold += std::exp(scores.data[i]);
  }
  CHECK(loss == doctest::Approx(-std::log(gold / z)).epsilon(1e-12));

  Graph<double> h;
  CHECK_THROWS_AS(example_loss(h, h.leaf(scores), labels, 3), ProtocolError);
}

TEST_CASE("example_loss gradient pulls gold scores up and others down") {
  Tensor<double> scores = Tensor<double>::matrix(1, 3, {0.5, 0.1, -0.3});
  const std::vector<int> labels = {0, 1, 1};
  Graph<double> g;
  const auto row = g.leaf(scores, true);
  g.backward(example_loss(g, row, labels, 0));
  CHECK(g.grad(row).data[0] < 0.0);
  CHECK(g.grad(row).data[1] > 0.0);
  CHECK(g.grad(row).data[2] > 0.0);
}

TEST_CASE("cross_entropy_row matches a direct softmax cross-entropy") {
  Tensor<double> logits = Tensor<double>::matrix(1, 3, {1.0, -0.5, 0.25});
  Graph<double> g;
  const auto row = g.leaf(logits, true);
  const double loss = g.value(cross_entropy_row(g, row, 3, 2)).data[0];
  double z = 0.0;
  for (double x : logits.data) z += std::exp(x);
  CHECK(loss == doctest::Approx(-std::log(std::exp(0.25) / z)).epsilon(1e-12));
  Graph<double> h;
  CHECK_THROWS_AS(cross_entropy_row(h, h.leaf(logits), 3, 5), DataError);
}

TEST_CASE("linear_head_forward returns a softmax distribution") {
  Tensor<double> w = Tensor<double>::matrix(2, 3, {1, 0, 0, 0, 1, 0});
  Tensor<double> b = Tensor<double>::vector({0.0, 0.5});
  const auto p = linear_head_forward<double>({2.0, 1.0, -1.0}, w, b);
  const double z = std::exp(2.0) + std::exp(1.5);
  CHECK(p[0] == doctest::Approx(std::exp(2.0) / z).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(std::exp(1.5) / z).epsilon(1e-12));
  CHECK_THROWS_AS(linear_head_forward<double>({1.0}, w, b), DimensionError);
}
