#include <doctest.h>

#include <random>
#include <set>

#include "mmot/metric_engine.hpp"
#include "oracles.hpp"

using namespace mmot;

namespace {

Point ones(const std::vector<int>& dims, double v = 0.5) {
  Point p;
  for (int n : dims) p.push_back(Vector::Constant(n, v));
  return p;
}

Matrix all_pairs(int m, double a) {
  Matrix A = Matrix::Constant(m, m, a);
  A.diagonal().setZero();
  return A;
}

std::array<int, 3> counts(const Signature& s) {
  return {s.q_plus, s.q_minus, s.q_zero};
}

// Metric of a random m-marginal quadratic cost: independent random cross blocks for every pair.
MetricMatrix random_metric(std::mt19937_64& rng, int m, int n, const PartitionWeights& w) {
  std::vector<Matrix> blocks(static_cast<std::size_t>(m * m));
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      Matrix B(n, n);
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) B(a, b) = g(rng);
      }
      blocks[static_cast<std::size_t>(i * m + j)] = B;
    }
  }
  return assemble_metric(
      std::vector<int>(static_cast<std::size_t>(m), n),
      [&](int i, int j) { return blocks[static_cast<std::size_t>(i * m + j)]; }, w);
}

}  // namespace

TEST_CASE("enumerate_partitions") {
  const auto two = enumerate_partitions(2);
  REQUIRE(two.size() == 1);
  CHECK(two[0].label() == "{1}|{2}");

  const auto three = enumerate_partitions(3);
  REQUIRE(three.size() == 3);
  CHECK(three[0].label() == "{1}|{2,3}");
  CHECK(three[1].label() == "{1,2}|{3}");
  CHECK(three[2].label() == "{1,3}|{2}");

  for (int m = 2; m <= 10; ++m) {
    const auto parts = enumerate_partitions(m);
    CHECK(parts.size() == (std::size_t{1} << (m - 1)) - 1);
    std::set<std::string> labels;
    for (const auto& p : parts) {
      labels.insert(p.label());
      CHECK(p.contains_plus(0));
      CHECK(p.plus.size() + p.minus.size() == static_cast<std::size_t>(m));
    }
    CHECK(labels.size() == parts.size());
  }
  CHECK_THROWS_AS(enumerate_partitions(1), InputError);
  CHECK_THROWS_AS(enumerate_partitions(21), InputError);
}

TEST_CASE("bipartitions are canonical") {
  CHECK(Bipartition::from_group(4, {1, 2}) == Bipartition::from_group(4, {0, 3}));
  CHECK(Bipartition::from_group(4, {1, 2}).label() == "{1,4}|{2,3}");
  CHECK_THROWS_AS(Bipartition::from_group(3, {}), InputError);
  CHECK_THROWS_AS(Bipartition::from_group(3, {0, 1, 2}), InputError);
}

TEST_CASE("partition weights") {
  for (int m = 2; m <= 8; ++m) {
    const Matrix a = PartitionWeights::uniform(m).pair_coefficients();
    const double expected = std::pow(2.0, m - 2) / (std::pow(2.0, m - 1) - 1.0);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) CHECK(a(i, j) == doctest::Approx(i == j ? 0.0 : expected).epsilon(1e-14));
    }
  }
  const auto single = PartitionWeights::single(3, Bipartition::from_group(3, {0}));
  const Matrix a = single.pair_coefficients();
  CHECK(a(0, 1) == 1.0);
  CHECK(a(0, 2) == 1.0);
  CHECK(a(1, 2) == 0.0);

  const auto p = enumerate_partitions(3);
  CHECK_THROWS_AS(PartitionWeights::from_list(3, {{p[0], 0.5}, {p[1], 0.4}}), InputError);
  CHECK_THROWS_AS(PartitionWeights::from_list(3, {{p[0], 1.5}, {p[1], -0.5}}), InputError);
  CHECK_NOTHROW(PartitionWeights::from_list(3, {{p[0], 0.5}, {p[2], 0.5}}));
}

TEST_CASE("assemble_metric examples") {
  const auto concave = CostSpec::sum_function(3, -Matrix::Identity(1, 1));
  const auto M = assemble_metric(concave, ones({1, 1, 1}), PartitionWeights::uniform(3));
  Matrix expected(3, 3);
  expected << 0, -1, -1, -1, 0, -1, -1, -1, 0;
  expected *= 2.0 / 3.0;
  CHECK((M.G - expected).cwiseAbs().maxCoeff() < 1e-15);

  const auto single =
      assemble_metric(concave, ones({1, 1, 1}), PartitionWeights::single(3, Bipartition::from_group(3, {0})));
  CHECK(single.block(1, 2)(0, 0) == 0.0);
  CHECK(single.block(0, 1)(0, 0) == -1.0);

  Matrix A(4, 4);
  A << 0, -1, -1, -1, -1, 0, -1, -1, -1, -1, 0, -5, -1, -1, -5, 0;
  const auto six =
      assemble_metric(CostSpec::bilinear({1, 1, 1, 1}, A), ones({1, 1, 1, 1}), PartitionWeights::uniform(4));
  Matrix K(4, 4);
  K << 0, 1, 1, 1, 1, 0, 1, 1, 1, 1, 0, 5, 1, 1, 5, 0;
  CHECK((six.G + (4.0 / 7.0) * K).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("metric matrices are symmetric with zero diagonal blocks") {
  const auto cost = CostSpec::neg_determinant(3);
  Point x{Vector::Random(3), Vector::Random(3), Vector::Random(3)};
  const auto M = assemble_metric(cost, x, PartitionWeights::uniform(3));
  CHECK((M.G - M.G.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < 3; ++i) CHECK(M.block(i, i).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("signature examples") {
  CHECK(counts(signature(Matrix::Zero(5, 5))) == std::array<int, 3>{0, 0, 5});
  Matrix H = Matrix::Zero(3, 3);
  H.diagonal() << 1, -1, 0;
  CHECK(counts(signature(H)) == std::array<int, 3>{1, 1, 1});
  // Near-zero eigenvalues move between classes only through zero_tol.
  Matrix D = Matrix::Zero(2, 2);
  D.diagonal() << 1, 1e-9;
  CHECK(counts(signature(D, 1e-6)) == std::array<int, 3>{1, 0, 1});
  CHECK(counts(signature(D, 1e-12)) == std::array<int, 3>{2, 0, 0});
  const auto s = signature(D, 1e-6);
  CHECK(s.zero_tol == 1e-6);
  CHECK(s.eigenvalues.size() == 2);
}

TEST_CASE("signature agrees with a Jacobi eigenvalue oracle") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 9;
    const Matrix A = oracle::random_symmetric(rng, n);
    const auto s = signature(A);
    const auto ev = oracle::jacobi_eigenvalues(A);
    for (std::size_t k = 0; k < ev.size(); ++k) CHECK(s.eigenvalues[k] == doctest::Approx(ev[k]).epsilon(1e-10));
    CHECK(counts(s) == oracle::inertia(A));
  }
}

TEST_CASE("Sylvester invariance and scaling") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 6;
    const int plus = trial % (n + 1);
    const int minus = (n - plus) / 2;
    const Matrix A = oracle::random_with_inertia(rng, n, plus, minus);
    const auto base = counts(signature(A, 1e-8));
    CHECK(base == std::array<int, 3>{plus, minus, n - plus - minus});
    for (int k = 0; k < 10; ++k) {
      const Matrix P = oracle::random_congruence(rng, n, 1e3);
      const Matrix B = P * A * P.transpose();
      CHECK(counts(signature(B)) == base);
    }
    CHECK(counts(signature(Matrix(3.5 * A))) == base);
    CHECK(counts(signature(Matrix(-A))) == std::array<int, 3>{base[1], base[0], base[2]});
  }
}

TEST_CASE("dimension bounds") {
  Signature s = signature(Matrix(Eigen::Vector4d(1, -1, -1, -1).asDiagonal()));
  CHECK(dimension_bound(s) == 1);
  CHECK(graph_dimension_bound(s) == 3);
  Matrix rank_deficient = Matrix::Zero(4, 4);
  rank_deficient(0, 1) = rank_deficient(1, 0) = 1.0;
  s = signature(rank_deficient);
  CHECK(counts(s) == std::array<int, 3>{1, 1, 2});
  CHECK(dimension_bound(s) == 3);
}

TEST_CASE("m=3 shortcut") {
  const auto cost = CostSpec::bilinear({1, 1, 1}, all_pairs(3, -1.0));
  const auto x = ones({1, 1, 1});
  const auto s = signature_m3_shortcut(cost, x, PartitionWeights::uniform(3));
  CHECK(counts(s) == std::array<int, 3>{2, 1, 0});
  CHECK(counts(signature(assemble_metric(cost, x, PartitionWeights::uniform(3)))) == std::array<int, 3>{2, 1, 0});

  // A + A' negative definite gives (2n, n, 0).
  const auto concave = CostSpec::sum_function(3, -Matrix::Identity(2, 2));
  CHECK(counts(signature_m3_shortcut(concave, ones({2, 2, 2}), PartitionWeights::uniform(3))) ==
        std::array<int, 3>{4, 2, 0});

  CHECK_THROWS_AS(signature_m3_shortcut(CostSpec::bilinear({1, 1, 1, 1}, all_pairs(4, -1.0)), ones({1, 1, 1, 1}),
                                        PartitionWeights::uniform(4)),
                  ShortcutInapplicable);
  const auto singular = CostSpec::sum_function(3, Matrix(Eigen::Vector2d(1.0, 0.0).asDiagonal()));
  CHECK_THROWS_AS(signature_m3_shortcut(singular, ones({2, 2, 2}), PartitionWeights::uniform(3)), ShortcutInapplicable);
}

TEST_CASE("shortcut and recursion agree with the direct signature on random instances") {
  std::mt19937_64 rng(31);
  int shortcut_cases = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 3;
    const auto M = random_metric(rng, 3, n, PartitionWeights::uniform(3));
    const auto direct = counts(signature(M));
    CHECK(direct == oracle::inertia(M.G));
    CHECK(counts(signature_m3_shortcut(M)) == direct);
    ++shortcut_cases;
    const auto rec = signature_recursive(M);
    CHECK(counts(rec.signature) == direct);
  }
  CHECK(shortcut_cases == 200);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 4 + trial % 2;
    const int n = 1 + (trial / 2) % 2;
    const auto M = random_metric(rng, m, n, PartitionWeights::uniform(m));
    const auto rec = signature_recursive(M);
    CHECK(counts(rec.signature) == counts(signature(M)));
    CHECK(counts(rec.signature) == oracle::inertia(M.G));
    if (!rec.fell_back) CHECK(rec.steps.size() == static_cast<std::size_t>(m - 2));
  }
}

TEST_CASE("recursion reproduces the m=3 shortcut and falls back on singular blocks") {
  const auto cost = CostSpec::bilinear({1, 1, 1}, all_pairs(3, -1.0));
  const auto rec = signature_recursive(cost, ones({1, 1, 1}), PartitionWeights::uniform(3));
  CHECK_FALSE(rec.fell_back);
  REQUIRE(rec.steps.size() == 1);
  CHECK(rec.steps[0].added_marginal == 0);
  CHECK(counts(rec.signature) == std::array<int, 3>{2, 1, 0});

  const auto degenerate = CostSpec::sum_function(3, Matrix(Eigen::Vector2d(1.0, 0.0).asDiagonal()));
  const auto fb = signature_recursive(degenerate, ones({2, 2, 2}), PartitionWeights::uniform(3));
  CHECK(fb.fell_back);
  CHECK_FALSE(fb.reason.empty());
  CHECK(counts(fb.signature) ==
        counts(signature(assemble_metric(degenerate, ones({2, 2, 2}), PartitionWeights::uniform(3)))));
}

TEST_CASE("four-marginal counterexample through every path") {
  Matrix A(4, 4);
  A << 0, -1, -1, -1, -1, 0, -1, -1, -1, -1, 0, -5, -1, -1, -5, 0;
  const auto cost = CostSpec::bilinear({1, 1, 1, 1}, A);
  const auto x = ones({1, 1, 1, 1});
  const auto M = assemble_metric(cost, x, PartitionWeights::uniform(4));
  CHECK(counts(signature(M)) == std::array<int, 3>{2, 2, 0});
  CHECK(counts(signature_recursive(M).signature) == std::array<int, 3>{2, 2, 0});
  const auto nc = necessary_condition_check(cost, x);
  CHECK(nc.all_pass);
  CHECK(nc.triples.size() == 24);
}

TEST_CASE("rank bounds") {
  std::mt19937_64 rng(41);
  const auto two = CostSpec::sum_function(2, oracle::random_with_inertia(rng, 2, 1, 1));
  const auto rb = rank_bound_check(assemble_metric(two, ones({2, 2}), PartitionWeights::uniform(2)));
  CHECK(rb.max_rank == 2);
  CHECK(counts(rb.signature) == std::array<int, 3>{2, 2, 0});
  CHECK(rb.holds);
  CHECK(rb.margin_plus == 0);

  const auto concave = CostSpec::sum_function(3, -Matrix::Identity(1, 1));
  const auto r3 = rank_bound_check(assemble_metric(concave, ones({1, 1, 1}), PartitionWeights::uniform(3)));
  CHECK(r3.max_rank == 1);
  CHECK(r3.signature.q_plus == 2);
  CHECK(r3.signature.q_minus == 1);

  Matrix coupling = all_pairs(3, 0.0);
  coupling(0, 1) = coupling(1, 0) = 1.0;
  const auto sparse = rank_bound_check(
      assemble_metric(CostSpec::bilinear({2, 2, 2}, coupling), ones({2, 2, 2}), PartitionWeights::uniform(3)));
  CHECK(sparse.ranks(1, 2) == 0);
  CHECK(sparse.ranks(0, 1) == 2);
  CHECK(sparse.holds);

  for (int trial = 0; trial < 100; ++trial) {
    const int m = 2 + trial % 4;
    const auto M = random_metric(rng, m, 1 + trial % 3, PartitionWeights::uniform(m));
    const auto r = rank_bound_check(M);
    CHECK(r.holds);
    CHECK(r.signature.q_plus >= r.max_rank);
    CHECK(r.signature.q_minus >= r.max_rank);
  }
}

TEST_CASE("necessary condition") {
  const auto concave = CostSpec::sum_function(3, -Matrix::Identity(2, 2));
  const auto pass = necessary_condition_check(concave, ones({2, 2, 2}));
  CHECK(pass.all_pass);
  CHECK_FALSE(pass.excludes_timelike_optimum);
  for (const auto& t : pass.triples) {
    CHECK(t.applicable);
    CHECK(t.max_eigenvalue == doctest::Approx(-2.0));
  }

  const auto convex = CostSpec::sum_function(3, Matrix::Identity(2, 2));
  const auto fail = necessary_condition_check(convex, ones({2, 2, 2}));
  CHECK_FALSE(fail.all_pass);
  CHECK(fail.excludes_timelike_optimum);
  for (const auto& t : fail.triples) CHECK_FALSE(t.negative_definite);

  const auto singular = CostSpec::sum_function(3, Matrix(Eigen::Vector2d(-1.0, 0.0).asDiagonal()));
  const auto na = necessary_condition_check(singular, ones({2, 2, 2}));
  for (const auto& t : na.triples) CHECK_FALSE(t.applicable);

  CHECK_THROWS_AS(necessary_condition_check(CostSpec::bilinear({1, 1}, all_pairs(2, -1.0)), ones({1, 1})), InputError);
}

TEST_CASE("diagonalizing frame") {
  Matrix H = Matrix::Zero(4, 4);
  H.diagonal() << 1, 1, -1, 0;
  const auto f = diagonalizing_frame(H);
  CHECK((f.U.cwiseAbs() - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(f.residual < 1e-12);

  Matrix G(3, 3);
  G << 0, -1, -1, -1, 0, -1, -1, -1, 0;
  G *= 2.0 / 3.0;
  const auto g = diagonalizing_frame(G);
  CHECK(g.h == Eigen::Vector3i(1, 1, -1));
  CHECK(g.residual < 1e-12);
  CHECK((g.U * G * g.U.transpose() - Matrix(g.h.cast<double>().asDiagonal())).cwiseAbs().maxCoeff() < 1e-12);

  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix P = oracle::random_congruence(rng, 3, 100.0);
    const auto c = diagonalizing_frame(Matrix(P * G * P.transpose()));
    CHECK(c.h == g.h);
    CHECK(c.residual < 1e-9);
  }
}

TEST_CASE("bipartite signature") {
  std::mt19937_64 rng(47);
  Matrix B(3, 2);
  B << 1, 0, 0, 1, 1, 1;
  const auto full = CostSpec::external({3, 2}, [B](const Point& x) { return x[0].dot(B * x[1]); });
  const auto p = Bipartition::from_group(2, {0});
  Point x{Vector::Zero(3), Vector::Zero(2)};
  CHECK(counts(bipartite_signature(full, x, p)) == std::array<int, 3>{2, 2, 1});

  Matrix A = all_pairs(4, 0.0);
  A(0, 2) = A(2, 0) = -1.0;
  A(1, 3) = A(3, 1) = -2.0;
  const auto four = CostSpec::bilinear({1, 1, 1, 1}, A);
  const auto split = Bipartition::from_group(4, {0, 1});
  const auto s4 = bipartite_signature(four, ones({1, 1, 1, 1}), split);
  CHECK(counts(s4) == std::array<int, 3>{2, 2, 0});
  CHECK(dimension_bound(s4) == 2);

  const auto zero = CostSpec::bilinear({2, 2}, all_pairs(2, 0.0));
  CHECK(counts(bipartite_signature(zero, ones({2, 2}), Bipartition::from_group(2, {0}))) ==
        std::array<int, 3>{0, 0, 4});

  // Agreement with the direct eigendecomposition of the single-partition metric, including rank deficiency.
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 2 + trial % 3;
    const int n = 1 + trial % 3;
    const std::vector<int> dims(static_cast<std::size_t>(m), n);
    const int q = trial % (n + 1);
    const auto cost = CostSpec::sum_function(m, oracle::random_with_inertia(rng, n, q, 0));
    const auto parts = enumerate_partitions(m);
    const auto& part = parts[static_cast<std::size_t>(trial) % parts.size()];
    const auto pt = ones(dims);
    const auto direct = signature(assemble_metric(cost, pt, PartitionWeights::single(m, part)), 1e-9);
    const auto formula = bipartite_signature(cost, pt, part);
    CHECK(counts(formula) == counts(direct));
    CHECK(formula.q_plus == formula.q_minus);
  }
}
