// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "irscf/errors.hpp"
#include "test_util.hpp"

using namespace irscf;
using namespace irscf::testing;
namespace ad = irscf::ad;

TEST_CASE("matmul identity and imaginary unit") {
  Rng rng(1);
  const ComplexMatrix a = random_complex(rng, 2, 3);
  CHECK(matmul(ComplexMatrix::identity(2), a) == a);
  const ComplexMatrix j = ComplexMatrix::from(1, 1, {{0.0, 1.0}});
  const ComplexMatrix p = matmul(j, j);
  CHECK(p(0, 0).real() == -1.0);
  CHECK(p(0, 0).imag() == 0.0);
}

TEST_CASE("matmul agrees with a triple loop") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const ComplexMatrix a = random_complex(rng, 3, 2);
    const ComplexMatrix b = random_complex(rng, 2, 4);
    const ComplexMatrix c = matmul(a, b);
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t col = 0; col < 4; ++col) {
        cdouble acc = 0.0;
        for (std::size_t n = 0; n < 2; ++n) acc += a(r, n) * b(n, col);
        CHECK(std::abs(c(r, col) - acc) < 1e-12);
      }
    }
  }
}

TEST_CASE("matmul rejects mismatched shapes") {
  CHECK_THROWS_AS(matmul(ComplexMatrix(2, 3), ComplexMatrix(2, 3)), ShapeError);
}

TEST_CASE("matmul is associative") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const ComplexMatrix a = random_complex(rng, 3, 4);
    const ComplexMatrix b = random_complex(rng, 4, 2);
    const ComplexMatrix c = random_complex(rng, 2, 5);
    const ComplexMatrix lhs = matmul(matmul(a, b), c);
    const ComplexMatrix rhs = matmul(a, matmul(b, c));
    CHECK((lhs - rhs).max_abs() < 1e-10);
  }
}

TEST_CASE("hermitian_solve_pinv") {
  SUBCASE("identity") {
    const ComplexMatrix w = hermitian_solve_pinv(ComplexMatrix::identity(3));
    CHECK((w - ComplexMatrix::identity(3)).max_abs() < 1e-15);
  }
  SUBCASE("scalar") {
    const ComplexMatrix w = hermitian_solve_pinv(ComplexMatrix::from(1, 1, {2.0}));
    CHECK(w(0, 0).real() == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("multiply back") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng rng(seed);
      const ComplexMatrix h = random_complex(rng, 6, 3);
      const ComplexMatrix w = hermitian_solve_pinv(h);
      CHECK((matmul(h.adjoint(), w) - ComplexMatrix::identity(3)).max_abs() < 1e-10);
    }
  }
  SUBCASE("rank deficient") {
    Rng rng(3);
    ComplexMatrix h = random_complex(rng, 4, 2);
    h.set_column(1, h.column(0));
    CHECK_THROWS_AS(hermitian_solve_pinv(h), SingularError);
  }
  SUBCASE("wide") { CHECK_THROWS_AS(hermitian_solve_pinv(ComplexMatrix(2, 3)), SingularError); }
}

TEST_CASE("lrelu values") {
  CHECK(ad::lrelu(2.0) == 2.0);
  CHECK(ad::lrelu(-1.0) == doctest::Approx(-0.1).epsilon(1e-15));
  CHECK(ad::lrelu(0.0) == 0.0);
}

TEST_CASE("lrelu derivative is one at zero") {
  ad::Tape tape;
  const ad::Var x = tape.parameter(RealTensor::matrix(1, 3, {0.0, 2.0, -1.0}));
  tape.backward(ad::sum(ad::lrelu(x)));
  CHECK(x.grad()[0] == 1.0);
  CHECK(x.grad()[1] == 1.0);
  CHECK(x.grad()[2] == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("backward on simple scalars") {
  {
    ad::Tape tape;
    const ad::Var x = tape.parameter(RealTensor::scalar(3.0));
    tape.backward(ad::mul(x, x));
    CHECK(x.grad()[0] == doctest::Approx(6.0).epsilon(1e-15));
  }
  {
    ad::Tape tape;
    const ad::Var x = tape.parameter(RealTensor::scalar(1.0));
    tape.backward(ad::log2(ad::add_scalar(x, 1.0)));
    CHECK(x.grad()[0] == doctest::Approx(1.0 / (2.0 * std::numbers::ln2)).epsilon(1e-14));
  }
}

TEST_CASE("backward requires a scalar loss and runs once") {
  ad::Tape tape;
  const ad::Var x = tape.parameter(RealTensor::matrix(1, 2, {1.0, 2.0}));
  CHECK_THROWS_AS(tape.backward(x), ShapeError);
  const ad::Var s = ad::sum(x);
  tape.backward(s);
  CHECK_THROWS(tape.backward(s));
}

TEST_CASE("backward reports the node with a non-finite adjoint") {
  ad::Tape tape;
  const ad::Var x = tape.parameter(RealTensor::scalar(0.0));
  const ad::Var r = ad::sqrt(x);  // d/dx sqrt at 0 is infinite
  try {
    tape.backward(r);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.node() <= r.index());
  }
}

// Weighted sum against fixed random coefficients so every output entry matters.
static ad::Var weighted(ad::Tape& tape, ad::Var y, std::uint64_t seed) {
  Rng rng(seed + 977);
  return ad::sum(ad::mul(y, tape.constant(random_tensor(rng, y.rows(), y.cols()))));
}

TEST_CASE("every primitive matches finite differences on 100 seeds") {
  using Fn = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;
  struct Case {
    const char* name;
    std::vector<std::pair<std::size_t, std::size_t>> shapes;
    bool positive;
    Fn fn;
  };
  const std::vector<Case> cases = {
      {"add", {{2, 3}, {2, 3}}, false, [](ad::Tape&, const auto& v) { return ad::add(v[0], v[1]); }},
      {"sub", {{2, 3}, {2, 3}}, false, [](ad::Tape&, const auto& v) { return ad::sub(v[0], v[1]); }},
      {"mul", {{2, 3}, {2, 3}}, false, [](ad::Tape&, const auto& v) { return ad::mul(v[0], v[1]); }},
      {"div", {{2, 3}, {2, 3}}, true, [](ad::Tape&, const auto& v) { return ad::div(v[0], v[1]); }},
      {"add_row", {{3, 2}, {1, 2}}, false,
       [](ad::Tape&, const auto& v) { return ad::add_row(v[0], v[1]); }},
      {"matmul", {{2, 3}, {3, 4}}, false,
       [](ad::Tape&, const auto& v) { return ad::matmul(v[0], v[1]); }},
      {"scale", {{2, 2}}, false, [](ad::Tape&, const auto& v) { return ad::scale(v[0], -1.7); }},
      {"add_scalar", {{2, 2}}, false,
       [](ad::Tape&, const auto& v) { return ad::add_scalar(v[0], 0.3); }},
      {"div_scalar", {{2, 3}, {1, 1}}, true,
       [](ad::Tape&, const auto& v) { return ad::div_scalar(v[0], v[1]); }},
      {"sqrt", {{2, 3}}, true, [](ad::Tape&, const auto& v) { return ad::sqrt(v[0]); }},
      {"log", {{2, 3}}, true, [](ad::Tape&, const auto& v) { return ad::log(v[0]); }},
      {"log2", {{2, 3}}, true, [](ad::Tape&, const auto& v) { return ad::log2(v[0]); }},
      {"max_set", {{2, 3}, {2, 3}, {2, 3}}, false,
       [](ad::Tape&, const auto& v) { return ad::max_set(v); }},
      {"lrelu", {{3, 3}}, false, [](ad::Tape&, const auto& v) { return ad::lrelu(v[0]); }},
      {"concat_cols", {{2, 1}, {2, 3}}, false,
       [](ad::Tape&, const auto& v) { return ad::concat_cols(v); }},
      {"concat_rows", {{1, 3}, {2, 3}}, false,
       [](ad::Tape&, const auto& v) { return ad::concat_rows(v); }},
      {"mean", {{2, 3}}, false, [](ad::Tape&, const auto& v) { return ad::mean(v[0]); }},
      {"sum", {{2, 3}}, false, [](ad::Tape&, const auto& v) { return ad::sum(v[0]); }},
      {"row_sum", {{3, 4}}, false, [](ad::Tape&, const auto& v) { return ad::row_sum(v[0]); }},
      {"sq_mag", {{2, 3}, {2, 3}}, false,
       [](ad::Tape&, const auto& v) { return ad::sq_mag(v[0], v[1]); }},
      {"slice_cols", {{2, 5}}, false,
       [](ad::Tape&, const auto& v) { return ad::slice_cols(v[0], 1, 4); }},
      {"slice_rows", {{4, 2}}, false,
       [](ad::Tape&, const auto& v) { return ad::slice_rows(v[0], 1, 3); }},
      {"reshape", {{2, 6}}, false, [](ad::Tape&, const auto& v) { return ad::reshape(v[0], 3, 4); }},
      {"transpose", {{2, 3}}, false, [](ad::Tape&, const auto& v) { return ad::transpose(v[0]); }},
  };
  for (const Case& c : cases) {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng rng(seed);
      std::vector<RealTensor> inputs;
      for (auto [r, col] : c.shapes) {
        inputs.push_back(c.positive ? random_tensor(rng, r, col, 0.5, 2.0)
                                    : random_tensor(rng, r, col));
      }
      worst = std::max(worst, tape_gradcheck(inputs, [&](ad::Tape& t, const auto& v) {
                         return weighted(t, c.fn(t, v), seed);
                       }));
    }
    INFO(c.name);
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("twelve-parameter composite of all primitives") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const std::vector<RealTensor> inputs = {random_tensor(rng, 2, 2), random_tensor(rng, 2, 2),
                                            random_tensor(rng, 2, 2, 0.5, 1.5)};
    const double err = tape_gradcheck(inputs, [](ad::Tape&, const auto& v) {
      const ad::Var a = ad::matmul(v[0], v[1]);
      const ad::Var b = ad::sub(ad::add(a, v[2]), ad::mul(v[0], v[2]));
      const ad::Var m = ad::max_set(std::vector<ad::Var>{ad::lrelu(b), ad::scale(v[1], 0.5)});
      const ad::Var mag = ad::add_scalar(ad::sq_mag(m, v[0]), 1.0);
      const ad::Var joined = ad::concat_cols(std::vector<ad::Var>{ad::log(mag), ad::sqrt(v[2])});
      const ad::Var stacked = ad::concat_rows(std::vector<ad::Var>{joined, ad::log2(joined)});
      const ad::Var d = ad::div_scalar(stacked, ad::add_scalar(ad::mean(v[2]), 1.0));
      const ad::Var corner = ad::slice_cols(ad::slice_rows(d, 0, 2), 0, 2);
      return ad::add(ad::mean(ad::div(corner, mag)),
                     ad::sum(ad::row_sum(ad::transpose(ad::reshape(d, 2, 8)))));
    });
    CHECK(err < 1e-5);
  }
}

TEST_CASE("max_set routes the adjoint to the argmax, ties to the lowest index") {
  auto grads = [](double a0, double b0) {
    ad::Tape tape;
    const ad::Var a = tape.parameter(RealTensor::scalar(a0));
    const ad::Var b = tape.parameter(RealTensor::scalar(b0));
    tape.backward(ad::max_set(std::vector<ad::Var>{a, b}));
    return std::pair{a.grad()[0], b.grad()[0]};
  };
  CHECK(grads(1.0, 2.0) == std::pair{0.0, 1.0});
  // Moving the loser by less than the gap keeps the routing.
  CHECK(grads(1.9, 2.0) == std::pair{0.0, 1.0});
  CHECK(grads(2.0, 2.0) == std::pair{1.0, 0.0});
}
