// Kronecker algebra and block layout tests
#include <gtest/gtest.h>

#include <random>

#include "momentprop/kron.hpp"

using namespace momentprop;

namespace {

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

}  // namespace

TEST(KronProduct, RowVectors) {
  Matrix a(1, 2), b(1, 2);
  a << 1, 2;
  b << 3, 4;
  Matrix expected(1, 4);
  expected << 3, 4, 6, 8;
  EXPECT_EQ(kron_product(a, b), expected);
}

TEST(KronProduct, ScalarOneIsIdentity) {
  std::mt19937_64 rng(1);
  const Matrix a = random_matrix(rng, 3, 2);
  EXPECT_EQ(kron_product(a, Matrix::Identity(1, 1)), a);
}

TEST(KronProduct, EntryFormula) {
  std::mt19937_64 rng(2);
  const Matrix a = random_matrix(rng, 2, 3);
  const Matrix b = random_matrix(rng, 3, 2);
  const Matrix k = kron_product(a, b);
  ASSERT_EQ(k.rows(), 6);
  ASSERT_EQ(k.cols(), 6);
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 3; ++j)
      for (Eigen::Index p = 0; p < 3; ++p)
        for (Eigen::Index q = 0; q < 2; ++q) EXPECT_EQ(k(i * 3 + p, j * 2 + q), a(i, j) * b(p, q));
}

TEST(KronProduct, MixedProductIdentity) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> dim(1, 4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = dim(rng), q = dim(rng), r = dim(rng), s = dim(rng), u = dim(rng), v = dim(rng);
    const Matrix A = random_matrix(rng, p, q), B = random_matrix(rng, r, s);
    const Matrix C = random_matrix(rng, q, u), D = random_matrix(rng, s, v);
    const Matrix lhs = kron_product(A, B) * kron_product(C, D);
    const Matrix rhs = kron_product(A * C, B * D);
    EXPECT_LE((lhs - rhs).norm(), 1e-12 * std::max(1.0, rhs.norm()));
  }
}

TEST(KronPower, ZerothPowerIsOne) {
  std::mt19937_64 rng(4);
  EXPECT_EQ(kron_power(random_matrix(rng, 3, 2), 0), Matrix::Ones(1, 1));
  EXPECT_EQ(kron_power(Vector(Vector::Constant(3, 2.0)), 0), Vector::Ones(1));
}

TEST(KronPower, ScalarCube) { EXPECT_DOUBLE_EQ(kron_power(Matrix(Matrix::Constant(1, 1, 2.0)), 3)(0, 0), 8.0); }

TEST(KronPower, OnesSquared) { EXPECT_EQ(kron_power(Vector(Vector::Ones(2)), 2), Vector::Ones(4)); }

TEST(KronPower, DimensionsAndAdditivity) {
  std::mt19937_64 rng(5);
  const Matrix m = random_matrix(rng, 2, 3);
  for (std::size_t j = 0; j <= 4; ++j) {
    const Matrix mj = kron_power(m, j);
    EXPECT_EQ(static_cast<std::size_t>(mj.rows()), saturating_pow(2, j));
    EXPECT_EQ(static_cast<std::size_t>(mj.cols()), saturating_pow(3, j));
    for (std::size_t k = 0; j + k <= 4; ++k) {
      const Matrix lhs = kron_power(m, j + k);
      EXPECT_LE((lhs - kron_product(mj, kron_power(m, k))).norm(), 1e-12 * std::max(1.0, lhs.norm()));
    }
  }
}

TEST(KronProduct, SizeLimitIsReported) {
  const std::size_t old = element_limit();
  set_element_limit(100);
  EXPECT_THROW(kron_product(Matrix::Ones(11, 1), Matrix::Ones(10, 1)), SizeLimitError);
  try {
    (void)kron_power(Vector(Vector::Ones(3)), 5);
    ADD_FAILURE() << "expected a size-limit error";
  } catch (const SizeLimitError& e) {
    EXPECT_EQ(e.required(), 243u);
    EXPECT_EQ(e.allowed(), 100u);
  }
  set_element_limit(old);
}

TEST(BlockLayout, Offsets) {
  BlockLayout l(2, 3);
  EXPECT_EQ(l.offset(0), 0u);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(l.offset(j + 1) - l.offset(j), saturating_pow(2, j));
  EXPECT_EQ(l.total(), 15u);
  EXPECT_EQ(BlockLayout(2, 1).total(), 3u);
}

TEST(BlockLayout, VehicleSize) { EXPECT_EQ(BlockLayout(6, 8).total(), 2'015'539u); }

TEST(StackedView, ScalarBlocks) {
  Vector v(3);
  v << 1, 0.5, 0.25;
  EXPECT_EQ(stacked_view(v, BlockLayout(1, 2), 2), Vector::Constant(1, 0.25));
}

TEST(StackedView, OutOfRange) {
  EXPECT_THROW(stacked_view(Vector::Ones(3), BlockLayout(1, 2), 3), PreconditionError);
  EXPECT_THROW(stacked_view(Vector::Ones(4), BlockLayout(1, 2), 1), PreconditionError);
}
