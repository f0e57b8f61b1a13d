// SPDX-License-Identifier: Apache-2.0
#include "hegmm/matrix.hpp"

#include <cstdint>
#include <random>

#include "gtest/gtest.h"

using namespace hegmm;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    Matrix m(rows, cols);
    std::uniform_int_distribution<value_t> dist(-9, 9);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            m(r, c) = dist(rng);
        }
    }
    return m;
}

Matrix iota_matrix(std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    value_t v = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            m(r, c) = v++;
        }
    }
    return m;
}

}  // namespace

TEST(Matrix, ConstructionValidation) {
    EXPECT_THROW(Matrix(0, 3), DimensionError);
    EXPECT_THROW(Matrix(2, 2, {1, 2, 3}), DimensionError);
    const Matrix m(2, 3, {1, 2, 3, 4, 5, 6});
    EXPECT_EQ(m(1, 2), 6);
}

TEST(Matrix, CheckedArithmeticRefusesToWrap) {
    const value_t big = std::numeric_limits<value_t>::max();
    EXPECT_THROW(checked_add(big, 1), OverflowError);
    EXPECT_THROW(checked_mul(big, 2), OverflowError);
    EXPECT_EQ(checked_add(big - 1, 1), big);
    const Matrix a(1, 1, {big});
    const Matrix b(1, 1, {2});
    EXPECT_THROW(naive_matmul(a, b), OverflowError);
}

TEST(Sigma, RotatesRowByRowIndex) {
    const Matrix a(2, 3, {0, 1, 2, 3, 4, 5});
    const Matrix expected(2, 3, {0, 1, 2, 4, 5, 3});
    EXPECT_EQ(sigma(a), expected);
}

TEST(Sigma, SingleRowIsFixedPoint) {
    const Matrix a = iota_matrix(1, 5);
    EXPECT_EQ(sigma(a), a);
}

TEST(Sigma, ThreeByThreeRowsRotateLeftByIndex) {
    const Matrix a = iota_matrix(3, 3);
    Matrix expected(3, 3, {0, 1, 2, 4, 5, 3, 8, 6, 7});
    EXPECT_EQ(sigma(a), expected);
}

TEST(Tau, RotatesColumnByColumnIndex) {
    const Matrix b(3, 2, {0, 1, 2, 3, 4, 5});
    const Matrix expected(3, 2, {0, 3, 2, 5, 4, 1});
    EXPECT_EQ(tau(b), expected);
}

TEST(Tau, SingleColumnIsFixedPoint) {
    const Matrix b = iota_matrix(5, 1);
    EXPECT_EQ(tau(b), b);
}

TEST(Tau, IdentityCollapsesToTopRow) {
    // tau(I)_ij = I_[i+j]_3,j is 1 exactly when i == 0.
    const Matrix expected(3, 3, {1, 1, 1, 0, 0, 0, 0, 0, 0});
    EXPECT_EQ(tau(Matrix::identity(3)), expected);
}

TEST(Eps, ShiftsColumnsLeftCyclically) {
    const Matrix a(2, 3, {0, 1, 2, 3, 4, 5});
    const Matrix expected(2, 3, {1, 2, 0, 4, 5, 3});
    EXPECT_EQ(eps(a, 1, 2, 3), expected);
}

TEST(Eps, ZeroShiftSameDimsIsIdentity) {
    const Matrix a = iota_matrix(4, 3);
    EXPECT_EQ(eps(a, 0, 4, 3), a);
}

TEST(Eps, WideningDuplicatesColumnsCyclically) {
    const Matrix a = iota_matrix(3, 2);
    const Matrix widened = eps(a, 0, 3, 5);
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 5; ++c) {
            EXPECT_EQ(widened(r, c), a(r, c % 2));
        }
    }
    const Matrix shifted = eps(a, 1, 3, 5);
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 5; ++c) {
            EXPECT_EQ(shifted(r, c), a(r, (c + 1) % 2));
        }
    }
}

TEST(Eps, KeepsRowCount) {
    const Matrix a = iota_matrix(3, 2);
    EXPECT_THROW(eps(a, 0, 4, 2), DimensionError);
}

TEST(Omega, ShiftsRowsUpCyclically) {
    const Matrix b(3, 2, {0, 1, 2, 3, 4, 5});
    const Matrix expected(2, 2, {2, 3, 4, 5});
    EXPECT_EQ(omega(b, 1, 2, 2), expected);
}

TEST(Omega, ZeroShiftSameDimsIsIdentity) {
    const Matrix b = iota_matrix(3, 4);
    EXPECT_EQ(omega(b, 0, 3, 4), b);
}

TEST(Omega, HeighteningDuplicatesRowsCyclically) {
    const Matrix b = iota_matrix(2, 5);
    const Matrix grown = omega(b, 0, 3, 5);
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 5; ++c) {
            EXPECT_EQ(grown(r, c), b(r % 2, c));
        }
    }
}

TEST(EpsOmega, ShiftIndicesArePeriodicModSourceDim) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t m = 1 + rng() % 6, l = 1 + rng() % 6, n = 1 + rng() % 6;
        const Matrix a = random_matrix(m, l, rng);
        const Matrix b = random_matrix(l, n, rng);
        const std::size_t k = rng() % l;
        EXPECT_EQ(eps(a, k, m, n), eps(a, k + l, m, n));
        EXPECT_EQ(omega(b, k, m, n), omega(b, k + l, m, n));
    }
}

TEST(NaiveMatmul, IdentityAndDotProduct) {
    std::mt19937_64 rng(3);
    const Matrix b = random_matrix(3, 4, rng);
    EXPECT_EQ(naive_matmul(Matrix::identity(3), b), b);
    const Matrix row(1, 2, {1, 2});
    const Matrix col(2, 1, {3, 4});
    EXPECT_EQ(naive_matmul(row, col), Matrix(1, 1, {11}));
    EXPECT_THROW(naive_matmul(b, b), DimensionError);
}

TEST(ElementwiseMM, MatchesNaiveOnRandomShapes) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = 1 + rng() % 8, l = 1 + rng() % 8, n = 1 + rng() % 8;
        const Matrix a = random_matrix(m, l, rng);
        const Matrix b = random_matrix(l, n, rng);
        ASSERT_EQ(elementwise_mm(a, b), naive_matmul(a, b)) << m << "x" << l << "x" << n;
    }
}

TEST(ElementwiseMM, ScalarCase) {
    EXPECT_EQ(elementwise_mm(Matrix(1, 1, {7}), Matrix(1, 1, {-3})), Matrix(1, 1, {-21}));
}

TEST(Flatten, RoundTripBothOrders) {
    std::mt19937_64 rng(23);
    for (FlattenOrder order : {FlattenOrder::ColumnMajor, FlattenOrder::RowMajor}) {
        for (int trial = 0; trial < 30; ++trial) {
            const std::size_t r = 1 + rng() % 7, c = 1 + rng() % 7;
            const Matrix m = random_matrix(r, c, rng);
            EXPECT_EQ(unflatten(flatten(m, order)), m);
        }
    }
}

TEST(Flatten, ColumnMajorLayout) {
    const Matrix m(2, 3, {0, 1, 2, 3, 4, 5});
    const FlatVector fv = flatten(m, FlattenOrder::ColumnMajor);
    EXPECT_EQ(fv.values, (std::vector<value_t>{0, 3, 1, 4, 2, 5}));
    const FlatVector rv = flatten(m, FlattenOrder::RowMajor);
    EXPECT_EQ(rv.values, (std::vector<value_t>{0, 1, 2, 3, 4, 5}));
}

TEST(Duplicate, StacksAndConcatenatesCopies) {
    const Matrix a = iota_matrix(2, 5);
    const Matrix stacked = duplicate_vertical(a, 3);
    ASSERT_EQ(stacked.rows(), 6u);
    for (std::size_t r = 0; r < 6; ++r) {
        for (std::size_t c = 0; c < 5; ++c) {
            EXPECT_EQ(stacked(r, c), a(r % 2, c));
        }
    }
    const Matrix b = iota_matrix(4, 2);
    const Matrix wide = duplicate_horizontal(b, 2);
    ASSERT_EQ(wide.cols(), 4u);
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t c = 0; c < 4; ++c) {
            EXPECT_EQ(wide(r, c), b(r, c % 2));
        }
    }
    EXPECT_EQ(duplicate_vertical(a, 1), a);
    EXPECT_EQ(duplicate_horizontal(b, 1), b);
}

// Duplicating the thin operand makes each widened partial product contain the
// originals in its blocks: block row h of the k-th widened product equals the
// plain partial product with shift (k + h*m) mod l.
TEST(Duplication, VerticalBlockContainment) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t l = 2 + rng() % 7;
        const std::size_t m = 1 + rng() % (l - 1);
        const std::size_t n = 1 + rng() % 8;
        const std::size_t t = (l + m - 1) / m;
        const Matrix a = random_matrix(m, l, rng);
        const Matrix b = random_matrix(l, n, rng);
        const Matrix a_bar = duplicate_vertical(a, t);
        const Matrix sa = sigma(a);
        const Matrix sa_bar = sigma(a_bar);
        const Matrix tb = tau(b);
        for (std::size_t k = 0; k < m; ++k) {
            const Matrix big = hadamard(eps(sa_bar, k, t * m, n), omega(tb, k, t * m, n));
            for (std::size_t h = 0; h < t; ++h) {
                const std::size_t p = (k + h * m) % l;
                const Matrix small = hadamard(eps(sa, p, m, n), omega(tb, p, m, n));
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t j = 0; j < n; ++j) {
                        ASSERT_EQ(big(h * m + i, j), small(i, j))
                            << "m=" << m << " l=" << l << " n=" << n << " k=" << k << " h=" << h;
                    }
                }
            }
        }
    }
}

TEST(Duplication, HorizontalBlockContainment) {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t l = 2 + rng() % 7;
        const std::size_t n = 1 + rng() % (l - 1);
        const std::size_t m = 1 + rng() % 8;
        const std::size_t t = (l + n - 1) / n;
        const Matrix a = random_matrix(m, l, rng);
        const Matrix b = random_matrix(l, n, rng);
        const Matrix b_bar = duplicate_horizontal(b, t);
        const Matrix sa = sigma(a);
        const Matrix tb = tau(b);
        const Matrix tb_bar = tau(b_bar);
        for (std::size_t k = 0; k < n; ++k) {
            const Matrix big = hadamard(eps(sa, k, m, t * n), omega(tb_bar, k, m, t * n));
            for (std::size_t h = 0; h < t; ++h) {
                const std::size_t p = (k + h * n) % l;
                const Matrix small = hadamard(eps(sa, p, m, n), omega(tb, p, m, n));
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t j = 0; j < n; ++j) {
                        ASSERT_EQ(big(i, h * n + j), small(i, j))
                            << "m=" << m << " l=" << l << " n=" << n << " k=" << k << " h=" << h;
                    }
                }
            }
        }
    }
}

TEST(Matrix, ReducedMapsIntoModulusRange) {
    const Matrix m(1, 4, {-7, -1, 0, 12});
    EXPECT_EQ(m.reduced(5), Matrix(1, 4, {3, 4, 0, 2}));
}
