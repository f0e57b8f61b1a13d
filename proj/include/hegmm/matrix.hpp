// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hegmm/errors.hpp"

namespace hegmm {

using value_t = std::int64_t;

/// Checked exact arithmetic: throws OverflowError instead of wrapping.
value_t checked_add(value_t a, value_t b);
value_t checked_mul(value_t a, value_t b);
/// Mathematical mod: result in [0, q).
value_t mod_reduce(value_t a, value_t q);

/// Dense exact-integer matrix, row-major storage.
class Matrix {
  public:
    Matrix(std::size_t rows, std::size_t cols);
    Matrix(std::size_t rows, std::size_t cols, std::vector<value_t> data);
    static Matrix identity(std::size_t dim);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    value_t operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    value_t& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const std::vector<value_t>& data() const noexcept { return data_; }

    /// Entries reduced into [0, q).
    Matrix reduced(value_t modulus) const;

    bool operator==(const Matrix&) const = default;

  private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<value_t> data_;
};

enum class FlattenOrder { ColumnMajor, RowMajor };

/// A matrix serialized into slot order, remembering its logical shape.
struct FlatVector {
    std::vector<value_t> values;
    std::size_t logical_rows = 0;
    std::size_t logical_cols = 0;
    FlattenOrder order = FlattenOrder::ColumnMajor;
};

FlatVector flatten(const Matrix& m, FlattenOrder order);
Matrix unflatten(const FlatVector& v);
Matrix unflatten(const std::vector<value_t>& values, std::size_t rows, std::size_t cols,
                 FlattenOrder order);

/// Slot index of entry (r, c) for a rows x cols matrix under the given order.
constexpr std::size_t flat_index(std::size_t r, std::size_t c, std::size_t rows,
                                 std::size_t cols, FlattenOrder order) {
    return order == FlattenOrder::ColumnMajor ? r + c * rows : r * cols + c;
}

// The four transformation operators. sigma rotates row i left by i; tau rotates
// column j up by j; eps shifts all columns left by k and reshapes to
// out_rows x out_cols (columns repeat cyclically mod the source width); omega
// shifts all rows up by k and reshapes likewise (rows repeat mod source height).
Matrix sigma(const Matrix& a);
Matrix tau(const Matrix& b);
Matrix eps(const Matrix& a, std::size_t k, std::size_t out_rows, std::size_t out_cols);
Matrix omega(const Matrix& b, std::size_t k, std::size_t out_rows, std::size_t out_cols);

Matrix duplicate_vertical(const Matrix& a, std::size_t t);
Matrix duplicate_horizontal(const Matrix& b, std::size_t t);

Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);

/// Triple-loop reference product; the oracle everything else is checked against.
Matrix naive_matmul(const Matrix& a, const Matrix& b);
/// Same, with every partial sum reduced mod q (avoids overflow for large q).
Matrix naive_matmul_mod(const Matrix& a, const Matrix& b, value_t q);

/// Product assembled from element-wise pieces:
///   sum_k eps(sigma(a), k, m, n) .* omega(tau(b), k, m, n).
/// Agrees exactly with naive_matmul for every shape.
Matrix elementwise_mm(const Matrix& a, const Matrix& b);

}  // namespace hegmm
