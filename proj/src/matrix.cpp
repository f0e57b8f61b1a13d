// SPDX-License-Identifier: Apache-2.0
#include "hegmm/matrix.hpp"

#include <string>
#include <utility>

namespace hegmm {

value_t checked_add(value_t a, value_t b) {
    value_t out = 0;
    if (__builtin_add_overflow(a, b, &out)) {
        throw OverflowError("integer overflow in addition: " + std::to_string(a) + " + " +
                            std::to_string(b));
    }
    return out;
}

value_t checked_mul(value_t a, value_t b) {
    value_t out = 0;
    if (__builtin_mul_overflow(a, b, &out)) {
        throw OverflowError("integer overflow in multiplication: " + std::to_string(a) + " * " +
                            std::to_string(b));
    }
    return out;
}

value_t mod_reduce(value_t a, value_t q) {
    value_t r = a % q;
    return r < 0 ? r + q : r;
}

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
    if (rows == 0 || cols == 0) {
        throw DimensionError("matrix dimensions must be positive");
    }
    data_.assign(rows * cols, 0);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<value_t> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows == 0 || cols == 0) {
        throw DimensionError("matrix dimensions must be positive");
    }
    if (data_.size() != rows * cols) {
        throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                             " does not match " + std::to_string(rows) + "x" +
                             std::to_string(cols));
    }
}

Matrix Matrix::identity(std::size_t dim) {
    Matrix m(dim, dim);
    for (std::size_t i = 0; i < dim; ++i) {
        m(i, i) = 1;
    }
    return m;
}

Matrix Matrix::reduced(value_t modulus) const {
    Matrix out(rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i) {
        out.data_[i] = mod_reduce(data_[i], modulus);
    }
    return out;
}

FlatVector flatten(const Matrix& m, FlattenOrder order) {
    FlatVector out;
    out.logical_rows = m.rows();
    out.logical_cols = m.cols();
    out.order = order;
    out.values.resize(m.size());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            out.values[flat_index(r, c, m.rows(), m.cols(), order)] = m(r, c);
        }
    }
    return out;
}

Matrix unflatten(const std::vector<value_t>& values, std::size_t rows, std::size_t cols,
                 FlattenOrder order) {
    if (values.size() != rows * cols) {
        throw DimensionError("flat vector length does not match logical shape");
    }
    Matrix out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            out(r, c) = values[flat_index(r, c, rows, cols, order)];
        }
    }
    return out;
}

Matrix unflatten(const FlatVector& v) {
    return unflatten(v.values, v.logical_rows, v.logical_cols, v.order);
}

Matrix sigma(const Matrix& a) {
    const std::size_t m = a.rows(), l = a.cols();
    Matrix out(m, l);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < l; ++j) {
            out(i, j) = a(i, (i + j) % l);
        }
    }
    return out;
}

Matrix tau(const Matrix& b) {
    const std::size_t l = b.rows(), n = b.cols();
    Matrix out(l, n);
    for (std::size_t i = 0; i < l; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out(i, j) = b((i + j) % l, j);
        }
    }
    return out;
}

Matrix eps(const Matrix& a, std::size_t k, std::size_t out_rows, std::size_t out_cols) {
    if (a.rows() != out_rows) {
        throw DimensionError("eps keeps the row count: source has " + std::to_string(a.rows()) +
                             " rows, requested " + std::to_string(out_rows));
    }
    const std::size_t l = a.cols();
    Matrix out(out_rows, out_cols);
    for (std::size_t i = 0; i < out_rows; ++i) {
        for (std::size_t j = 0; j < out_cols; ++j) {
            out(i, j) = a(i, (j + k) % l);
        }
    }
    return out;
}

Matrix omega(const Matrix& b, std::size_t k, std::size_t out_rows, std::size_t out_cols) {
    if (b.cols() != out_cols) {
        throw DimensionError("omega keeps the column count: source has " +
                             std::to_string(b.cols()) + " cols, requested " +
                             std::to_string(out_cols));
    }
    const std::size_t l = b.rows();
    Matrix out(out_rows, out_cols);
    for (std::size_t i = 0; i < out_rows; ++i) {
        for (std::size_t j = 0; j < out_cols; ++j) {
            out(i, j) = b((i + k) % l, j);
        }
    }
    return out;
}

Matrix duplicate_vertical(const Matrix& a, std::size_t t) {
    if (t == 0) {
        throw DimensionError("duplication count must be positive");
    }
    Matrix out(a.rows() * t, a.cols());
    for (std::size_t i = 0; i < out.rows(); ++i) {
        for (std::size_t j = 0; j < out.cols(); ++j) {
            out(i, j) = a(i % a.rows(), j);
        }
    }
    return out;
}

Matrix duplicate_horizontal(const Matrix& b, std::size_t t) {
    if (t == 0) {
        throw DimensionError("duplication count must be positive");
    }
    Matrix out(b.rows(), b.cols() * t);
    for (std::size_t i = 0; i < out.rows(); ++i) {
        for (std::size_t j = 0; j < out.cols(); ++j) {
            out(i, j) = b(i, j % b.cols());
        }
    }
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError("hadamard product needs equal shapes");
    }
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            out(i, j) = checked_mul(a(i, j), b(i, j));
        }
    }
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError("matrix addition needs equal shapes");
    }
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            out(i, j) = checked_add(a(i, j), b(i, j));
        }
    }
    return out;
}

Matrix naive_matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul shape mismatch: " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " * " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()));
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            value_t acc = 0;
            for (std::size_t k = 0; k < a.cols(); ++k) {
                acc = checked_add(acc, checked_mul(a(i, k), b(k, j)));
            }
            out(i, j) = acc;
        }
    }
    return out;
}

Matrix naive_matmul_mod(const Matrix& a, const Matrix& b, value_t q) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul shape mismatch");
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            value_t acc = 0;
            for (std::size_t k = 0; k < a.cols(); ++k) {
                const value_t prod = mod_reduce(mod_reduce(a(i, k), q) * mod_reduce(b(k, j), q), q);
                acc = mod_reduce(acc + prod, q);
            }
            out(i, j) = acc;
        }
    }
    return out;
}

Matrix elementwise_mm(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul shape mismatch");
    }
    const std::size_t m = a.rows(), l = a.cols(), n = b.cols();
    const Matrix sa = sigma(a);
    const Matrix tb = tau(b);
    Matrix acc(m, n);
    for (std::size_t k = 0; k < l; ++k) {
        acc = add(acc, hadamard(eps(sa, k, m, n), omega(tb, k, m, n)));
    }
    return acc;
}

}  // namespace hegmm
