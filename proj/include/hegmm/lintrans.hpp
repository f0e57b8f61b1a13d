// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

#include "hegmm/backend.hpp"
#include "hegmm/matrix.hpp"

namespace hegmm {

// Transform selectors. Field layout mirrors how each operator reads its
// source: sigma/tau keep the shape, eps reshapes columns (m x l -> m x n),
// omega reshapes rows (l x n -> m x n). Shift indices live in [0, source dim).
struct SigmaKind {
    std::size_t rows = 1;  // m
    std::size_t cols = 1;  // l
    bool operator==(const SigmaKind&) const = default;
};
struct TauKind {
    std::size_t rows = 1;  // l
    std::size_t cols = 1;  // n
    bool operator==(const TauKind&) const = default;
};
struct EpsKind {
    std::size_t shift = 0;        // k, in [0, source_cols)
    std::size_t rows = 1;         // m
    std::size_t source_cols = 1;  // l
    std::size_t out_cols = 1;     // n
    bool operator==(const EpsKind&) const = default;
};
struct OmegaKind {
    std::size_t shift = 0;        // k, in [0, source_rows)
    std::size_t source_rows = 1;  // l
    std::size_t out_rows = 1;     // m
    std::size_t cols = 1;         // n
    bool operator==(const OmegaKind&) const = default;
};

struct TransformKind {
    std::variant<SigmaKind, TauKind, EpsKind, OmegaKind> op;
    FlattenOrder order = FlattenOrder::ColumnMajor;

    static TransformKind make_sigma(std::size_t m, std::size_t l, FlattenOrder order);
    static TransformKind make_tau(std::size_t l, std::size_t n, FlattenOrder order);
    static TransformKind make_eps(std::size_t k, std::size_t m, std::size_t l, std::size_t n,
                                  FlattenOrder order);
    static TransformKind make_omega(std::size_t k, std::size_t l, std::size_t m, std::size_t n,
                                    FlattenOrder order);

    bool operator==(const TransformKind&) const = default;
};

/// Dense 0/1 transformation matrix; every row holds at most one 1.
class PermutationMatrix {
  public:
    PermutationMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), entries_(rows * cols, 0) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::uint8_t operator()(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }
    void set(std::size_t r, std::size_t c) { entries_[r * cols_ + c] = 1; }

    bool operator==(const PermutationMatrix&) const = default;

  private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<std::uint8_t> entries_;
};

/// One generalized diagonal of a transform: mask[i] selects output slot i,
/// which reads input slot i + offset.
struct DiagonalEntry {
    std::ptrdiff_t offset = 0;
    std::vector<std::uint8_t> mask;  // 0/1, indexed by output slot

    std::size_t weight() const;
    /// The mask as a plaintext operand.
    std::vector<value_t> mask_values() const;
};

/// Rotate-mask-accumulate program for a linear transform:
///   U . v == sum_z mask_z .* Rot(v, z).
struct DiagonalPlan {
    std::vector<DiagonalEntry> entries;  // sorted by offset, offsets distinct
    std::size_t input_len = 0;
    std::size_t output_len = 0;

    std::size_t rotation_count() const;  // entries with a non-zero offset
};

/// Output/input slot lengths (y, x) of a transform.
std::pair<std::size_t, std::size_t> transform_lengths(const TransformKind& kind);

/// Source slot index read by each output slot, from the definitional index
/// maps applied to the flattening order.
std::vector<std::size_t> index_map(const TransformKind& kind);

PermutationMatrix build_permutation(const TransformKind& kind);

/// The non-zero generalized diagonals of U, paper two-case layout: offsets
/// z >= 0 carry trailing-zero masks, z < 0 leading-zero masks.
DiagonalPlan extract_diagonals(const PermutationMatrix& u);

/// Same plan built sparsely from the index map (no dense matrix).
DiagonalPlan diagonal_plan(const TransformKind& kind);

/// Rebuilds U from a plan; inverse of extract_diagonals.
PermutationMatrix reconstruct_permutation(const DiagonalPlan& plan);

/// Exact number of non-zero generalized diagonals (distinct integer offsets).
std::size_t count_nonzero_diagonals(const TransformKind& kind);

/// Offsets identified modulo the input length: the number of distinct cyclic
/// rotations of the flattened source the plan touches. Congruent diagonals
/// (such as +5 and -10 over 15 slots) collapse to one here.
std::size_t distinct_rotation_count(const TransformKind& kind);

/// The classical diagonal-count bound for the transform under its order:
/// sigma: 2*min(m,l)-1; tau: 2*min(n,l)-1; eps: floor(n/l)+1 column-major,
/// (floor(n/l)+2)*m row-major; omega: (floor(m/l)+2)*n column-major,
/// floor(m/l)+1 row-major.
std::size_t diagonal_count_bound(const TransformKind& kind);

/// Plan re-targeted to a square working segment: masks zero-extended, offsets
/// unchanged. Requires segment >= max(input_len, output_len).
DiagonalPlan embed_plan(const DiagonalPlan& plan, std::size_t segment);

/// In-loop plan over a pre-shaped buffer for the duplication algorithm: the
/// buffer holds an M x max(l, N) matrix whose columns repeat with period l;
/// the plan produces the column-shift-by-k image on the M x N output region,
/// sourcing each column from its nearest buffered copy (at most two offsets).
DiagonalPlan shaped_eps_plan(std::size_t k, std::size_t rows_m, std::size_t out_cols_n,
                             std::size_t period_l, FlattenOrder order, std::size_t segment);
/// Row mirror over an max(l, M) x N buffer with rows repeating mod l.
DiagonalPlan shaped_omega_plan(std::size_t k, std::size_t out_rows_m, std::size_t cols_n,
                               std::size_t period_l, FlattenOrder order, std::size_t segment);

// Cached plan lookups (read-mostly, safe under concurrent access). Plan
// construction is plaintext work and never touches the op counters.
std::shared_ptr<const DiagonalPlan> cached_plan(const TransformKind& kind);
std::shared_ptr<const DiagonalPlan> cached_embedded_plan(const TransformKind& kind,
                                                         std::size_t segment);
std::shared_ptr<const DiagonalPlan> cached_shaped_eps_plan(std::size_t k, std::size_t rows_m,
                                                           std::size_t out_cols_n,
                                                           std::size_t period_l,
                                                           FlattenOrder order,
                                                           std::size_t segment);
std::shared_ptr<const DiagonalPlan> cached_shaped_omega_plan(std::size_t k,
                                                             std::size_t out_rows_m,
                                                             std::size_t cols_n,
                                                             std::size_t period_l,
                                                             FlattenOrder order,
                                                             std::size_t segment);

/// Rotate-mask-accumulate execution of a plan:
///   result = sum_z mask_z .* Rot(ct, z).
/// Consumes |entries| HE-CMult, |entries|-1 HE-Add, and one HE-Rot per
/// non-zero offset. Requires ct.segment == input_len == output_len.
Ciphertext apply_plan(const Ciphertext& ct, const DiagonalPlan& plan, Backend& backend);

}  // namespace hegmm
