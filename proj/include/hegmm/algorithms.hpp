// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "hegmm/backend.hpp"
#include "hegmm/lintrans.hpp"
#include "hegmm/matrix.hpp"

namespace hegmm {

enum class Algo { Hegmm, HegmmEn, SquarePad };

struct MultiplyOptions {
    /// Flatten order; unset means pick automatically (the strategy's order for
    /// the duplication algorithm, the cheaper plan set for plain hegmm).
    std::optional<FlattenOrder> order;
    /// Run sigma/tau on ciphertexts via their diagonal plans instead of as
    /// client-side plaintext preprocessing.
    bool encrypted_client_transforms = false;
};

enum class Duplication { None, AVertical, BHorizontal };

/// Resolved shape-handling choice of the duplication algorithm, with the op
/// counts its cloud phase will spend.
struct StrategyDescriptor {
    std::size_t p = 1;  // min(m, l, n); cloud loop length
    std::size_t t = 1;  // ceil(l / p); copies of the duplicated operand
    Duplication duplicated = Duplication::None;
    FlattenOrder order = FlattenOrder::ColumnMajor;
    std::size_t working_rows = 1;  // M
    std::size_t working_cols = 1;  // N'
    std::size_t segment = 1;       // working flattened length
    OpStats predicted_cloud;
};

StrategyDescriptor select_strategy(std::size_t m, std::size_t l, std::size_t n);

/// Working flattened lengths each algorithm needs (for capacity checks).
std::size_t basic_mm_segment(std::size_t m, std::size_t l, std::size_t n);
std::size_t enhanced_mm_segment(std::size_t m, std::size_t l, std::size_t n);
std::size_t square_pad_segment(std::size_t m, std::size_t l, std::size_t n);
bool fits(Algo algo, std::size_t m, std::size_t l, std::size_t n, std::size_t slot_count);

/// Per-run introspection filled by hegmm_en.
struct RunTrace {
    StrategyDescriptor strategy;
    /// Per loop iteration: partial-product indices accumulated / skipped as
    /// already-covered duplicates.
    std::vector<std::vector<std::size_t>> accumulated;
    std::vector<std::vector<std::size_t>> skipped;
};

/// Emulated product via the l-iteration rotate-mask-multiply pipeline:
/// client flattens sigma(a)/tau(b) and encrypts; the cloud phase applies the
/// eps/omega plans, one CC-mult and one accumulate per iteration.
Matrix basic_mm(const Matrix& a, const Matrix& b, Backend& backend,
             const MultiplyOptions& opts = {});

/// Duplication-enhanced product: the thin operand is stacked t times so each
/// CC-mult yields t partial products; duplicates are masked out and the block
/// copies folded together, so the cloud phase spends min(m, l, n) CC-mults.
Matrix enhanced_mm(const Matrix& a, const Matrix& b, Backend& backend,
                const MultiplyOptions& opts = {}, RunTrace* trace = nullptr);

/// Baseline shape handling: zero-pad both operands to d = max(m, l, n) and run
/// the square product, cropping afterwards. Costs d CC-mults.
Matrix square_pad_mm(const Matrix& a, const Matrix& b, Backend& backend,
                     const MultiplyOptions& opts = {});

/// Tiling of an oversized product into slot-sized sub-products.
struct BlockPlan {
    std::vector<std::size_t> row_blocks;  // partition of a.rows
    std::vector<std::size_t> mid_blocks;  // partition of the shared dimension
    std::vector<std::size_t> col_blocks;  // partition of b.cols

    /// Equal halves per dimension (the 50/50 split on 100x100 inputs).
    static BlockPlan halves(std::size_t m, std::size_t l, std::size_t n);
    /// Largest-square-first split: 64 then the remainder (64/36 on 100).
    static BlockPlan max_square(std::size_t m, std::size_t l, std::size_t n);

    void validate(std::size_t m, std::size_t l, std::size_t n) const;
};

struct BlockRun {
    std::size_t row_block = 0, mid_block = 0, col_block = 0;
    std::size_t m = 0, l = 0, n = 0;
    Algo used = Algo::Hegmm;
    bool fell_back = false;
};

/// Computes each block product with the chosen algorithm (falling back from
/// the duplication algorithm to plain hegmm when a block's expanded working
/// set exceeds the slot budget) and accumulates in cleartext.
Matrix blocked_mm(const Matrix& a, const Matrix& b, const BlockPlan& plan, Algo algo,
                  Backend& backend, std::vector<BlockRun>* log = nullptr);

}  // namespace hegmm
