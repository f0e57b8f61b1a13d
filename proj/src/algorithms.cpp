// SPDX-License-Identifier: Apache-2.0
#include "hegmm/algorithms.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>

namespace hegmm {

namespace {

std::vector<value_t> padded(const std::vector<value_t>& values, std::size_t length) {
    std::vector<value_t> out(length, 0);
    std::copy(values.begin(), values.end(), out.begin());
    return out;
}

Matrix crop(const Matrix& m, std::size_t rows, std::size_t cols) {
    Matrix out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            out(r, c) = m(r, c);
        }
    }
    return out;
}

Matrix submatrix(const Matrix& m, std::size_t r0, std::size_t c0, std::size_t rows,
                 std::size_t cols) {
    Matrix out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            out(r, c) = m(r0 + r, c0 + c);
        }
    }
    return out;
}

void check_inner(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("product shape mismatch: " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " * " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()));
    }
}

void check_capacity(std::size_t needed, std::size_t slots, const char* what) {
    if (needed > slots) {
        throw CapacityError(std::string(what) + " needs " + std::to_string(needed) +
                            " slots but the backend has " + std::to_string(slots));
    }
}

// Total canonical plan entries of one hegmm cloud iteration set, used to pick
// the cheaper flatten order.
std::size_t basic_mm_plan_entries(std::size_t m, std::size_t l, std::size_t n, FlattenOrder order) {
    std::size_t total = 0;
    for (std::size_t k = 0; k < l; ++k) {
        total += cached_plan(TransformKind::make_eps(k, m, l, n, order))->entries.size();
        total += cached_plan(TransformKind::make_omega(k, l, m, n, order))->entries.size();
    }
    return total;
}

struct EnShape {
    std::size_t buf_a_cols = 1;  // max(l, N')
    std::size_t buf_b_rows = 1;  // max(l, M)
    std::size_t segment = 1;
};

EnShape en_shape(std::size_t l, std::size_t working_rows, std::size_t working_cols) {
    EnShape s;
    s.buf_a_cols = std::max(l, working_cols);
    s.buf_b_rows = std::max(l, working_rows);
    s.segment = std::max(working_rows * s.buf_a_cols, s.buf_b_rows * working_cols);
    return s;
}

// Blocks kept at loop iteration k: the prefix {h : k + h*p < l}. Wrapped
// copies always duplicate an index some earlier iteration produced.
std::size_t kept_blocks(std::size_t k, std::size_t p, std::size_t l) {
    return (l - k + p - 1) / p;
}

// Fills segment and the cloud-phase op counts the run will spend.
void finalize_strategy(StrategyDescriptor& s, std::size_t l) {
    const EnShape shape = en_shape(l, s.working_rows, s.working_cols);
    s.segment = shape.segment;
    OpStats pred;
    pred.n_mult_cc.cloud = s.p;
    std::set<std::size_t> masked_groups;
    for (std::size_t k = 0; k < s.p; ++k) {
        const auto pe = cached_shaped_eps_plan(k, s.working_rows, s.working_cols, l, s.order,
                                               s.segment);
        const auto po = cached_shaped_omega_plan(k, s.working_rows, s.working_cols, l, s.order,
                                                 s.segment);
        pred.n_rot.cloud += pe->rotation_count() + po->rotation_count();
        pred.n_mult_cp.cloud += pe->entries.size() + po->entries.size();
        pred.n_add.cloud += (pe->entries.size() - 1) + (po->entries.size() - 1);
        const std::size_t kept = kept_blocks(k, s.p, l);
        if (kept < s.t) {
            masked_groups.insert(kept);
        }
    }
    // iterations accumulate into per-mask groups, then the groups combine:
    // p-1 additions total; one exclusion mask per distinct truncated group
    pred.n_add.cloud += s.p - 1;
    pred.n_mult_cp.cloud += masked_groups.size();
    if (s.t > 1) {
        pred.n_rot.cloud += s.t - 1;
        pred.n_add.cloud += s.t - 1;
    }
    s.predicted_cloud = pred;
}

std::vector<value_t> prefix_mask(std::size_t kept, Duplication duplicated, std::size_t p,
                                 std::size_t working_rows, std::size_t working_cols,
                                 FlattenOrder order, std::size_t segment) {
    std::vector<value_t> mask(segment, 0);
    for (std::size_t h = 0; h < kept; ++h) {
        if (duplicated == Duplication::AVertical) {
            for (std::size_t r = h * p; r < (h + 1) * p; ++r) {
                for (std::size_t c = 0; c < working_cols; ++c) {
                    mask[flat_index(r, c, working_rows, working_cols, order)] = 1;
                }
            }
        } else {
            for (std::size_t r = 0; r < working_rows; ++r) {
                for (std::size_t c = h * p; c < (h + 1) * p; ++c) {
                    mask[flat_index(r, c, working_rows, working_cols, order)] = 1;
                }
            }
        }
    }
    return mask;
}

}  // namespace

StrategyDescriptor select_strategy(std::size_t m, std::size_t l, std::size_t n) {
    if (m == 0 || l == 0 || n == 0) {
        throw DimensionError("dimensions must be positive");
    }
    StrategyDescriptor s;
    s.p = std::min({m, l, n});
    s.t = (l + s.p - 1) / s.p;
    if (s.p == l) {
        // No duplication on ties with l: stacking copies would not cut the
        // loop below l iterations.
        s.duplicated = Duplication::None;
        s.order = FlattenOrder::ColumnMajor;
        s.working_rows = m;
        s.working_cols = n;
    } else if (s.p == m) {
        s.duplicated = Duplication::AVertical;
        s.order = FlattenOrder::ColumnMajor;
        s.working_rows = s.t * m;
        s.working_cols = n;
    } else {
        s.duplicated = Duplication::BHorizontal;
        s.order = FlattenOrder::RowMajor;
        s.working_rows = m;
        s.working_cols = s.t * n;
    }
    finalize_strategy(s, l);
    return s;
}

std::size_t basic_mm_segment(std::size_t m, std::size_t l, std::size_t n) {
    return std::max({m * l, l * n, m * n});
}

std::size_t enhanced_mm_segment(std::size_t m, std::size_t l, std::size_t n) {
    const StrategyDescriptor s = select_strategy(m, l, n);
    return s.segment;
}

std::size_t square_pad_segment(std::size_t m, std::size_t l, std::size_t n) {
    const std::size_t d = std::max({m, l, n});
    return d * d;
}

bool fits(Algo algo, std::size_t m, std::size_t l, std::size_t n, std::size_t slot_count) {
    switch (algo) {
        case Algo::Hegmm:
            return basic_mm_segment(m, l, n) <= slot_count;
        case Algo::HegmmEn:
            return enhanced_mm_segment(m, l, n) <= slot_count;
        case Algo::SquarePad:
            return square_pad_segment(m, l, n) <= slot_count;
    }
    return false;
}

Matrix basic_mm(const Matrix& a, const Matrix& b, Backend& backend, const MultiplyOptions& opts) {
    check_inner(a, b);
    const std::size_t m = a.rows(), l = a.cols(), n = b.cols();
    const std::size_t slots = backend.config().slot_count;
    check_capacity(m * l, slots, "flattened left operand");
    check_capacity(l * n, slots, "flattened right operand");
    check_capacity(m * n, slots, "flattened product");
    const std::size_t segment = basic_mm_segment(m, l, n);

    FlattenOrder order;
    if (opts.order) {
        order = *opts.order;
    } else {
        const std::size_t col_cost = basic_mm_plan_entries(m, l, n, FlattenOrder::ColumnMajor);
        const std::size_t row_cost = basic_mm_plan_entries(m, l, n, FlattenOrder::RowMajor);
        order = row_cost < col_cost ? FlattenOrder::RowMajor : FlattenOrder::ColumnMajor;
    }

    backend.set_phase(Phase::Client);
    Ciphertext ct_a;
    Ciphertext ct_b;
    if (opts.encrypted_client_transforms) {
        ct_a = backend.encrypt(padded(flatten(a, order).values, segment));
        ct_b = backend.encrypt(padded(flatten(b, order).values, segment));
        ct_a = apply_plan(
            ct_a, *cached_embedded_plan(TransformKind::make_sigma(m, l, order), segment),
            backend);
        ct_b = apply_plan(
            ct_b, *cached_embedded_plan(TransformKind::make_tau(l, n, order), segment), backend);
    } else {
        ct_a = backend.encrypt(padded(flatten(sigma(a), order).values, segment));
        ct_b = backend.encrypt(padded(flatten(tau(b), order).values, segment));
    }
    Ciphertext acc = backend.encrypt(std::vector<value_t>(segment, 0));

    backend.set_phase(Phase::Cloud);
    for (std::size_t k = 0; k < l; ++k) {
        const Ciphertext e = apply_plan(
            ct_a, *cached_embedded_plan(TransformKind::make_eps(k, m, l, n, order), segment),
            backend);
        const Ciphertext w = apply_plan(
            ct_b, *cached_embedded_plan(TransformKind::make_omega(k, l, m, n, order), segment),
            backend);
        acc = backend.he_add(acc, backend.he_mult(e, w));
    }

    backend.set_phase(Phase::Client);
    std::vector<value_t> slots_out = backend.decrypt(acc);
    slots_out.resize(m * n);
    return unflatten(slots_out, m, n, order);
}

Matrix enhanced_mm(const Matrix& a, const Matrix& b, Backend& backend,
                   const MultiplyOptions& opts, RunTrace* trace) {
    check_inner(a, b);
    const std::size_t m = a.rows(), l = a.cols(), n = b.cols();

    StrategyDescriptor strat = select_strategy(m, l, n);
    if (opts.order && *opts.order != strat.order) {
        strat.order = *opts.order;
        finalize_strategy(strat, l);
    }
    const std::size_t rows_w = strat.working_rows, cols_w = strat.working_cols;
    const EnShape shape = en_shape(l, rows_w, cols_w);
    check_capacity(shape.segment, backend.config().slot_count, "expanded working set");
    const std::size_t segment = shape.segment;
    const FlattenOrder order = strat.order;

    if (trace != nullptr) {
        trace->strategy = strat;
        trace->accumulated.clear();
        trace->skipped.clear();
    }

    backend.set_phase(Phase::Client);
    const Matrix a_bar =
        strat.duplicated == Duplication::AVertical ? duplicate_vertical(a, strat.t) : a;
    const Matrix b_bar =
        strat.duplicated == Duplication::BHorizontal ? duplicate_horizontal(b, strat.t) : b;
    Ciphertext ct_a;
    Ciphertext ct_b;
    if (opts.encrypted_client_transforms) {
        ct_a = backend.encrypt(padded(flatten(a_bar, order).values, segment));
        ct_b = backend.encrypt(padded(flatten(b_bar, order).values, segment));
        ct_a = apply_plan(ct_a,
                          *cached_embedded_plan(
                              TransformKind::make_sigma(a_bar.rows(), a_bar.cols(), order),
                              segment),
                          backend);
        ct_b = apply_plan(
            ct_b,
            *cached_embedded_plan(TransformKind::make_tau(b_bar.rows(), b_bar.cols(), order),
                                  segment),
            backend);
        ct_a = apply_plan(ct_a,
                          *cached_embedded_plan(TransformKind::make_eps(0, rows_w, l,
                                                                        shape.buf_a_cols, order),
                                                segment),
                          backend);
        ct_b = apply_plan(
            ct_b,
            *cached_embedded_plan(
                TransformKind::make_omega(0, l, shape.buf_b_rows, cols_w, order), segment),
            backend);
    } else {
        const Matrix buf_a = eps(sigma(a_bar), 0, rows_w, shape.buf_a_cols);
        const Matrix buf_b = omega(tau(b_bar), 0, shape.buf_b_rows, cols_w);
        ct_a = backend.encrypt(padded(flatten(buf_a, order).values, segment));
        ct_b = backend.encrypt(padded(flatten(buf_b, order).values, segment));
    }
    backend.set_phase(Phase::Cloud);
    // Iterations whose trailing blocks repeat earlier shifts share the same
    // kept-prefix; accumulate per prefix length and mask each group once.
    std::map<std::size_t, Ciphertext> groups;
    for (std::size_t k = 0; k < strat.p; ++k) {
        const Ciphertext e = apply_plan(
            ct_a, *cached_shaped_eps_plan(k, rows_w, cols_w, l, order, segment), backend);
        const Ciphertext w = apply_plan(
            ct_b, *cached_shaped_omega_plan(k, rows_w, cols_w, l, order, segment), backend);
        const Ciphertext temp = backend.he_mult(e, w);

        const std::size_t kept = kept_blocks(k, strat.p, l);
        auto [it, inserted] = groups.try_emplace(kept, temp);
        if (!inserted) {
            it->second = backend.he_add(it->second, temp);
        }
        if (trace != nullptr) {
            std::vector<std::size_t> acc_idx;
            std::vector<std::size_t> dropped;
            for (std::size_t h = 0; h < strat.t; ++h) {
                const std::size_t j = k + h * strat.p;
                (h < kept ? acc_idx : dropped).push_back(j % l);
            }
            trace->accumulated.push_back(std::move(acc_idx));
            trace->skipped.push_back(std::move(dropped));
        }
    }
    Ciphertext acc;
    bool acc_set = false;
    for (auto& [kept, group] : groups) {
        Ciphertext masked =
            kept < strat.t
                ? backend.he_cmult(group, prefix_mask(kept, strat.duplicated, strat.p, rows_w,
                                                      cols_w, order, segment))
                : group;
        if (acc_set) {
            acc = backend.he_add(acc, masked);
        } else {
            acc = std::move(masked);
            acc_set = true;
        }
    }

    Ciphertext folded = acc;
    if (strat.t > 1) {
        const std::size_t stride_unit =
            strat.duplicated == Duplication::AVertical
                ? (order == FlattenOrder::ColumnMajor ? m : m * cols_w)
                : (order == FlattenOrder::ColumnMajor ? n * rows_w : n);
        for (std::size_t h = 1; h < strat.t; ++h) {
            folded = backend.he_add(
                folded, backend.he_rot(acc, static_cast<std::ptrdiff_t>(h * stride_unit)));
        }
    }

    backend.set_phase(Phase::Client);
    std::vector<value_t> slots_out = backend.decrypt(folded);
    slots_out.resize(rows_w * cols_w);
    return crop(unflatten(slots_out, rows_w, cols_w, order), m, n);
}

Matrix square_pad_mm(const Matrix& a, const Matrix& b, Backend& backend,
                     const MultiplyOptions& opts) {
    check_inner(a, b);
    const std::size_t m = a.rows(), l = a.cols(), n = b.cols();
    const std::size_t d = std::max({m, l, n});
    check_capacity(d * d, backend.config().slot_count, "square-padded operands");
    Matrix pa(d, d);
    Matrix pb(d, d);
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < l; ++c) {
            pa(r, c) = a(r, c);
        }
    }
    for (std::size_t r = 0; r < l; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            pb(r, c) = b(r, c);
        }
    }
    return crop(basic_mm(pa, pb, backend, opts), m, n);
}

BlockPlan BlockPlan::halves(std::size_t m, std::size_t l, std::size_t n) {
    auto split = [](std::size_t d) {
        std::vector<std::size_t> parts{(d + 1) / 2};
        if (d / 2 > 0) {
            parts.push_back(d / 2);
        }
        return parts;
    };
    return BlockPlan{split(m), split(l), split(n)};
}

BlockPlan BlockPlan::max_square(std::size_t m, std::size_t l, std::size_t n) {
    auto split = [](std::size_t d) {
        std::vector<std::size_t> parts{std::min<std::size_t>(64, d)};
        if (d > 64) {
            parts.push_back(d - 64);
        }
        return parts;
    };
    return BlockPlan{split(m), split(l), split(n)};
}

void BlockPlan::validate(std::size_t m, std::size_t l, std::size_t n) const {
    auto check = [](const std::vector<std::size_t>& parts, std::size_t total, const char* name) {
        if (parts.empty()) {
            throw DimensionError(std::string("empty ") + name + " partition");
        }
        std::size_t sum = 0;
        for (std::size_t p : parts) {
            if (p == 0) {
                throw DimensionError(std::string("zero-sized block in ") + name + " partition");
            }
            sum += p;
        }
        if (sum != total) {
            throw DimensionError(std::string(name) + " partition sums to " + std::to_string(sum) +
                                 ", expected " + std::to_string(total));
        }
    };
    check(row_blocks, m, "row");
    check(mid_blocks, l, "mid");
    check(col_blocks, n, "col");
}

Matrix blocked_mm(const Matrix& a, const Matrix& b, const BlockPlan& plan, Algo algo,
                  Backend& backend, std::vector<BlockRun>* log) {
    check_inner(a, b);
    plan.validate(a.rows(), a.cols(), b.cols());

    auto offsets = [](const std::vector<std::size_t>& parts) {
        std::vector<std::size_t> out(parts.size() + 1, 0);
        std::partial_sum(parts.begin(), parts.end(), out.begin() + 1);
        return out;
    };
    const std::vector<std::size_t> row_off = offsets(plan.row_blocks);
    const std::vector<std::size_t> mid_off = offsets(plan.mid_blocks);
    const std::vector<std::size_t> col_off = offsets(plan.col_blocks);

    auto run_block = [&](const Matrix& ba, const Matrix& bb, BlockRun& run) {
        switch (algo) {
            case Algo::Hegmm:
                run.used = Algo::Hegmm;
                return basic_mm(ba, bb, backend);
            case Algo::SquarePad:
                run.used = Algo::SquarePad;
                return square_pad_mm(ba, bb, backend);
            case Algo::HegmmEn:
                if (fits(Algo::HegmmEn, ba.rows(), ba.cols(), bb.cols(),
                         backend.config().slot_count)) {
                    run.used = Algo::HegmmEn;
                    return enhanced_mm(ba, bb, backend);
                }
                // The duplicated working set outgrows the slot budget; the
                // plain pipeline still fits whenever the operands do.
                run.used = Algo::Hegmm;
                run.fell_back = true;
                return basic_mm(ba, bb, backend);
        }
        throw Error("unknown algorithm");
    };

    Matrix result(a.rows(), b.cols());
    for (std::size_t bi = 0; bi + 1 < row_off.size(); ++bi) {
        for (std::size_t bj = 0; bj + 1 < col_off.size(); ++bj) {
            for (std::size_t bk = 0; bk + 1 < mid_off.size(); ++bk) {
                const Matrix block_a = submatrix(a, row_off[bi], mid_off[bk],
                                                 plan.row_blocks[bi], plan.mid_blocks[bk]);
                const Matrix block_b = submatrix(b, mid_off[bk], col_off[bj],
                                                 plan.mid_blocks[bk], plan.col_blocks[bj]);
                BlockRun run{bi, bk, bj, block_a.rows(), block_a.cols(), block_b.cols(),
                             algo, false};
                const Matrix prod = run_block(block_a, block_b, run);
                if (log != nullptr) {
                    log->push_back(run);
                }
                for (std::size_t r = 0; r < prod.rows(); ++r) {
                    for (std::size_t c = 0; c < prod.cols(); ++c) {
                        result(row_off[bi] + r, col_off[bj] + c) =
                            checked_add(result(row_off[bi] + r, col_off[bj] + c), prod(r, c));
                    }
                }
            }
        }
    }
    if (backend.config().plaintext_modulus) {
        result = result.reduced(*backend.config().plaintext_modulus);
    }
    return result;
}

}  // namespace hegmm
