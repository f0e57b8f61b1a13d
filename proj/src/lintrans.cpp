// SPDX-License-Identifier: Apache-2.0
#include "hegmm/lintrans.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <string>
#include <tuple>

namespace hegmm {

namespace {

void check_shift(std::size_t shift, std::size_t modulus, const char* what) {
    if (modulus == 0 || shift >= modulus) {
        throw DimensionError(std::string(what) + " shift index " + std::to_string(shift) +
                             " outside [0, " + std::to_string(modulus) + ")");
    }
}

}  // namespace

TransformKind TransformKind::make_sigma(std::size_t m, std::size_t l, FlattenOrder order) {
    return {SigmaKind{m, l}, order};
}
TransformKind TransformKind::make_tau(std::size_t l, std::size_t n, FlattenOrder order) {
    return {TauKind{l, n}, order};
}
TransformKind TransformKind::make_eps(std::size_t k, std::size_t m, std::size_t l, std::size_t n,
                                      FlattenOrder order) {
    check_shift(k, l, "eps");
    return {EpsKind{k, m, l, n}, order};
}
TransformKind TransformKind::make_omega(std::size_t k, std::size_t l, std::size_t m,
                                        std::size_t n, FlattenOrder order) {
    check_shift(k, l, "omega");
    return {OmegaKind{k, l, m, n}, order};
}

std::size_t DiagonalEntry::weight() const {
    std::size_t w = 0;
    for (std::uint8_t v : mask) {
        w += static_cast<std::size_t>(v != 0);
    }
    return w;
}

std::vector<value_t> DiagonalEntry::mask_values() const {
    return {mask.begin(), mask.end()};
}

std::size_t DiagonalPlan::rotation_count() const {
    std::size_t r = 0;
    for (const DiagonalEntry& e : entries) {
        r += static_cast<std::size_t>(e.offset != 0);
    }
    return r;
}

std::pair<std::size_t, std::size_t> transform_lengths(const TransformKind& kind) {
    return std::visit(
        [](const auto& op) -> std::pair<std::size_t, std::size_t> {
            using T = std::decay_t<decltype(op)>;
            if constexpr (std::is_same_v<T, SigmaKind>) {
                return {op.rows * op.cols, op.rows * op.cols};
            } else if constexpr (std::is_same_v<T, TauKind>) {
                return {op.rows * op.cols, op.rows * op.cols};
            } else if constexpr (std::is_same_v<T, EpsKind>) {
                return {op.rows * op.out_cols, op.rows * op.source_cols};
            } else {
                return {op.out_rows * op.cols, op.source_rows * op.cols};
            }
        },
        kind.op);
}

std::vector<std::size_t> index_map(const TransformKind& kind) {
    const FlattenOrder ord = kind.order;
    return std::visit(
        [ord](const auto& op) -> std::vector<std::size_t> {
            using T = std::decay_t<decltype(op)>;
            std::vector<std::size_t> map;
            if constexpr (std::is_same_v<T, SigmaKind>) {
                const std::size_t m = op.rows, l = op.cols;
                map.resize(m * l);
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t j = 0; j < l; ++j) {
                        map[flat_index(i, j, m, l, ord)] = flat_index(i, (i + j) % l, m, l, ord);
                    }
                }
            } else if constexpr (std::is_same_v<T, TauKind>) {
                const std::size_t l = op.rows, n = op.cols;
                map.resize(l * n);
                for (std::size_t i = 0; i < l; ++i) {
                    for (std::size_t j = 0; j < n; ++j) {
                        map[flat_index(i, j, l, n, ord)] = flat_index((i + j) % l, j, l, n, ord);
                    }
                }
            } else if constexpr (std::is_same_v<T, EpsKind>) {
                const std::size_t m = op.rows, l = op.source_cols, n = op.out_cols;
                check_shift(op.shift, l, "eps");
                map.resize(m * n);
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t j = 0; j < n; ++j) {
                        map[flat_index(i, j, m, n, ord)] =
                            flat_index(i, (j + op.shift) % l, m, l, ord);
                    }
                }
            } else {
                const std::size_t l = op.source_rows, m = op.out_rows, n = op.cols;
                check_shift(op.shift, l, "omega");
                map.resize(m * n);
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t j = 0; j < n; ++j) {
                        map[flat_index(i, j, m, n, ord)] =
                            flat_index((i + op.shift) % l, j, l, n, ord);
                    }
                }
            }
            return map;
        },
        kind.op);
}

PermutationMatrix build_permutation(const TransformKind& kind) {
    const auto [out_len, in_len] = transform_lengths(kind);
    const std::vector<std::size_t> map = index_map(kind);
    PermutationMatrix u(out_len, in_len);
    for (std::size_t i = 0; i < out_len; ++i) {
        u.set(i, map[i]);
    }
    return u;
}

namespace {

DiagonalPlan plan_from_pairs(const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                             std::size_t in_len, std::size_t out_len, std::size_t mask_len) {
    std::map<std::ptrdiff_t, std::vector<std::uint8_t>> by_offset;
    for (const auto& [out_slot, in_slot] : pairs) {
        const std::ptrdiff_t z =
            static_cast<std::ptrdiff_t>(in_slot) - static_cast<std::ptrdiff_t>(out_slot);
        auto [it, inserted] = by_offset.try_emplace(z);
        if (inserted) {
            it->second.assign(mask_len, 0);
        }
        it->second[out_slot] = 1;
    }
    DiagonalPlan plan;
    plan.input_len = in_len;
    plan.output_len = out_len;
    plan.entries.reserve(by_offset.size());
    for (auto& [z, mask] : by_offset) {
        plan.entries.push_back(DiagonalEntry{z, std::move(mask)});
    }
    return plan;
}

}  // namespace

DiagonalPlan extract_diagonals(const PermutationMatrix& u) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < u.rows(); ++i) {
        for (std::size_t j = 0; j < u.cols(); ++j) {
            if (u(i, j) != 0) {
                pairs.emplace_back(i, j);
            }
        }
    }
    return plan_from_pairs(pairs, u.cols(), u.rows(), u.rows());
}

DiagonalPlan diagonal_plan(const TransformKind& kind) {
    const auto [out_len, in_len] = transform_lengths(kind);
    const std::vector<std::size_t> map = index_map(kind);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(out_len);
    for (std::size_t i = 0; i < out_len; ++i) {
        pairs.emplace_back(i, map[i]);
    }
    return plan_from_pairs(pairs, in_len, out_len, out_len);
}

PermutationMatrix reconstruct_permutation(const DiagonalPlan& plan) {
    PermutationMatrix u(plan.output_len, plan.input_len);
    for (const DiagonalEntry& e : plan.entries) {
        for (std::size_t i = 0; i < e.mask.size() && i < plan.output_len; ++i) {
            if (e.mask[i] != 0) {
                const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i) + e.offset;
                if (j < 0 || j >= static_cast<std::ptrdiff_t>(plan.input_len)) {
                    throw DimensionError("diagonal entry escapes the input range");
                }
                u.set(i, static_cast<std::size_t>(j));
            }
        }
    }
    return u;
}

std::size_t count_nonzero_diagonals(const TransformKind& kind) {
    const std::vector<std::size_t> map = index_map(kind);
    std::set<std::ptrdiff_t> offsets;
    for (std::size_t i = 0; i < map.size(); ++i) {
        offsets.insert(static_cast<std::ptrdiff_t>(map[i]) - static_cast<std::ptrdiff_t>(i));
    }
    return offsets.size();
}

std::size_t distinct_rotation_count(const TransformKind& kind) {
    const auto [out_len, in_len] = transform_lengths(kind);
    const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(in_len);
    const std::vector<std::size_t> map = index_map(kind);
    std::set<std::ptrdiff_t> rotations;
    for (std::size_t i = 0; i < map.size(); ++i) {
        const std::ptrdiff_t z =
            static_cast<std::ptrdiff_t>(map[i]) - static_cast<std::ptrdiff_t>(i);
        rotations.insert(((z % x) + x) % x);
    }
    return rotations.size();
}

std::size_t diagonal_count_bound(const TransformKind& kind) {
    const bool col = kind.order == FlattenOrder::ColumnMajor;
    return std::visit(
        [col](const auto& op) -> std::size_t {
            using T = std::decay_t<decltype(op)>;
            if constexpr (std::is_same_v<T, SigmaKind>) {
                return 2 * std::min(op.rows, op.cols) - 1;
            } else if constexpr (std::is_same_v<T, TauKind>) {
                return 2 * std::min(op.cols, op.rows) - 1;
            } else if constexpr (std::is_same_v<T, EpsKind>) {
                const std::size_t ratio = op.out_cols / op.source_cols;
                return col ? ratio + 1 : (ratio + 2) * op.rows;
            } else {
                const std::size_t ratio = op.out_rows / op.source_rows;
                return col ? (ratio + 2) * op.cols : ratio + 1;
            }
        },
        kind.op);
}

DiagonalPlan embed_plan(const DiagonalPlan& plan, std::size_t segment) {
    if (segment < std::max(plan.input_len, plan.output_len)) {
        throw DimensionError("segment " + std::to_string(segment) +
                             " too small for a plan of lengths " +
                             std::to_string(plan.input_len) + "->" +
                             std::to_string(plan.output_len));
    }
    DiagonalPlan out;
    out.input_len = segment;
    out.output_len = segment;
    out.entries.reserve(plan.entries.size());
    for (const DiagonalEntry& e : plan.entries) {
        DiagonalEntry copy;
        copy.offset = e.offset;
        copy.mask.assign(segment, 0);
        std::copy(e.mask.begin(), e.mask.end(), copy.mask.begin());
        out.entries.push_back(std::move(copy));
    }
    return out;
}

DiagonalPlan shaped_eps_plan(std::size_t k, std::size_t rows_m, std::size_t out_cols_n,
                             std::size_t period_l, FlattenOrder order, std::size_t segment) {
    check_shift(k, period_l, "eps");
    const std::size_t buf_cols = std::max(period_l, out_cols_n);
    if (segment < std::max(rows_m * buf_cols, rows_m * out_cols_n)) {
        throw DimensionError("segment too small for shaped eps plan");
    }
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(rows_m * out_cols_n);
    for (std::size_t r = 0; r < rows_m; ++r) {
        for (std::size_t c = 0; c < out_cols_n; ++c) {
            // nearest buffered copy of source column (c + k) mod l
            const std::size_t src = (c + k < buf_cols) ? c + k : c + k - period_l;
            pairs.emplace_back(flat_index(r, c, rows_m, out_cols_n, order),
                               flat_index(r, src, rows_m, buf_cols, order));
        }
    }
    return plan_from_pairs(pairs, segment, segment, segment);
}

DiagonalPlan shaped_omega_plan(std::size_t k, std::size_t out_rows_m, std::size_t cols_n,
                               std::size_t period_l, FlattenOrder order, std::size_t segment) {
    check_shift(k, period_l, "omega");
    const std::size_t buf_rows = std::max(period_l, out_rows_m);
    if (segment < std::max(buf_rows * cols_n, out_rows_m * cols_n)) {
        throw DimensionError("segment too small for shaped omega plan");
    }
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(out_rows_m * cols_n);
    for (std::size_t r = 0; r < out_rows_m; ++r) {
        for (std::size_t c = 0; c < cols_n; ++c) {
            const std::size_t src = (r + k < buf_rows) ? r + k : r + k - period_l;
            pairs.emplace_back(flat_index(r, c, out_rows_m, cols_n, order),
                               flat_index(src, c, buf_rows, cols_n, order));
        }
    }
    return plan_from_pairs(pairs, segment, segment, segment);
}

namespace {

struct PlanKey {
    std::uint8_t tag = 0;  // 0 sigma, 1 tau, 2 eps, 3 omega, 4 shaped eps, 5 shaped omega
    std::size_t a = 0, b = 0, c = 0, d = 0;
    std::uint8_t order = 0;
    std::size_t segment = 0;

    auto tie() const { return std::tie(tag, a, b, c, d, order, segment); }
    bool operator<(const PlanKey& o) const { return tie() < o.tie(); }
};

PlanKey key_for(const TransformKind& kind, std::size_t segment) {
    PlanKey key;
    key.order = kind.order == FlattenOrder::ColumnMajor ? 0 : 1;
    key.segment = segment;
    std::visit(
        [&key](const auto& op) {
            using T = std::decay_t<decltype(op)>;
            if constexpr (std::is_same_v<T, SigmaKind>) {
                key.tag = 0;
                key.a = op.rows;
                key.b = op.cols;
            } else if constexpr (std::is_same_v<T, TauKind>) {
                key.tag = 1;
                key.a = op.rows;
                key.b = op.cols;
            } else if constexpr (std::is_same_v<T, EpsKind>) {
                key.tag = 2;
                key.a = op.shift;
                key.b = op.rows;
                key.c = op.source_cols;
                key.d = op.out_cols;
            } else {
                key.tag = 3;
                key.a = op.shift;
                key.b = op.source_rows;
                key.c = op.out_rows;
                key.d = op.cols;
            }
        },
        kind.op);
    return key;
}

class PlanCache {
  public:
    template <typename Builder>
    std::shared_ptr<const DiagonalPlan> get(const PlanKey& key, Builder&& build) {
        {
            std::shared_lock lock(mutex_);
            auto it = plans_.find(key);
            if (it != plans_.end()) {
                return it->second;
            }
        }
        auto plan = std::make_shared<const DiagonalPlan>(build());
        const std::size_t cost = plan_bytes(*plan);
        std::unique_lock lock(mutex_);
        auto it = plans_.find(key);
        if (it != plans_.end()) {
            return it->second;
        }
        if (bytes_ + cost > kBudgetBytes) {
            // Large-dimension plans would otherwise pile up without bound;
            // dropping the whole map is cheap next to rebuilding one plan.
            plans_.clear();
            bytes_ = 0;
        }
        bytes_ += cost;
        return plans_.try_emplace(key, std::move(plan)).first->second;
    }

  private:
    static constexpr std::size_t kBudgetBytes = std::size_t{256} << 20;

    static std::size_t plan_bytes(const DiagonalPlan& plan) {
        std::size_t total = sizeof(DiagonalPlan);
        for (const DiagonalEntry& e : plan.entries) {
            total += sizeof(DiagonalEntry) + e.mask.capacity();
        }
        return total;
    }

    std::shared_mutex mutex_;
    std::map<PlanKey, std::shared_ptr<const DiagonalPlan>> plans_;
    std::size_t bytes_ = 0;
};

PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

}  // namespace

std::shared_ptr<const DiagonalPlan> cached_plan(const TransformKind& kind) {
    return plan_cache().get(key_for(kind, 0), [&] { return diagonal_plan(kind); });
}

std::shared_ptr<const DiagonalPlan> cached_embedded_plan(const TransformKind& kind,
                                                         std::size_t segment) {
    return plan_cache().get(key_for(kind, segment),
                            [&] { return embed_plan(*cached_plan(kind), segment); });
}

std::shared_ptr<const DiagonalPlan> cached_shaped_eps_plan(std::size_t k, std::size_t rows_m,
                                                           std::size_t out_cols_n,
                                                           std::size_t period_l,
                                                           FlattenOrder order,
                                                           std::size_t segment) {
    PlanKey key{4, k, rows_m, out_cols_n, period_l,
                static_cast<std::uint8_t>(order == FlattenOrder::ColumnMajor ? 0 : 1), segment};
    return plan_cache().get(
        key, [&] { return shaped_eps_plan(k, rows_m, out_cols_n, period_l, order, segment); });
}

std::shared_ptr<const DiagonalPlan> cached_shaped_omega_plan(std::size_t k,
                                                             std::size_t out_rows_m,
                                                             std::size_t cols_n,
                                                             std::size_t period_l,
                                                             FlattenOrder order,
                                                             std::size_t segment) {
    PlanKey key{5, k, out_rows_m, cols_n, period_l,
                static_cast<std::uint8_t>(order == FlattenOrder::ColumnMajor ? 0 : 1), segment};
    return plan_cache().get(
        key, [&] { return shaped_omega_plan(k, out_rows_m, cols_n, period_l, order, segment); });
}

Ciphertext apply_plan(const Ciphertext& ct, const DiagonalPlan& plan, Backend& backend) {
    if (plan.input_len != plan.output_len) {
        throw DimensionError("apply_plan needs a square working segment, got " +
                             std::to_string(plan.input_len) + "->" +
                             std::to_string(plan.output_len));
    }
    if (ct.segment_length() != plan.input_len) {
        throw DimensionError("ciphertext segment " + std::to_string(ct.segment_length()) +
                             " does not match plan length " + std::to_string(plan.input_len));
    }
    if (plan.entries.empty()) {
        throw DimensionError("cannot apply an empty plan");
    }
    Ciphertext acc;
    bool first = true;
    for (const DiagonalEntry& e : plan.entries) {
        const std::vector<value_t> mask = e.mask_values();
        const Ciphertext term =
            e.offset == 0 ? backend.he_cmult(ct, mask)
                          : backend.he_cmult(backend.he_rot(ct, e.offset), mask);
        if (first) {
            acc = term;
            first = false;
        } else {
            acc = backend.he_add(acc, term);
        }
    }
    return acc;
}

}  // namespace hegmm
