// SPDX-License-Identifier: Apache-2.0
#include "hegmm/backend.hpp"

#include <algorithm>
#include <string>
#include <utility>

namespace hegmm {

namespace {
// Largest q with (q-1)^2 still representable in int64.
constexpr value_t kMaxModulus = 3037000499;
}  // namespace

void BackendConfig::validate() const {
    if (slot_count < 2 || (slot_count & (slot_count - 1)) != 0) {
        throw DimensionError("slot count must be a power of two >= 2, got " +
                             std::to_string(slot_count));
    }
    if (plaintext_modulus) {
        if (*plaintext_modulus < 2 || *plaintext_modulus > kMaxModulus) {
            throw DimensionError("plaintext modulus must be in [2, " +
                                 std::to_string(kMaxModulus) + "]");
        }
    }
}

OpStats& OpStats::operator+=(const OpStats& o) noexcept {
    n_add += o.n_add;
    n_mult_cc += o.n_mult_cc;
    n_mult_cp += o.n_mult_cp;
    n_rot += o.n_rot;
    n_encrypt += o.n_encrypt;
    n_decrypt += o.n_decrypt;
    return *this;
}

OpStats operator-(OpStats a, const OpStats& b) noexcept {
    a.n_add = a.n_add - b.n_add;
    a.n_mult_cc = a.n_mult_cc - b.n_mult_cc;
    a.n_mult_cp = a.n_mult_cp - b.n_mult_cp;
    a.n_rot = a.n_rot - b.n_rot;
    a.n_encrypt = a.n_encrypt - b.n_encrypt;
    a.n_decrypt = a.n_decrypt - b.n_decrypt;
    return a;
}

namespace detail {

void LiveTracker::enter() {
    const std::size_t now = current.fetch_add(1, std::memory_order_relaxed) + 1;
    std::size_t seen = peak.load(std::memory_order_relaxed);
    while (seen < now && !peak.compare_exchange_weak(seen, now, std::memory_order_relaxed)) {
    }
}

void LiveTracker::leave() noexcept {
    current.fetch_sub(1, std::memory_order_relaxed);
}

LiveToken::LiveToken(std::shared_ptr<LiveTracker> t) : tracker_(std::move(t)) {
    if (tracker_) {
        tracker_->enter();
    }
}

LiveToken::LiveToken(const LiveToken& o) : LiveToken(o.tracker_) {}

LiveToken& LiveToken::operator=(const LiveToken& o) {
    if (this != &o) {
        LiveToken copy(o);
        *this = std::move(copy);
    }
    return *this;
}

LiveToken& LiveToken::operator=(LiveToken&& o) noexcept {
    if (this != &o) {
        if (tracker_) {
            tracker_->leave();
        }
        tracker_ = std::move(o.tracker_);
    }
    return *this;
}

LiveToken::~LiveToken() {
    if (tracker_) {
        tracker_->leave();
    }
}

}  // namespace detail

SlotBackend::SlotBackend(BackendConfig cfg) : cfg_(cfg) {
    cfg_.validate();
}

value_t SlotBackend::reduce(value_t v) const {
    return cfg_.plaintext_modulus ? mod_reduce(v, *cfg_.plaintext_modulus) : v;
}

void SlotBackend::count(PhaseCounts OpStats::* counter) {
    const Phase p = phase();
    std::lock_guard<std::mutex> lock(stats_mutex_);
    (stats_.*counter).bump(p);
}

Ciphertext SlotBackend::make_ct(std::vector<value_t> slots, std::size_t depth) const {
    Ciphertext ct;
    ct.slots_ = std::move(slots);
    ct.depth_ = depth;
    ct.phase_ = phase();
    ct.live_ = detail::LiveToken(live_);
    return ct;
}

Ciphertext SlotBackend::encrypt(std::span<const value_t> values) {
    if (values.empty()) {
        throw DimensionError("cannot encrypt an empty vector");
    }
    if (values.size() > cfg_.slot_count) {
        throw CapacityError("vector of length " + std::to_string(values.size()) +
                            " exceeds " + std::to_string(cfg_.slot_count) + " slots");
    }
    std::vector<value_t> slots(values.begin(), values.end());
    if (cfg_.plaintext_modulus) {
        for (value_t& v : slots) {
            v = reduce(v);
        }
    }
    count(&OpStats::n_encrypt);
    return make_ct(std::move(slots), 0);
}

std::vector<value_t> SlotBackend::decrypt(const Ciphertext& ct) {
    count(&OpStats::n_decrypt);
    return {ct.slots_.begin(), ct.slots_.end()};
}

Ciphertext SlotBackend::he_add(const Ciphertext& x, const Ciphertext& y) {
    if (x.segment_length() != y.segment_length()) {
        throw DimensionError("he_add segment mismatch: " + std::to_string(x.segment_length()) +
                             " vs " + std::to_string(y.segment_length()));
    }
    std::vector<value_t> slots(x.segment_length());
    for (std::size_t i = 0; i < slots.size(); ++i) {
        slots[i] = cfg_.plaintext_modulus ? reduce(x.slots_[i] + y.slots_[i])
                                          : checked_add(x.slots_[i], y.slots_[i]);
    }
    count(&OpStats::n_add);
    return make_ct(std::move(slots), std::max(x.depth_, y.depth_));
}

Ciphertext SlotBackend::he_mult(const Ciphertext& x, const Ciphertext& y) {
    if (x.segment_length() != y.segment_length()) {
        throw DimensionError("he_mult segment mismatch: " + std::to_string(x.segment_length()) +
                             " vs " + std::to_string(y.segment_length()));
    }
    std::vector<value_t> slots(x.segment_length());
    for (std::size_t i = 0; i < slots.size(); ++i) {
        slots[i] = cfg_.plaintext_modulus ? reduce(x.slots_[i] * y.slots_[i])
                                          : checked_mul(x.slots_[i], y.slots_[i]);
    }
    count(&OpStats::n_mult_cc);
    return make_ct(std::move(slots), std::max(x.depth_, y.depth_) + 1);
}

Ciphertext SlotBackend::he_cmult(const Ciphertext& x, std::span<const value_t> mask) {
    if (mask.size() != x.segment_length()) {
        throw DimensionError("he_cmult mask length " + std::to_string(mask.size()) +
                             " does not match segment " + std::to_string(x.segment_length()));
    }
    std::vector<value_t> slots(x.segment_length());
    for (std::size_t i = 0; i < slots.size(); ++i) {
        slots[i] = cfg_.plaintext_modulus ? reduce(x.slots_[i] * reduce(mask[i]))
                                          : checked_mul(x.slots_[i], mask[i]);
    }
    count(&OpStats::n_mult_cp);
    // Plaintext multiplication consumes far less noise than CC-mult; the depth
    // counter tracks only CC-mults as the coarse noise proxy.
    return make_ct(std::move(slots), x.depth_);
}

Ciphertext SlotBackend::he_rot(const Ciphertext& x, std::ptrdiff_t offset) {
    const std::size_t seg = x.segment_length();
    std::vector<value_t> slots(x.slots_.begin(), x.slots_.end());
    if (seg > 0) {
        std::ptrdiff_t z = offset % static_cast<std::ptrdiff_t>(seg);
        if (z < 0) {
            z += static_cast<std::ptrdiff_t>(seg);
        }
        std::rotate(slots.begin(), slots.begin() + z, slots.end());
    }
    count(&OpStats::n_rot);
    return make_ct(std::move(slots), x.depth_);
}

OpStats SlotBackend::stats() const {
    std::lock_guard<std::mutex> lock(stats_mutex_);
    return stats_;
}

void SlotBackend::reset_stats() {
    std::lock_guard<std::mutex> lock(stats_mutex_);
    stats_ = OpStats{};
    live_->peak.store(live_->current.load(std::memory_order_relaxed),
                      std::memory_order_relaxed);
}

std::size_t SlotBackend::peak_live_ciphertexts() const {
    return live_->peak.load(std::memory_order_relaxed);
}

}  // namespace hegmm
