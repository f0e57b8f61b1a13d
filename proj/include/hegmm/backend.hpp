// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "hegmm/matrix.hpp"

namespace hegmm {

enum class Phase { Client, Cloud };

struct BackendConfig {
    std::size_t slot_count = 4096;
    std::optional<value_t> plaintext_modulus;

    /// Throws on invalid settings (slot_count must be a power of two >= 2;
    /// the modulus must keep (q-1)^2 inside int64).
    void validate() const;
};

struct PhaseCounts {
    std::uint64_t client = 0;
    std::uint64_t cloud = 0;

    std::uint64_t total() const noexcept { return client + cloud; }
    std::uint64_t of(Phase p) const noexcept { return p == Phase::Client ? client : cloud; }
    void bump(Phase p) noexcept { (p == Phase::Client ? client : cloud) += 1; }

    PhaseCounts& operator+=(const PhaseCounts& o) noexcept {
        client += o.client;
        cloud += o.cloud;
        return *this;
    }
    friend PhaseCounts operator-(PhaseCounts a, const PhaseCounts& b) noexcept {
        return {a.client - b.client, a.cloud - b.cloud};
    }
    bool operator==(const PhaseCounts&) const = default;
};

/// Primitive-operation counters, split by client/cloud phase. Encrypt/decrypt
/// are tracked alongside the four ciphertext primitives so the cost model can
/// weight them.
struct OpStats {
    PhaseCounts n_add;
    PhaseCounts n_mult_cc;
    PhaseCounts n_mult_cp;
    PhaseCounts n_rot;
    PhaseCounts n_encrypt;
    PhaseCounts n_decrypt;

    OpStats& operator+=(const OpStats& o) noexcept;
    friend OpStats operator-(OpStats a, const OpStats& b) noexcept;
    bool operator==(const OpStats&) const = default;
};

namespace detail {
struct LiveTracker {
    std::atomic<std::size_t> current{0};
    std::atomic<std::size_t> peak{0};
    void enter();
    void leave() noexcept;
};

// RAII registration of one live ciphertext against a backend session.
class LiveToken {
  public:
    LiveToken() = default;
    explicit LiveToken(std::shared_ptr<LiveTracker> t);
    LiveToken(const LiveToken& o);
    LiveToken(LiveToken&& o) noexcept = default;
    LiveToken& operator=(const LiveToken& o);
    LiveToken& operator=(LiveToken&& o) noexcept;
    ~LiveToken();

  private:
    std::shared_ptr<LiveTracker> tracker_;
};
}  // namespace detail

/// Emulated packed ciphertext: a slot vector restricted to a logical segment,
/// with multiplicative-depth bookkeeping. Values are immutable once created.
class Ciphertext {
  public:
    Ciphertext() = default;

    std::size_t segment_length() const noexcept { return slots_.size(); }
    std::size_t depth() const noexcept { return depth_; }
    Phase phase_tag() const noexcept { return phase_; }
    std::span<const value_t> slots() const noexcept { return slots_; }

  private:
    friend class SlotBackend;
    std::vector<value_t> slots_;  // the logical segment; slots beyond it are zero
    std::size_t depth_ = 0;
    Phase phase_ = Phase::Client;
    detail::LiveToken live_;
};

/// The backend contract: packing, the four primitive ops, and counters.
/// A real HE library can be slotted in behind this surface.
class Backend {
  public:
    virtual ~Backend() = default;

    virtual const BackendConfig& config() const = 0;

    virtual Ciphertext encrypt(std::span<const value_t> values) = 0;
    virtual std::vector<value_t> decrypt(const Ciphertext& ct) = 0;

    virtual Ciphertext he_add(const Ciphertext& x, const Ciphertext& y) = 0;
    virtual Ciphertext he_mult(const Ciphertext& x, const Ciphertext& y) = 0;
    virtual Ciphertext he_cmult(const Ciphertext& x, std::span<const value_t> mask) = 0;
    virtual Ciphertext he_rot(const Ciphertext& x, std::ptrdiff_t offset) = 0;

    virtual OpStats stats() const = 0;
    virtual void reset_stats() = 0;
    virtual std::size_t peak_live_ciphertexts() const = 0;

    virtual void set_phase(Phase p) = 0;
    virtual Phase phase() const = 0;
};

/// Cleartext emulator of the packed-slot backend. Rotation is cyclic over the
/// logical segment (a real scheme rotates all N slots; the counters still
/// charge one HE-Rot per invoked rotation, so op counts stay faithful).
class SlotBackend final : public Backend {
  public:
    explicit SlotBackend(BackendConfig cfg = {});

    const BackendConfig& config() const override { return cfg_; }

    Ciphertext encrypt(std::span<const value_t> values) override;
    std::vector<value_t> decrypt(const Ciphertext& ct) override;

    Ciphertext he_add(const Ciphertext& x, const Ciphertext& y) override;
    Ciphertext he_mult(const Ciphertext& x, const Ciphertext& y) override;
    Ciphertext he_cmult(const Ciphertext& x, std::span<const value_t> mask) override;
    Ciphertext he_rot(const Ciphertext& x, std::ptrdiff_t offset) override;

    OpStats stats() const override;
    void reset_stats() override;
    std::size_t peak_live_ciphertexts() const override;

    void set_phase(Phase p) override { phase_.store(p, std::memory_order_relaxed); }
    Phase phase() const override { return phase_.load(std::memory_order_relaxed); }

  private:
    value_t reduce(value_t v) const;
    void count(PhaseCounts OpStats::* counter);
    Ciphertext make_ct(std::vector<value_t> slots, std::size_t depth) const;

    BackendConfig cfg_;
    std::atomic<Phase> phase_{Phase::Client};
    mutable std::mutex stats_mutex_;
    OpStats stats_;
    std::shared_ptr<detail::LiveTracker> live_ = std::make_shared<detail::LiveTracker>();
};

/// Sets the backend phase for a scope and restores the previous one after.
class PhaseScope {
  public:
    PhaseScope(Backend& be, Phase p) : be_(be), prev_(be.phase()) { be_.set_phase(p); }
    ~PhaseScope() { be_.set_phase(prev_); }
    PhaseScope(const PhaseScope&) = delete;
    PhaseScope& operator=(const PhaseScope&) = delete;

  private:
    Backend& be_;
    Phase prev_;
};

}  // namespace hegmm
