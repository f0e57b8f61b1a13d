// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hegmm/algorithms.hpp"
#include "hegmm/backend.hpp"

namespace hegmm {

/// Per-operation latency weights in milliseconds. Defaults are the profiled
/// BFV figures the op counters are meant to be weighted with.
struct CostModel {
    double add = 0.550;
    double mult_cc = 20.874;
    double mult_cp = 4.138;
    double rot = 5.350;
    std::optional<double> encrypt = 5.50;
    std::optional<double> decrypt = 2.57;

    void validate() const;  // weights must be >= 0
};

struct CostBreakdown {
    double client_ms = 0.0;
    double cloud_ms = 0.0;

    double total_ms() const noexcept { return client_ms + cloud_ms; }
};

/// Linear combination of the counters with the model weights, per phase.
CostBreakdown estimate_cost(const OpStats& stats, const CostModel& model);

enum class ShapeCategory { MMin, LMin, NMin, LModM, Square };

constexpr std::array<ShapeCategory, 5> kAllCategories = {
    ShapeCategory::MMin, ShapeCategory::LMin, ShapeCategory::NMin, ShapeCategory::LModM,
    ShapeCategory::Square};

std::string category_name(ShapeCategory c);

/// Every matching category is reported (a square case matches all five).
std::vector<ShapeCategory> classify_shape(std::size_t m, std::size_t l, std::size_t n);

struct CampaignConfig {
    std::size_t cases = 500;
    std::size_t dim_lo = 1;
    std::size_t dim_hi = 16;
    std::uint64_t seed = 1;
    std::vector<Algo> algos = {Algo::Hegmm, Algo::HegmmEn, Algo::SquarePad};
    std::size_t slot_count = 4096;
    std::optional<value_t> plaintext_modulus;
    CostModel cost_model;
    unsigned threads = 1;

    void validate() const;
};

struct AlgoResult {
    Algo algo = Algo::Hegmm;
    OpStats stats;
    CostBreakdown cost;
    bool exact = false;
    /// Peak live ciphertexts x slot count; a coarse memory proxy, not bytes.
    std::size_t memory_proxy_slots = 0;
};

struct CaseReport {
    std::size_t index = 0;
    std::size_t m = 0, l = 0, n = 0;
    std::vector<ShapeCategory> categories;
    std::vector<AlgoResult> results;
};

struct RatioSummary {
    std::size_t count = 0;
    double average = 0.0;
    double median = 0.0;
    double max = 0.0;
};

/// Cloud-cost ratio of `baseline` over `candidate` (> 1 means the candidate
/// is predicted cheaper), summarized per shape category and overall.
struct PairSummary {
    Algo baseline = Algo::Hegmm;
    Algo candidate = Algo::HegmmEn;
    RatioSummary overall;
    std::array<RatioSummary, 5> per_category;  // indexed like kAllCategories
};

struct CampaignResult {
    CampaignConfig config;
    std::size_t resampled = 0;  // capacity-violating draws that were redrawn
    std::vector<CaseReport> cases;
    std::vector<PairSummary> summaries;
};

/// Runs the seeded campaign: per case a fresh backend session per algorithm,
/// exactness checked against the triple-loop oracle. Identical configs yield
/// identical results, independent of the thread count.
CampaignResult run_campaign(const CampaignConfig& cfg);

std::string algo_name(Algo a);
Algo algo_from_name(const std::string& name);

/// One CSV row per case per algorithm, stable field order.
void emit_csv(const CampaignResult& result, std::ostream& out);
/// Nested report; parseable back by from-JSON consumers.
std::string emit_json(const CampaignResult& result, int indent = 2);

}  // namespace hegmm
