// SPDX-License-Identifier: Apache-2.0
#include "hegmm/costmodel.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "gtest/gtest.h"

using namespace hegmm;

TEST(Estimate, ThreeCcMultsUnderDefaultWeights) {
    OpStats s;
    s.n_mult_cc.cloud = 3;
    const CostBreakdown cost = estimate_cost(s, CostModel{});
    EXPECT_NEAR(cost.cloud_ms, 62.622, 1e-9);
    EXPECT_EQ(cost.client_ms, 0.0);
}

TEST(Estimate, ZeroStatsCostNothing) {
    const CostBreakdown cost = estimate_cost(OpStats{}, CostModel{});
    EXPECT_EQ(cost.total_ms(), 0.0);
}

TEST(Estimate, PhasesAreSeparated) {
    OpStats s;
    s.n_rot.client = 2;
    s.n_rot.cloud = 4;
    s.n_encrypt.client = 1;
    const CostBreakdown cost = estimate_cost(s, CostModel{});
    EXPECT_NEAR(cost.client_ms, 2 * 5.350 + 5.50, 1e-9);
    EXPECT_NEAR(cost.cloud_ms, 4 * 5.350, 1e-9);
}

TEST(Estimate, MonotoneInEveryWeight) {
    std::mt19937_64 rng(5);
    OpStats s;
    s.n_add.cloud = 3;
    s.n_mult_cc.cloud = 2;
    s.n_mult_cp.client = 5;
    s.n_rot.cloud = 7;
    s.n_encrypt.client = 2;
    s.n_decrypt.client = 1;
    for (int trial = 0; trial < 50; ++trial) {
        CostModel base;
        base.add = static_cast<double>(rng() % 100) / 10.0;
        base.mult_cc = static_cast<double>(rng() % 100) / 10.0;
        base.mult_cp = static_cast<double>(rng() % 100) / 10.0;
        base.rot = static_cast<double>(rng() % 100) / 10.0;
        CostModel bumped = base;
        switch (rng() % 4) {
            case 0:
                bumped.add += 1.0;
                break;
            case 1:
                bumped.mult_cc += 1.0;
                break;
            case 2:
                bumped.mult_cp += 1.0;
                break;
            default:
                bumped.rot += 1.0;
                break;
        }
        EXPECT_GE(estimate_cost(s, bumped).total_ms(), estimate_cost(s, base).total_ms());
    }
}

TEST(Estimate, NegativeWeightRejected) {
    CostModel m;
    m.rot = -1.0;
    EXPECT_THROW(estimate_cost(OpStats{}, m), ParseError);
}

TEST(Estimate, DuplicationBeatsPlainOnThinShape) {
    std::mt19937_64 rng(2);
    Matrix a(2, 5);
    Matrix b(5, 7);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            a(i, j) = static_cast<value_t>(rng() % 19) - 9;
        }
    }
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 7; ++j) {
            b(i, j) = static_cast<value_t>(rng() % 19) - 9;
        }
    }
    SlotBackend be_plain(BackendConfig{4096, {}});
    SlotBackend be_en(BackendConfig{4096, {}});
    basic_mm(a, b, be_plain);
    enhanced_mm(a, b, be_en);
    const double plain = estimate_cost(be_plain.stats(), CostModel{}).cloud_ms;
    const double en = estimate_cost(be_en.stats(), CostModel{}).cloud_ms;
    EXPECT_LT(en, plain);
}

TEST(Classify, SquareMatchesEverything) {
    const auto cats = classify_shape(4, 4, 4);
    EXPECT_EQ(cats.size(), 5u);  // all three mins, l mod m, square
}

TEST(Classify, PinnedExamples) {
    {
        const auto cats = classify_shape(2, 6, 5);
        EXPECT_EQ(cats, (std::vector<ShapeCategory>{ShapeCategory::MMin, ShapeCategory::LModM}));
    }
    {
        const auto cats = classify_shape(5, 2, 7);
        EXPECT_EQ(cats, (std::vector<ShapeCategory>{ShapeCategory::LMin}));
    }
}

TEST(Campaign, DeterministicAcrossRunsAndThreadCounts) {
    CampaignConfig cfg;
    cfg.cases = 40;
    cfg.dim_hi = 10;
    cfg.seed = 77;
    const CampaignResult r1 = run_campaign(cfg);
    const CampaignResult r2 = run_campaign(cfg);
    cfg.threads = 4;
    const CampaignResult r3 = run_campaign(cfg);

    std::ostringstream c1, c2, c3;
    emit_csv(r1, c1);
    emit_csv(r2, c2);
    emit_csv(r3, c3);
    EXPECT_EQ(c1.str(), c2.str());
    EXPECT_EQ(c1.str(), c3.str());
    EXPECT_EQ(emit_json(r1), emit_json(r3));
}

TEST(Campaign, SmallRunIsExactWithExpectedMultCounts) {
    CampaignConfig cfg;
    cfg.cases = 60;
    cfg.dim_hi = 12;
    cfg.seed = 3;
    const CampaignResult result = run_campaign(cfg);
    ASSERT_EQ(result.cases.size(), 60u);
    for (const CaseReport& c : result.cases) {
        const std::size_t p = std::min({c.m, c.l, c.n});
        for (const AlgoResult& r : c.results) {
            ASSERT_TRUE(r.exact) << algo_name(r.algo) << " on " << c.m << "x" << c.l << "x"
                                 << c.n;
            if (r.algo == Algo::Hegmm) {
                EXPECT_EQ(r.stats.n_mult_cc.cloud, c.l);
            }
            if (r.algo == Algo::HegmmEn) {
                EXPECT_EQ(r.stats.n_mult_cc.cloud, p);
                EXPECT_LE(r.stats.n_mult_cc.cloud, c.l);
            }
            if (r.algo == Algo::SquarePad) {
                EXPECT_EQ(r.stats.n_mult_cc.cloud, std::max({c.m, c.l, c.n}));
            }
            EXPECT_GT(r.memory_proxy_slots, 0u);
        }
    }
    // summaries exist for all three pairs
    EXPECT_EQ(result.summaries.size(), 3u);
    for (const PairSummary& s : result.summaries) {
        EXPECT_EQ(s.overall.count, result.cases.size());
    }
}

TEST(Campaign, ResamplesCapacityViolations) {
    CampaignConfig cfg;
    cfg.cases = 30;
    cfg.dim_lo = 30;
    cfg.dim_hi = 70;  // some draws exceed 4096 slots for some algorithm
    cfg.seed = 9;
    const CampaignResult result = run_campaign(cfg);
    EXPECT_GT(result.resampled, 0u);
    for (const CaseReport& c : result.cases) {
        for (const AlgoResult& r : c.results) {
            ASSERT_TRUE(r.exact);
        }
    }
}

TEST(Emit, EmptyCampaignGivesHeaderOnlyCsv) {
    CampaignResult result;
    std::ostringstream out;
    emit_csv(result, out);
    const std::string text = out.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
    EXPECT_NE(text.find("case,m,l,n,"), std::string::npos);
}

TEST(Emit, OneCaseTwoAlgosGivesTwoRows) {
    CampaignConfig cfg;
    cfg.cases = 1;
    cfg.algos = {Algo::Hegmm, Algo::HegmmEn};
    const CampaignResult result = run_campaign(cfg);
    std::ostringstream out;
    emit_csv(result, out);
    const std::string text = out.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);  // header + 2 rows
}

TEST(Emit, JsonRoundTripsThroughSchema) {
    CampaignConfig cfg;
    cfg.cases = 5;
    cfg.seed = 21;
    const CampaignResult result = run_campaign(cfg);
    const nlohmann::json j = nlohmann::json::parse(emit_json(result));
    ASSERT_TRUE(j.contains("config"));
    ASSERT_TRUE(j.contains("cases"));
    ASSERT_TRUE(j.contains("summaries"));
    EXPECT_EQ(j.at("config").at("cases").get<std::size_t>(), 5u);
    ASSERT_EQ(j.at("cases").size(), 5u);
    for (const auto& jc : j.at("cases")) {
        ASSERT_TRUE(jc.contains("m"));
        ASSERT_TRUE(jc.contains("categories"));
        for (const auto& [name, algo] : jc.at("algos").items()) {
            ASSERT_NO_THROW(algo_from_name(name));
            ASSERT_TRUE(algo.at("exact").get<bool>());
            ASSERT_TRUE(algo.at("stats").contains("n_mult_cc"));
        }
    }
}

TEST(Campaign, EnhancedNeverCostsMoreCloudThanPlainWhenMinBelowL) {
    CampaignConfig cfg;
    cfg.cases = 120;
    cfg.dim_hi = 12;
    cfg.seed = 5;
    cfg.algos = {Algo::Hegmm, Algo::HegmmEn};
    const CampaignResult result = run_campaign(cfg);
    for (const CaseReport& c : result.cases) {
        const AlgoResult* plain = nullptr;
        const AlgoResult* en = nullptr;
        for (const AlgoResult& r : c.results) {
            (r.algo == Algo::Hegmm ? plain : en) = &r;
        }
        ASSERT_NE(plain, nullptr);
        ASSERT_NE(en, nullptr);
        if (std::min({c.m, c.l, c.n}) < c.l) {
            EXPECT_LE(en->cost.cloud_ms, plain->cost.cloud_ms)
                << c.m << "x" << c.l << "x" << c.n;
        }
    }
}
