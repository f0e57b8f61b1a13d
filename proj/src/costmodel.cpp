// SPDX-License-Identifier: Apache-2.0
#include "hegmm/costmodel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <future>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "hegmm/matrix.hpp"

namespace hegmm {

namespace {

// splitmix64: deterministic across platforms, one stream per case.
std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::size_t draw_in(std::uint64_t& state, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(splitmix64(state) % (hi - lo + 1));
}

double phase_cost(const OpStats& s, const CostModel& m, Phase p) {
    double total = static_cast<double>(s.n_add.of(p)) * m.add +
                   static_cast<double>(s.n_mult_cc.of(p)) * m.mult_cc +
                   static_cast<double>(s.n_mult_cp.of(p)) * m.mult_cp +
                   static_cast<double>(s.n_rot.of(p)) * m.rot;
    if (m.encrypt) {
        total += static_cast<double>(s.n_encrypt.of(p)) * *m.encrypt;
    }
    if (m.decrypt) {
        total += static_cast<double>(s.n_decrypt.of(p)) * *m.decrypt;
    }
    return total;
}

std::string fmt_ms(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

void CostModel::validate() const {
    const bool ok = add >= 0 && mult_cc >= 0 && mult_cp >= 0 && rot >= 0 &&
                    (!encrypt || *encrypt >= 0) && (!decrypt || *decrypt >= 0);
    if (!ok) {
        throw ParseError("cost-model weights must be non-negative");
    }
}

CostBreakdown estimate_cost(const OpStats& stats, const CostModel& model) {
    model.validate();
    return {phase_cost(stats, model, Phase::Client), phase_cost(stats, model, Phase::Cloud)};
}

std::string category_name(ShapeCategory c) {
    switch (c) {
        case ShapeCategory::MMin:
            return "m-min";
        case ShapeCategory::LMin:
            return "l-min";
        case ShapeCategory::NMin:
            return "n-min";
        case ShapeCategory::LModM:
            return "l-mod-m";
        case ShapeCategory::Square:
            return "square";
    }
    return "?";
}

std::vector<ShapeCategory> classify_shape(std::size_t m, std::size_t l, std::size_t n) {
    if (m == 0 || l == 0 || n == 0) {
        throw DimensionError("dimensions must be positive");
    }
    const std::size_t p = std::min({m, l, n});
    std::vector<ShapeCategory> out;
    if (m == p) {
        out.push_back(ShapeCategory::MMin);
    }
    if (l == p) {
        out.push_back(ShapeCategory::LMin);
    }
    if (n == p) {
        out.push_back(ShapeCategory::NMin);
    }
    if (l % m == 0) {
        out.push_back(ShapeCategory::LModM);
    }
    if (m == l && l == n) {
        out.push_back(ShapeCategory::Square);
    }
    return out;
}

void CampaignConfig::validate() const {
    cost_model.validate();
    if (dim_lo == 0 || dim_hi < dim_lo) {
        throw ParseError("campaign dimension range must satisfy 1 <= lo <= hi");
    }
    if (algos.empty()) {
        throw ParseError("campaign needs at least one algorithm");
    }
    BackendConfig{slot_count, plaintext_modulus}.validate();
}

std::string algo_name(Algo a) {
    switch (a) {
        case Algo::Hegmm:
            return "hegmm";
        case Algo::HegmmEn:
            return "hegmm-en";
        case Algo::SquarePad:
            return "square-pad";
    }
    return "?";
}

Algo algo_from_name(const std::string& name) {
    if (name == "hegmm") {
        return Algo::Hegmm;
    }
    if (name == "hegmm-en" || name == "hegmm_en") {
        return Algo::HegmmEn;
    }
    if (name == "square-pad" || name == "square_pad") {
        return Algo::SquarePad;
    }
    throw ParseError("unknown algorithm '" + name + "'");
}

namespace {

Matrix run_algo(Algo algo, const Matrix& a, const Matrix& b, Backend& be) {
    switch (algo) {
        case Algo::Hegmm:
            return basic_mm(a, b, be);
        case Algo::HegmmEn:
            return enhanced_mm(a, b, be);
        case Algo::SquarePad:
            return square_pad_mm(a, b, be);
    }
    throw Error("unknown algorithm");
}

CaseReport run_case(const CampaignConfig& cfg, std::size_t index, std::size_t& resampled) {
    std::uint64_t stream = cfg.seed * 0x9e3779b97f4a7c15ULL + index + 1;
    std::size_t m = 0, l = 0, n = 0;
    while (true) {
        m = draw_in(stream, cfg.dim_lo, cfg.dim_hi);
        l = draw_in(stream, cfg.dim_lo, cfg.dim_hi);
        n = draw_in(stream, cfg.dim_lo, cfg.dim_hi);
        const bool ok = std::all_of(cfg.algos.begin(), cfg.algos.end(), [&](Algo a) {
            return fits(a, m, l, n, cfg.slot_count);
        });
        if (ok) {
            break;
        }
        ++resampled;
    }
    auto entry = [&stream]() { return static_cast<value_t>(splitmix64(stream) % 19) - 9; };
    Matrix a(m, l);
    Matrix b(l, n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < l; ++j) {
            a(i, j) = entry();
        }
    }
    for (std::size_t i = 0; i < l; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            b(i, j) = entry();
        }
    }
    const Matrix expected = cfg.plaintext_modulus
                                ? naive_matmul_mod(a, b, *cfg.plaintext_modulus)
                                : naive_matmul(a, b);

    CaseReport report;
    report.index = index;
    report.m = m;
    report.l = l;
    report.n = n;
    report.categories = classify_shape(m, l, n);
    for (Algo algo : cfg.algos) {
        SlotBackend be(BackendConfig{cfg.slot_count, cfg.plaintext_modulus});
        const Matrix got = run_algo(algo, a, b, be);
        AlgoResult r;
        r.algo = algo;
        r.stats = be.stats();
        r.cost = estimate_cost(r.stats, cfg.cost_model);
        r.exact = got == expected;
        r.memory_proxy_slots = be.peak_live_ciphertexts() * cfg.slot_count;
        report.results.push_back(std::move(r));
    }
    return report;
}

RatioSummary summarize(std::vector<double> ratios) {
    RatioSummary s;
    s.count = ratios.size();
    if (ratios.empty()) {
        return s;
    }
    std::sort(ratios.begin(), ratios.end());
    double sum = 0;
    for (double r : ratios) {
        sum += r;
    }
    s.average = sum / static_cast<double>(ratios.size());
    const std::size_t mid = ratios.size() / 2;
    s.median = ratios.size() % 2 == 1 ? ratios[mid] : (ratios[mid - 1] + ratios[mid]) / 2.0;
    s.max = ratios.back();
    return s;
}

const AlgoResult* find_result(const CaseReport& c, Algo a) {
    for (const AlgoResult& r : c.results) {
        if (r.algo == a) {
            return &r;
        }
    }
    return nullptr;
}

PairSummary summarize_pair(const CampaignResult& result, Algo baseline, Algo candidate) {
    PairSummary s;
    s.baseline = baseline;
    s.candidate = candidate;
    std::vector<double> overall;
    std::array<std::vector<double>, 5> per_cat;
    for (const CaseReport& c : result.cases) {
        const AlgoResult* rb = find_result(c, baseline);
        const AlgoResult* rc = find_result(c, candidate);
        if (rb == nullptr || rc == nullptr || rc->cost.cloud_ms <= 0) {
            continue;
        }
        const double ratio = rb->cost.cloud_ms / rc->cost.cloud_ms;
        overall.push_back(ratio);
        for (std::size_t i = 0; i < kAllCategories.size(); ++i) {
            if (std::find(c.categories.begin(), c.categories.end(), kAllCategories[i]) !=
                c.categories.end()) {
                per_cat[i].push_back(ratio);
            }
        }
    }
    s.overall = summarize(std::move(overall));
    for (std::size_t i = 0; i < per_cat.size(); ++i) {
        s.per_category[i] = summarize(std::move(per_cat[i]));
    }
    return s;
}

}  // namespace

CampaignResult run_campaign(const CampaignConfig& cfg) {
    cfg.validate();
    CampaignResult result;
    result.config = cfg;
    result.cases.resize(cfg.cases);
    std::vector<std::size_t> resamples(cfg.cases, 0);

    const unsigned workers = std::max(1u, cfg.threads);
    if (workers == 1) {
        for (std::size_t i = 0; i < cfg.cases; ++i) {
            result.cases[i] = run_case(cfg, i, resamples[i]);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::future<void>> futures;
        futures.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            futures.push_back(std::async(std::launch::async, [&] {
                while (true) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= cfg.cases) {
                        return;
                    }
                    result.cases[i] = run_case(cfg, i, resamples[i]);
                }
            }));
        }
        for (auto& f : futures) {
            f.get();
        }
    }
    for (std::size_t r : resamples) {
        result.resampled += r;
    }

    auto has = [&](Algo a) {
        return std::find(cfg.algos.begin(), cfg.algos.end(), a) != cfg.algos.end();
    };
    if (has(Algo::SquarePad) && has(Algo::Hegmm)) {
        result.summaries.push_back(summarize_pair(result, Algo::SquarePad, Algo::Hegmm));
    }
    if (has(Algo::SquarePad) && has(Algo::HegmmEn)) {
        result.summaries.push_back(summarize_pair(result, Algo::SquarePad, Algo::HegmmEn));
    }
    if (has(Algo::Hegmm) && has(Algo::HegmmEn)) {
        result.summaries.push_back(summarize_pair(result, Algo::Hegmm, Algo::HegmmEn));
    }
    return result;
}

void emit_csv(const CampaignResult& result, std::ostream& out) {
    out << "case,m,l,n,categories,algo,exact,"
           "add_client,add_cloud,mult_cc_client,mult_cc_cloud,"
           "mult_cp_client,mult_cp_cloud,rot_client,rot_cloud,"
           "encrypt_client,encrypt_cloud,decrypt_client,decrypt_cloud,"
           "client_ms,cloud_ms,total_ms,memory_proxy_slots\n";
    for (const CaseReport& c : result.cases) {
        std::string cats;
        for (const ShapeCategory cat : c.categories) {
            if (!cats.empty()) {
                cats += ';';
            }
            cats += category_name(cat);
        }
        for (const AlgoResult& r : c.results) {
            const OpStats& s = r.stats;
            out << c.index << ',' << c.m << ',' << c.l << ',' << c.n << ',' << cats << ','
                << algo_name(r.algo) << ',' << (r.exact ? 1 : 0) << ',' << s.n_add.client << ','
                << s.n_add.cloud << ',' << s.n_mult_cc.client << ',' << s.n_mult_cc.cloud << ','
                << s.n_mult_cp.client << ',' << s.n_mult_cp.cloud << ',' << s.n_rot.client << ','
                << s.n_rot.cloud << ',' << s.n_encrypt.client << ',' << s.n_encrypt.cloud << ','
                << s.n_decrypt.client << ',' << s.n_decrypt.cloud << ','
                << fmt_ms(r.cost.client_ms) << ',' << fmt_ms(r.cost.cloud_ms) << ','
                << fmt_ms(r.cost.total_ms()) << ',' << r.memory_proxy_slots << '\n';
        }
    }
}

namespace {

nlohmann::json stats_to_json(const OpStats& s) {
    auto pc = [](const PhaseCounts& c) {
        return nlohmann::json{{"client", c.client}, {"cloud", c.cloud}};
    };
    return {{"n_add", pc(s.n_add)},         {"n_mult_cc", pc(s.n_mult_cc)},
            {"n_mult_cp", pc(s.n_mult_cp)}, {"n_rot", pc(s.n_rot)},
            {"n_encrypt", pc(s.n_encrypt)}, {"n_decrypt", pc(s.n_decrypt)}};
}

nlohmann::json ratio_to_json(const RatioSummary& r) {
    return {{"count", r.count}, {"average", r.average}, {"median", r.median}, {"max", r.max}};
}

}  // namespace

std::string emit_json(const CampaignResult& result, int indent) {
    nlohmann::json root;
    nlohmann::json algos = nlohmann::json::array();
    for (Algo a : result.config.algos) {
        algos.push_back(algo_name(a));
    }
    root["config"] = {{"cases", result.config.cases},
                      {"dim_lo", result.config.dim_lo},
                      {"dim_hi", result.config.dim_hi},
                      {"seed", result.config.seed},
                      {"slot_count", result.config.slot_count},
                      {"algos", algos}};
    if (result.config.plaintext_modulus) {
        root["config"]["plaintext_modulus"] = *result.config.plaintext_modulus;
    }
    root["resampled"] = result.resampled;
    nlohmann::json cases = nlohmann::json::array();
    for (const CaseReport& c : result.cases) {
        nlohmann::json jc;
        jc["case"] = c.index;
        jc["m"] = c.m;
        jc["l"] = c.l;
        jc["n"] = c.n;
        nlohmann::json cats = nlohmann::json::array();
        for (ShapeCategory cat : c.categories) {
            cats.push_back(category_name(cat));
        }
        jc["categories"] = cats;
        nlohmann::json algos_obj = nlohmann::json::object();
        for (const AlgoResult& r : c.results) {
            algos_obj[algo_name(r.algo)] = {{"exact", r.exact},
                                            {"stats", stats_to_json(r.stats)},
                                            {"client_ms", r.cost.client_ms},
                                            {"cloud_ms", r.cost.cloud_ms},
                                            {"total_ms", r.cost.total_ms()},
                                            {"memory_proxy_slots", r.memory_proxy_slots}};
        }
        jc["algos"] = algos_obj;
        cases.push_back(std::move(jc));
    }
    root["cases"] = std::move(cases);
    nlohmann::json summaries = nlohmann::json::array();
    for (const PairSummary& s : result.summaries) {
        nlohmann::json js;
        js["baseline"] = algo_name(s.baseline);
        js["candidate"] = algo_name(s.candidate);
        js["overall"] = ratio_to_json(s.overall);
        nlohmann::json per_cat = nlohmann::json::object();
        for (std::size_t i = 0; i < kAllCategories.size(); ++i) {
            per_cat[category_name(kAllCategories[i])] = ratio_to_json(s.per_category[i]);
        }
        js["categories"] = std::move(per_cat);
        summaries.push_back(std::move(js));
    }
    root["summaries"] = std::move(summaries);
    return root.dump(indent);
}

}  // namespace hegmm
