// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: multiply, diagonals, bench, block-multiply.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "hegmm/algorithms.hpp"
#include "hegmm/costmodel.hpp"
#include "hegmm/lintrans.hpp"
#include "hegmm/matrix_io.hpp"

namespace {

using namespace hegmm;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitCapacity = 2;
constexpr int kExitParse = 3;
constexpr int kExitOverflow = 4;
constexpr int kExitInternal = 5;

std::size_t default_slots() {
    if (const char* env = std::getenv("HEGEMM_SLOTS")) {
        try {
            const unsigned long long v = std::stoull(env);
            if (v >= 2) {
                return static_cast<std::size_t>(v);
            }
        } catch (const std::exception&) {
        }
        std::cerr << "warning: ignoring invalid HEGEMM_SLOTS='" << env << "'\n";
    }
    return 4096;
}

struct GlobalOpts {
    std::size_t slots = default_slots();
    std::optional<value_t> modulus;
    std::uint64_t seed = 1;
    bool verbose = false;
};

std::optional<FlattenOrder> parse_order(const std::string& s) {
    if (s == "auto") {
        return std::nullopt;
    }
    if (s == "col" || s == "column" || s == "column-major") {
        return FlattenOrder::ColumnMajor;
    }
    if (s == "row" || s == "row-major") {
        return FlattenOrder::RowMajor;
    }
    throw ParseError("unknown order '" + s + "' (expected auto|col|row)");
}

std::pair<std::size_t, std::size_t> parse_dims(const std::string& s) {
    const auto x = s.find_first_of("xX");
    if (x == std::string::npos) {
        throw ParseError("dimensions must look like 5x3, got '" + s + "'");
    }
    try {
        const std::size_t a = std::stoull(s.substr(0, x));
        const std::size_t b = std::stoull(s.substr(x + 1));
        if (a == 0 || b == 0) {
            throw ParseError("dimensions must be positive");
        }
        return {a, b};
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception&) {
        throw ParseError("dimensions must look like 5x3, got '" + s + "'");
    }
}

nlohmann::json stats_json(const OpStats& s, const CostBreakdown& cost) {
    auto pc = [](const PhaseCounts& c) {
        return nlohmann::json{{"client", c.client}, {"cloud", c.cloud}};
    };
    return {{"n_add", pc(s.n_add)},
            {"n_mult_cc", pc(s.n_mult_cc)},
            {"n_mult_cp", pc(s.n_mult_cp)},
            {"n_rot", pc(s.n_rot)},
            {"n_encrypt", pc(s.n_encrypt)},
            {"n_decrypt", pc(s.n_decrypt)},
            {"estimated_client_ms", cost.client_ms},
            {"estimated_cloud_ms", cost.cloud_ms},
            {"estimated_total_ms", cost.total_ms()}};
}

void print_stats_table(const OpStats& s, const CostBreakdown& cost, std::ostream& out) {
    auto row = [&](const char* name, const PhaseCounts& c) {
        out << "  " << name << ": client=" << c.client << " cloud=" << c.cloud
            << " total=" << c.total() << '\n';
    };
    out << "operation counts:\n";
    row("he-add   ", s.n_add);
    row("he-mult  ", s.n_mult_cc);
    row("he-cmult ", s.n_mult_cp);
    row("he-rot   ", s.n_rot);
    row("encrypt  ", s.n_encrypt);
    row("decrypt  ", s.n_decrypt);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "estimated cost: client=%.3fms cloud=%.3fms total=%.3fms", cost.client_ms,
                  cost.cloud_ms, cost.total_ms());
    out << buf << '\n';
}

void emit_stats(const OpStats& stats, const std::string& format, const std::string& stats_out) {
    const CostBreakdown cost = estimate_cost(stats, CostModel{});
    std::string fmt = format;
    if (fmt == "auto") {
        fmt = isatty(fileno(stderr)) != 0 ? "table" : "json";
    }
    std::ostringstream buffer;
    if (fmt == "json") {
        buffer << stats_json(stats, cost).dump(2) << '\n';
    } else {
        print_stats_table(stats, cost, buffer);
    }
    if (stats_out.empty()) {
        std::cerr << buffer.str();
    } else {
        std::ofstream f(stats_out);
        if (!f) {
            throw ParseError("cannot write stats to '" + stats_out + "'");
        }
        f << buffer.str();
    }
}

void emit_matrix(const Matrix& m, const std::string& out_path) {
    if (out_path.empty()) {
        write_matrix_text(m, std::cout);
        return;
    }
    std::ofstream f(out_path);
    if (!f) {
        throw ParseError("cannot write result to '" + out_path + "'");
    }
    if (out_path.size() >= 5 && out_path.substr(out_path.size() - 5) == ".json") {
        f << matrix_to_json(m, 2) << '\n';
    } else {
        write_matrix_text(m, f);
    }
}

CostModel load_cost_model(const std::string& path) {
    CostModel model;
    if (path.empty()) {
        return model;
    }
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open cost model '" + path + "'");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("invalid cost-model JSON: " + std::string(e.what()));
    }
    auto pick = [&](const char* name, double& field) {
        if (j.contains(name)) {
            field = j.at(name).get<double>();
        }
    };
    pick("add", model.add);
    pick("mult_cc", model.mult_cc);
    pick("mult_cp", model.mult_cp);
    pick("rot", model.rot);
    if (j.contains("encrypt")) {
        model.encrypt = j.at("encrypt").get<double>();
    }
    if (j.contains("decrypt")) {
        model.decrypt = j.at("decrypt").get<double>();
    }
    model.validate();
    return model;
}

int cmd_multiply(const GlobalOpts& g, const std::string& path_a, const std::string& path_b,
                 const std::string& algo_name_str, const std::string& order_str,
                 const std::string& stats_format, const std::string& out_path,
                 const std::string& stats_out) {
    const Matrix a = read_matrix_file(path_a);
    const Matrix b = read_matrix_file(path_b);
    const Algo algo = algo_from_name(algo_name_str);
    MultiplyOptions opts;
    opts.order = parse_order(order_str);

    SlotBackend backend(BackendConfig{g.slots, g.modulus});
    Matrix result(1, 1);
    RunTrace trace;
    switch (algo) {
        case Algo::Hegmm:
            result = basic_mm(a, b, backend, opts);
            break;
        case Algo::HegmmEn:
            result = enhanced_mm(a, b, backend, opts, &trace);
            break;
        case Algo::SquarePad:
            result = square_pad_mm(a, b, backend, opts);
            break;
    }
    if (g.verbose && algo == Algo::HegmmEn) {
        const StrategyDescriptor& s = trace.strategy;
        std::cerr << "strategy: p=" << s.p << " t=" << s.t << " duplicated="
                  << (s.duplicated == Duplication::None
                          ? "none"
                          : (s.duplicated == Duplication::AVertical ? "A-vertical"
                                                                    : "B-horizontal"))
                  << " order="
                  << (s.order == FlattenOrder::ColumnMajor ? "column-major" : "row-major")
                  << " working=" << s.working_rows << "x" << s.working_cols
                  << " segment=" << s.segment << '\n';
    }
    emit_matrix(result, out_path);
    emit_stats(backend.stats(), stats_format, stats_out);
    return kExitOk;
}

int cmd_diagonals(const std::string& transform, std::size_t k, const std::string& dims_str,
                  std::size_t out_rows, std::size_t out_cols, const std::string& order_str,
                  const std::string& format) {
    const auto [d1, d2] = parse_dims(dims_str);
    const auto order_opt = parse_order(order_str);
    const FlattenOrder order = order_opt.value_or(FlattenOrder::ColumnMajor);

    TransformKind kind = TransformKind::make_sigma(1, 1, order);
    std::size_t m = 0, l = 0, n = 0;
    if (transform == "sigma") {
        m = d1;
        l = d2;
        kind = TransformKind::make_sigma(m, l, order);
    } else if (transform == "tau") {
        l = d1;
        n = d2;
        kind = TransformKind::make_tau(l, n, order);
    } else if (transform == "eps") {
        m = d1;
        l = d2;
        n = out_cols != 0 ? out_cols : l;
        kind = TransformKind::make_eps(k, m, l, n, order);
    } else if (transform == "omega") {
        l = d1;
        n = d2;
        m = out_rows != 0 ? out_rows : l;
        kind = TransformKind::make_omega(k, l, m, n, order);
    } else {
        throw ParseError("unknown transform '" + transform +
                         "' (expected sigma|tau|eps|omega)");
    }

    const auto plan = cached_plan(kind);
    const std::size_t count = plan->entries.size();
    const std::size_t bound = diagonal_count_bound(kind);
    const std::size_t rotations = distinct_rotation_count(kind);

    if (format == "json") {
        nlohmann::json j;
        j["transform"] = transform;
        if (transform == "eps" || transform == "omega") {
            j["k"] = k;
        }
        j["order"] = order == FlattenOrder::ColumnMajor ? "col" : "row";
        j["input_len"] = plan->input_len;
        j["output_len"] = plan->output_len;
        nlohmann::json entries = nlohmann::json::array();
        for (const DiagonalEntry& e : plan->entries) {
            entries.push_back({{"offset", e.offset}, {"weight", e.weight()}});
        }
        j["diagonals"] = entries;
        j["count"] = count;
        j["bound"] = bound;
        j["distinct_rotations"] = rotations;
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << "transform " << transform;
        if (transform == "eps" || transform == "omega") {
            std::cout << " k=" << k;
        }
        std::cout << " (" << (order == FlattenOrder::ColumnMajor ? "column-major" : "row-major")
                  << "), map " << plan->input_len << " -> " << plan->output_len << " slots\n";
        std::cout << "offset  weight  density\n";
        for (const DiagonalEntry& e : plan->entries) {
            std::printf("%+6td  %6zu  %zu/%zu\n", e.offset, e.weight(), e.weight(),
                        plan->output_len);
        }
        std::cout << "non-zero diagonals: " << count << "  (bound " << bound
                  << ", distinct rotations " << rotations << ")\n";
    }
    return kExitOk;
}

int cmd_bench(const GlobalOpts& g, std::size_t cases, std::size_t dim_lo, std::size_t dim_hi,
              const std::string& algos_csv, const std::string& format,
              const std::string& out_path, const std::string& cost_model_path,
              unsigned threads) {
    CampaignConfig cfg;
    cfg.cases = cases;
    cfg.dim_lo = dim_lo;
    cfg.dim_hi = dim_hi;
    cfg.seed = g.seed;
    cfg.slot_count = g.slots;
    cfg.plaintext_modulus = g.modulus;
    cfg.cost_model = load_cost_model(cost_model_path);
    cfg.threads = threads;
    cfg.algos.clear();
    std::stringstream ss(algos_csv);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (!token.empty()) {
            cfg.algos.push_back(algo_from_name(token));
        }
    }

    const CampaignResult result = run_campaign(cfg);

    std::size_t inexact = 0;
    for (const CaseReport& c : result.cases) {
        for (const AlgoResult& r : c.results) {
            inexact += r.exact ? 0 : 1;
        }
    }
    std::cerr << "campaign: " << result.cases.size() << " cases, " << result.resampled
              << " capacity resamples, " << inexact << " inexact results\n";
    for (const PairSummary& s : result.summaries) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "  cloud-cost ratio %s/%s: avg=%.2f median=%.2f max=%.2f",
                      algo_name(s.baseline).c_str(), algo_name(s.candidate).c_str(),
                      s.overall.average, s.overall.median, s.overall.max);
        std::cerr << buf << '\n';
    }

    std::ostringstream payload;
    if (format == "json") {
        payload << emit_json(result) << '\n';
    } else {
        emit_csv(result, payload);
    }
    if (out_path.empty()) {
        std::cout << payload.str();
    } else {
        std::ofstream f(out_path);
        if (!f) {
            throw ParseError("cannot write report to '" + out_path + "'");
        }
        f << payload.str();
    }
    return kExitOk;
}

BlockPlan load_custom_cuts(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open cuts file '" + path + "'");
    }
    auto read_line = [&](const char* what) {
        std::string line;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") != std::string::npos) {
                break;
            }
        }
        std::vector<std::size_t> sizes;
        std::stringstream ss(line);
        std::size_t v = 0;
        while (ss >> v) {
            sizes.push_back(v);
        }
        if (sizes.empty()) {
            throw ParseError(std::string("cuts file: missing ") + what + " sizes");
        }
        return sizes;
    };
    BlockPlan plan;
    plan.row_blocks = read_line("row");
    plan.mid_blocks = read_line("mid");
    plan.col_blocks = read_line("col");
    return plan;
}

int cmd_block_multiply(const GlobalOpts& g, const std::string& path_a, const std::string& path_b,
                       const std::string& plan_name, const std::string& cuts_path,
                       const std::string& algo_name_str, const std::string& stats_format,
                       const std::string& out_path, const std::string& stats_out) {
    const Matrix a = read_matrix_file(path_a);
    const Matrix b = read_matrix_file(path_b);
    const Algo algo = algo_from_name(algo_name_str);

    BlockPlan plan;
    if (plan_name == "p1") {
        plan = BlockPlan::halves(a.rows(), a.cols(), b.cols());
    } else if (plan_name == "p2") {
        plan = BlockPlan::max_square(a.rows(), a.cols(), b.cols());
    } else if (plan_name == "custom") {
        if (cuts_path.empty()) {
            throw ParseError("--plan custom needs --cuts FILE");
        }
        plan = load_custom_cuts(cuts_path);
    } else {
        throw ParseError("unknown plan '" + plan_name + "' (expected p1|p2|custom)");
    }

    SlotBackend backend(BackendConfig{g.slots, g.modulus});
    std::vector<BlockRun> log;
    const Matrix result = blocked_mm(a, b, plan, algo, backend, &log);
    if (g.verbose) {
        for (const BlockRun& run : log) {
            std::cerr << "block (" << run.row_block << "," << run.col_block << ") += A["
                      << run.row_block << "," << run.mid_block << "] (" << run.m << "x" << run.l
                      << ") * B[" << run.mid_block << "," << run.col_block << "] (" << run.l
                      << "x" << run.n << ") via " << algo_name(run.used)
                      << (run.fell_back ? " (capacity fallback)" : "") << '\n';
        }
    }
    emit_matrix(result, out_path);
    emit_stats(backend.stats(), stats_format, stats_out);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Emulated SIMD-slot general matrix multiplication toolkit"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--slots", g.slots, "Ciphertext slot count (power of two)")
        ->capture_default_str();
    app.add_option("--modulus", g.modulus, "Optional plaintext modulus; arithmetic is mod q");
    app.add_option("--seed", g.seed, "Seed for randomized commands")->capture_default_str();
    app.add_flag("--verbose", g.verbose, "Chatty diagnostics on stderr");

    // multiply
    auto* multiply = app.add_subcommand("multiply", "Multiply two matrices from files");
    std::string mul_a, mul_b, mul_algo = "hegmm-en", mul_order = "auto", mul_stats = "auto";
    std::string mul_out, mul_stats_out;
    multiply->add_option("a", mul_a, "Left matrix file")->required();
    multiply->add_option("b", mul_b, "Right matrix file")->required();
    multiply->add_option("--algo", mul_algo, "hegmm|hegmm-en|square-pad")
        ->capture_default_str();
    multiply->add_option("--order", mul_order, "auto|col|row")->capture_default_str();
    multiply->add_option("--stats", mul_stats, "Stats format: table|json|auto")
        ->capture_default_str();
    multiply->add_option("--out", mul_out, "Write the product here instead of stdout");
    multiply->add_option("--stats-out", mul_stats_out, "Write stats here instead of stderr");

    // diagonals
    auto* diagonals =
        app.add_subcommand("diagonals", "Inspect the diagonal plan of a transform");
    std::string dia_transform, dia_dims, dia_order = "col", dia_format = "table";
    std::size_t dia_k = 0, dia_out_rows = 0, dia_out_cols = 0;
    diagonals->add_option("--transform", dia_transform, "sigma|tau|eps|omega")->required();
    diagonals->add_option("--k", dia_k, "Shift index (eps/omega)")->capture_default_str();
    diagonals->add_option("--dims", dia_dims, "Source dims, e.g. 5x3")->required();
    diagonals->add_option("--out-cols", dia_out_cols, "eps output columns (default: source l)");
    diagonals->add_option("--out-rows", dia_out_rows, "omega output rows (default: source l)");
    diagonals->add_option("--order", dia_order, "col|row")->capture_default_str();
    diagonals->add_option("--format", dia_format, "table|json")->capture_default_str();

    // bench
    auto* bench = app.add_subcommand("bench", "Run a seeded comparison campaign");
    std::size_t bench_cases = 500, bench_lo = 1, bench_hi = 16;
    std::string bench_algos = "hegmm,hegmm-en,square-pad", bench_format = "csv";
    std::string bench_out, bench_cost_model;
    unsigned bench_threads = 1;
    bench->add_option("--cases", bench_cases, "Number of random cases")->capture_default_str();
    bench->add_option("--dim-lo", bench_lo, "Smallest dimension")->capture_default_str();
    bench->add_option("--dim-hi", bench_hi, "Largest dimension")->capture_default_str();
    bench->add_option("--algos", bench_algos, "Comma-separated algorithm list")
        ->capture_default_str();
    bench->add_option("--format", bench_format, "csv|json")->capture_default_str();
    bench->add_option("--out", bench_out, "Report path (default: stdout)");
    bench->add_option("--cost-model", bench_cost_model,
                      "JSON file with weight overrides (add/mult_cc/mult_cp/rot/encrypt/decrypt)");
    bench->add_option("--threads", bench_threads, "Parallel case workers")->capture_default_str();

    // block-multiply
    auto* blockmul =
        app.add_subcommand("block-multiply", "Multiply oversized matrices block-wise");
    std::string blk_a, blk_b, blk_plan = "p1", blk_cuts, blk_algo = "hegmm-en";
    std::string blk_stats = "auto", blk_out, blk_stats_out;
    blockmul->add_option("a", blk_a, "Left matrix file")->required();
    blockmul->add_option("b", blk_b, "Right matrix file")->required();
    blockmul->add_option("--plan", blk_plan, "p1|p2|custom")->capture_default_str();
    blockmul->add_option("--cuts", blk_cuts, "Custom cuts file (rows / mid / cols lines)");
    blockmul->add_option("--algo", blk_algo, "hegmm|hegmm-en|square-pad")
        ->capture_default_str();
    blockmul->add_option("--stats", blk_stats, "Stats format: table|json|auto")
        ->capture_default_str();
    blockmul->add_option("--out", blk_out, "Write the product here instead of stdout");
    blockmul->add_option("--stats-out", blk_stats_out, "Write stats here instead of stderr");

    if (argc <= 1) {
        std::cerr << app.help();
        return kExitUsage;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (multiply->parsed()) {
            return cmd_multiply(g, mul_a, mul_b, mul_algo, mul_order, mul_stats, mul_out,
                                mul_stats_out);
        }
        if (diagonals->parsed()) {
            return cmd_diagonals(dia_transform, dia_k, dia_dims, dia_out_rows, dia_out_cols,
                                 dia_order, dia_format);
        }
        if (bench->parsed()) {
            return cmd_bench(g, bench_cases, bench_lo, bench_hi, bench_algos, bench_format,
                             bench_out, bench_cost_model, bench_threads);
        }
        if (blockmul->parsed()) {
            return cmd_block_multiply(g, blk_a, blk_b, blk_plan, blk_cuts, blk_algo, blk_stats,
                                      blk_out, blk_stats_out);
        }
        std::cerr << app.help();
        return kExitUsage;
    } catch (const CapacityError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitCapacity;
    } catch (const DimensionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitCapacity;
    } catch (const OverflowError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitOverflow;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitParse;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInternal;
    }
}
