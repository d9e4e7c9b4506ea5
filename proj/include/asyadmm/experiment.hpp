#pragma once

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "asyadmm/admm.hpp"
#include "asyadmm/consensus.hpp"
#include "asyadmm/digraph.hpp"
#include "asyadmm/oracle.hpp"
#include "asyadmm/problems.hpp"

namespace asyadmm {

/// Invalid or unusable experiment settings (bad values, unreadable files).
class ConfigError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    /// "random" or "file:<path>"
    std::string topology = "random";
    std::size_t nodes = 20;
    double edge_prob = 0.2;
    std::size_t dim = 3;
    /// Rows per A_i; 0 means square (rows = dim).
    std::size_t rows = 0;
    /// Optional instance file; empty means generate.
    std::string instance;
    double epsilon = 0.01;
    Step tau_bar = 3;
    double rho = 1.0;
    std::size_t kmax = 200;
    double eps_abs = 1e-4;
    double eps_rel = 1e-2;
    Step step_cap = 1000;
    std::uint64_t seed = 1;
    /// "asyadmm" or "sync_baseline"
    std::string mode = "asyadmm";
    bool stop = true;
    std::string out = ".";
    std::string trace;

    std::size_t row_count() const { return rows == 0 ? dim : rows; }

    std::optional<std::string> topology_file() const {
        constexpr std::string_view prefix = "file:";
        if (topology.rfind(prefix, 0) == 0) return topology.substr(prefix.size());
        return std::nullopt;
    }

    void validate() const {
        if (topology != "random" && !topology_file())
            throw ConfigError("topology must be 'random' or 'file:<path>', got '" + topology + "'");
        if (topology_file() && topology_file()->empty()) throw ConfigError("topology file path is empty");
        if (!topology_file() && nodes < 2) throw ConfigError("nodes must be at least 2");
        if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) throw ConfigError("edge-prob must lie in [0, 1]");
        if (dim < 1) throw ConfigError("dim must be positive");
        if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
        if (!(rho > 0.0)) throw ConfigError("rho must be positive");
        if (kmax < 1) throw ConfigError("kmax must be at least 1");
        if (!(eps_abs >= 0.0) || !(eps_rel >= 0.0)) throw ConfigError("stopping tolerances must be nonnegative");
        if (mode != "asyadmm" && mode != "sync_baseline")
            throw ConfigError("mode must be 'asyadmm' or 'sync_baseline', got '" + mode + "'");
    }

    SolverConfig solver() const {
        SolverConfig s;
        s.rho = rho;
        s.epsilon = epsilon;
        s.tau_bar = mode == "sync_baseline" ? 0 : tau_bar;
        s.k_max = kmax;
        s.eps_abs = eps_abs;
        s.eps_rel = eps_rel;
        s.step_cap = step_cap;
        s.seed = seed;
        s.mode = mode == "sync_baseline" ? ZUpdateMode::ExactAverage : ZUpdateMode::TerminatingConsensus;
        s.use_stopping_criterion = stop;
        return s;
    }
};

/// Flat `key=value` dump; keys match the command-line flag names.
inline std::string to_config_text(const ExperimentConfig& c) {
    std::string s;
    const auto put = [&](std::string_view key, const std::string& value) {
        s += fmt::format("{}={}\n", key, value);
    };
    const auto num = [](double v) { return fmt::format("{}", v); };
    put("topology", c.topology);
    put("nodes", std::to_string(c.nodes));
    put("edge-prob", num(c.edge_prob));
    put("dim", std::to_string(c.dim));
    put("rows", std::to_string(c.rows));
    if (!c.instance.empty()) put("instance", c.instance);
    put("epsilon", num(c.epsilon));
    put("tau-bar", std::to_string(c.tau_bar));
    put("rho", num(c.rho));
    put("kmax", std::to_string(c.kmax));
    put("eps-abs", num(c.eps_abs));
    put("eps-rel", num(c.eps_rel));
    put("step-cap", std::to_string(c.step_cap));
    put("seed", std::to_string(c.seed));
    put("mode", c.mode);
    put("stop", c.stop ? "true" : "false");
    put("out", c.out);
    if (!c.trace.empty()) put("trace", c.trace);
    return s;
}

struct Experiment {
    Network network;
    LeastSquaresInstance instance;
    GroundTruth truth;
};

inline Experiment build_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    Digraph g;
    if (const auto path = cfg.topology_file()) {
        if (!std::filesystem::exists(*path)) throw ConfigError("topology file not found: " + *path);
        try {
            g = load_edge_list(*path);
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
        if (!is_strongly_connected(g)) throw ConfigError("topology is not strongly connected: " + *path);
    } else {
        g = random_strongly_connected(cfg.nodes, cfg.edge_prob, cfg.seed);
    }
    const std::size_t n = g.size();

    LeastSquaresInstance inst;
    if (!cfg.instance.empty()) {
        try {
            inst = load_instance(cfg.instance);
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
        if (inst.n() != n) throw ConfigError("instance node count does not match topology");
    } else {
        inst = generate_ls(n, cfg.dim, cfg.row_count(), detail::derive_seed(cfg.seed, 1));
    }
    GroundTruth truth = centralized_solution(inst);
    return {Network(std::move(g)), std::move(inst), std::move(truth)};
}

struct RunSummary {
    double final_objective = 0.0;
    double oracle_objective = 0.0;
    double relative_error = 0.0;
    Step total_consensus_steps = 0;
    double mean_consensus_steps = 0.0;
    std::size_t iterations = 0;
    std::size_t capped_events = 0;
    double max_node_err = 0.0;
    /// Wall-clock seconds; reported only, never written to CSV.
    double runtime_seconds = 0.0;
};

struct ExperimentResult {
    RunRecord record;
    RunSummary summary;
};

inline RunSummary summarize(const RunRecord& rec, const GroundTruth& truth) {
    RunSummary s;
    const auto& last = rec.iterations.back();
    s.final_objective = last.objective;
    s.oracle_objective = truth.f_star;
    s.relative_error = std::abs(last.objective - truth.f_star) / std::abs(truth.f_star);
    s.total_consensus_steps = rec.total_consensus_steps();
    s.mean_consensus_steps = rec.mean_consensus_steps();
    s.iterations = rec.iterations.size();
    s.capped_events = rec.capped_events;
    s.max_node_err = last.max_node_err;
    return s;
}

inline ExperimentResult execute(const ExperimentConfig& cfg, const Experiment& ex,
                                EventQueue::TraceSink trace = nullptr) {
    const auto costs = ex.instance.costs();
    RunOptions opts;
    opts.truth = &ex.truth;
    opts.trace = std::move(trace);
    const auto t0 = std::chrono::steady_clock::now();
    RunRecord rec = run(costs, ex.network, cfg.solver(), opts);
    const auto t1 = std::chrono::steady_clock::now();
    RunSummary summary = summarize(rec, ex.truth);
    summary.runtime_seconds = std::chrono::duration<double>(t1 - t0).count();
    return {std::move(rec), summary};
}

inline std::string csv_number(double v) { return fmt::format("{:.17g}", v); }

inline void write_run_csv(std::ostream& os, const RunRecord& rec) {
    os << "k,objective,primal_res,dual_res,consensus_steps,gap,max_node_err\n";
    for (const auto& it : rec.iterations) {
        os << fmt::format("{},{},{},{},{},{},{}\n", it.k, csv_number(it.objective), csv_number(it.primal_res),
                          csv_number(it.dual_res), it.consensus_steps, csv_number(it.gap),
                          csv_number(it.max_node_err));
    }
}

inline void write_summary_csv(std::ostream& os, const RunSummary& s) {
    os << "final_objective,oracle_objective,relative_error,total_consensus_steps,mean_consensus_steps,"
          "iterations,capped_events,max_node_err\n";
    os << fmt::format("{},{},{},{},{},{},{},{}\n", csv_number(s.final_objective), csv_number(s.oracle_objective),
                      csv_number(s.relative_error), s.total_consensus_steps, csv_number(s.mean_consensus_steps),
                      s.iterations, s.capped_events, csv_number(s.max_node_err));
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    return out;
}

/// Runs one experiment and writes run.csv, summary.csv and config.txt into cfg.out.
inline RunSummary run_once(const ExperimentConfig& cfg) {
    const Experiment ex = build_experiment(cfg);
    const std::filesystem::path dir(cfg.out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + cfg.out + ": " + ec.message());

    std::optional<std::ofstream> trace_file;
    EventQueue::TraceSink sink;
    if (!cfg.trace.empty()) {
        trace_file.emplace(open_output(cfg.trace));
        *trace_file << "k,sender,receiver,kind\n";
        sink = [&trace_file](const Message& m) { *trace_file << trace_line(m) << '\n'; };
    }

    const ExperimentResult res = execute(cfg, ex, sink);
    auto run_csv = open_output(dir / "run.csv");
    write_run_csv(run_csv, res.record);
    auto summary_csv = open_output(dir / "summary.csv");
    write_summary_csv(summary_csv, res.summary);
    auto config_txt = open_output(dir / "config.txt");
    config_txt << to_config_text(cfg);
    return res.summary;
}

struct SweepRow {
    double epsilon = 0.0;
    Step tau_bar = 0;
    std::optional<RunSummary> summary;
    std::string status = "ok";
};

/// One run per (epsilon, tau_bar) cell on a shared topology and instance.
/// Cells run on `workers` threads; rows come back in (epsilon, tau_bar)
/// list order regardless of completion order.
inline std::vector<SweepRow> sweep(const ExperimentConfig& base, const std::vector<double>& epsilons,
                                   const std::vector<Step>& tau_bars, unsigned workers = 0) {
    if (epsilons.empty() || tau_bars.empty()) throw ConfigError("sweep: epsilon and tau-bar lists must be nonempty");
    const Experiment ex = build_experiment(base);

    std::vector<SweepRow> rows;
    for (double e : epsilons)
        for (Step t : tau_bars) rows.push_back({e, t, std::nullopt, "ok"});

    const auto run_cell = [&](SweepRow& row) {
        try {
            ExperimentConfig cfg = base;
            cfg.epsilon = row.epsilon;
            cfg.tau_bar = row.tau_bar;
            cfg.validate();
            row.summary = execute(cfg, ex).summary;
        } catch (const std::exception& e) {
            row.status = std::string("error: ") + e.what();
        }
    };

    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    std::size_t next = 0;
    std::mutex next_mutex;
    const auto worker = [&] {
        for (;;) {
            std::size_t mine = 0;
            {
                std::lock_guard lock(next_mutex);
                if (next == rows.size()) return;
                mine = next++;
            }
            run_cell(rows[mine]);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < std::min<std::size_t>(workers, rows.size()); ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return rows;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "epsilon,tau_bar,relative_error,mean_consensus_steps,capped_runs,iterations,max_node_err,status\n";
    for (const auto& r : rows) {
        if (r.summary) {
            const auto& s = *r.summary;
            os << fmt::format("{},{},{},{},{},{},{},{}\n", csv_number(r.epsilon), r.tau_bar,
                              csv_number(s.relative_error), csv_number(s.mean_consensus_steps), s.capped_events,
                              s.iterations, csv_number(s.max_node_err), r.status);
        } else {
            os << fmt::format("{},{},,,,,,\"{}\"\n", csv_number(r.epsilon), r.tau_bar, r.status);
        }
    }
}

}  // namespace asyadmm
