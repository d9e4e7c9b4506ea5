#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "asyadmm/cli.hpp"
#include "asyadmm/consensus.hpp"
#include "asyadmm/experiment.hpp"
#include "asyadmm/oracle.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSingular = 3;
constexpr int kExitFailure = 1;

void print_summary(const asyadmm::RunSummary& s) {
    fmt::print("iterations            {}\n", s.iterations);
    fmt::print("final objective       {:.10g}\n", s.final_objective);
    fmt::print("oracle objective      {:.10g}\n", s.oracle_objective);
    fmt::print("relative error        {:.3e}\n", s.relative_error);
    fmt::print("max node error        {:.3e}\n", s.max_node_err);
    fmt::print("consensus steps       {} total, {:.2f} per iteration\n", s.total_consensus_steps,
               s.mean_consensus_steps);
    fmt::print("capped consensus runs {}\n", s.capped_events);
    fmt::print("runtime               {:.3f} s\n", s.runtime_seconds);
}

int run_command(const asyadmm::ExperimentConfig& cfg) {
    const auto summary = asyadmm::run_once(cfg);
    print_summary(summary);
    fmt::print("wrote {}/run.csv, {}/summary.csv, {}/config.txt\n", cfg.out, cfg.out, cfg.out);
    return 0;
}

int sweep_command(const asyadmm::ExperimentConfig& cfg, const std::vector<double>& epsilons,
                  const std::vector<asyadmm::Step>& tau_bars, unsigned threads) {
    const auto rows = asyadmm::sweep(cfg, epsilons, tau_bars, threads);
    std::filesystem::create_directories(cfg.out);
    const auto path = std::filesystem::path(cfg.out) / "sweep.csv";
    auto out = asyadmm::open_output(path);
    asyadmm::write_sweep_csv(out, rows);
    auto config_txt = asyadmm::open_output(std::filesystem::path(cfg.out) / "config.txt");
    config_txt << asyadmm::to_config_text(cfg);

    fmt::print("{:>10} {:>7} {:>14} {:>12} {:>7}\n", "epsilon", "tau_bar", "rel_error", "mean_steps", "capped");
    for (const auto& r : rows) {
        if (r.summary) {
            fmt::print("{:>10g} {:>7} {:>14.4e} {:>12.2f} {:>7}\n", r.epsilon, r.tau_bar, r.summary->relative_error,
                       r.summary->mean_consensus_steps, r.summary->capped_events);
        } else {
            fmt::print("{:>10g} {:>7} {}\n", r.epsilon, r.tau_bar, r.status);
        }
    }
    fmt::print("reference (600 nodes, unspecified topology): steps 9/13/23 at epsilon=0.1 for tau_bar=3/5/10; "
               "1000 (cap) at epsilon=0.01\n");
    fmt::print("wrote {}\n", path.string());
    return 0;
}

int consensus_command(const asyadmm::ExperimentConfig& cfg) {
    const auto ex = asyadmm::build_experiment(cfg);
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<asyadmm::Vec> y0(ex.network.size(), asyadmm::Vec(static_cast<Eigen::Index>(cfg.dim)));
    for (auto& v : y0)
        for (Eigen::Index c = 0; c < v.size(); ++c) v[c] = normal(rng);

    auto delays = cfg.tau_bar == 0 ? asyadmm::DelayModel::zero() : asyadmm::DelayModel::uniform(cfg.tau_bar, cfg.seed);
    std::optional<std::ofstream> trace;
    asyadmm::EventQueue::TraceSink sink;
    if (!cfg.trace.empty()) {
        trace.emplace(asyadmm::open_output(cfg.trace));
        *trace << "k,sender,receiver,kind\n";
        sink = [&trace](const asyadmm::Message& m) { *trace << asyadmm::trace_line(m) << '\n'; };
    }
    const auto res = asyadmm::run_terminating_consensus(ex.network, delays, y0, cfg.epsilon, cfg.step_cap, sink);
    const auto avg = asyadmm::exact_average(y0);
    double worst = 0.0;
    for (const auto& z : res.z) worst = std::max(worst, (z - avg).norm());
    fmt::print("nodes {} diameter {} round length {}\n", ex.network.size(), ex.network.diameter,
               ex.network.round_length(delays.tau_bar()));
    fmt::print("converged {} after {} steps ({} checks)\n", res.converged, res.steps, res.checks.size());
    fmt::print("max distance to exact average {:.3e}\n", worst);
    return res.converged ? 0 : kExitFailure;
}

int graph_command(const asyadmm::ExperimentConfig& cfg, const std::string& path) {
    const auto ex = asyadmm::build_experiment(cfg);
    if (path.empty() || path == "-") {
        asyadmm::write_edge_list(std::cout, ex.network.graph);
    } else {
        asyadmm::save_edge_list(path, ex.network.graph);
    }
    std::cerr << fmt::format("nodes {} edges {} diameter {}\n", ex.network.size(), ex.network.graph.edge_count(),
                             ex.network.diameter);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Asynchronous approximate distributed ADMM over simulated directed networks"};
    app.require_subcommand(1);

    asyadmm::ExperimentConfig cfg;

    auto* run = app.add_subcommand("run", "Run one experiment and write run.csv / summary.csv");
    asyadmm::add_experiment_options(*run, cfg);

    auto* sweep = app.add_subcommand("sweep", "Run an (epsilon x tau_bar) grid and write sweep.csv");
    asyadmm::add_experiment_options(*sweep, cfg);
    std::vector<double> epsilons{0.1, 0.01};
    std::vector<asyadmm::Step> tau_bars{3, 5, 10};
    unsigned threads = 0;
    sweep->add_option("--epsilons", epsilons, "Consensus tolerances")->delimiter(',')->capture_default_str();
    sweep->add_option("--tau-bars", tau_bars, "Delay bounds")->delimiter(',')->capture_default_str();
    sweep->add_option("--threads", threads, "Worker threads (0: hardware)")->capture_default_str();

    auto* consensus = app.add_subcommand("consensus", "Run one terminating ratio consensus on random data");
    asyadmm::add_experiment_options(*consensus, cfg);

    auto* graph = app.add_subcommand("graph", "Write the topology as an edge list");
    asyadmm::add_experiment_options(*graph, cfg);
    std::string graph_out;
    graph->add_option("--edges", graph_out, "Edge-list output path ('-' for stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return run_command(cfg);
        if (sweep->parsed()) return sweep_command(cfg, epsilons, tau_bars, threads);
        if (consensus->parsed()) return consensus_command(cfg);
        if (graph->parsed()) return graph_command(cfg, graph_out);
    } catch (const asyadmm::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const asyadmm::SingularInstance& e) {
        std::cerr << "error: " << e.what() << " (try another seed)\n";
        return kExitSingular;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}
