#pragma once

#include <CLI11.hpp>

#include <string>

#include "asyadmm/experiment.hpp"

namespace asyadmm {

/// Registers every ExperimentConfig field as `--<key>`, plus `--config` for
/// a flat key=value file using the same keys. Flags override the file.
inline void add_experiment_options(CLI::App& app, ExperimentConfig& cfg) {
    app.set_config("--config", "", "Read options from a key=value file");
    app.add_option("--topology", cfg.topology, "'random' or 'file:<edge-list path>'")->capture_default_str();
    app.add_option("--nodes", cfg.nodes, "Node count for random topologies")->capture_default_str();
    app.add_option("--edge-prob", cfg.edge_prob, "Extra-edge probability for random topologies")
        ->capture_default_str();
    app.add_option("--dim", cfg.dim, "Decision variable dimension p")->capture_default_str();
    app.add_option("--rows", cfg.rows, "Rows q of each A_i (0: square)")->capture_default_str();
    app.add_option("--instance", cfg.instance, "Least-squares instance file (default: generate)");
    app.add_option("--epsilon", cfg.epsilon, "Consensus tolerance")->capture_default_str();
    app.add_option("--tau-bar", cfg.tau_bar, "Maximum message delay in steps")->capture_default_str();
    app.add_option("--rho", cfg.rho, "ADMM penalty")->capture_default_str();
    app.add_option("--kmax", cfg.kmax, "Maximum ADMM iterations")->capture_default_str();
    app.add_option("--eps-abs", cfg.eps_abs, "Absolute stopping tolerance")->capture_default_str();
    app.add_option("--eps-rel", cfg.eps_rel, "Relative stopping tolerance")->capture_default_str();
    app.add_option("--step-cap", cfg.step_cap, "Consensus step cap per ADMM iteration")->capture_default_str();
    app.add_option("--seed", cfg.seed, "Run seed (topology, instance, init, delays)")->capture_default_str();
    app.add_option("--mode", cfg.mode, "asyadmm | sync_baseline")->capture_default_str();
    app.add_option("--stop", cfg.stop, "Apply the primal/dual stopping criterion")->capture_default_str();
    app.add_option("--out", cfg.out, "Output directory")->capture_default_str();
    app.add_option("--trace", cfg.trace, "Write one line per message delivery to this file");
}

}  // namespace asyadmm
