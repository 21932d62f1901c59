// Command-line front end. Links only the public C API.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>

#include "timebin.h"

namespace {

int exit_code(tb_status status) {
    switch (status) {
        case TB_OK: return 0;
        case TB_ERR_USAGE: return 1;
        case TB_ERR_DATA: return 2;
        case TB_ERR_NONCONVERGED: return 3;
        case TB_ERR_INTERNAL: return 2;
    }
    return 2;
}

int finish(tb_status status) {
    if (status != TB_OK) {
        std::fprintf(stderr, "error: %s\n", tb_last_error());
    }
    return exit_code(status);
}

void print_merits(const tb_merit& m) {
    std::printf("{\n");
    std::printf("  \"fidelity\": %.12g,\n", m.fidelity);
    std::printf("  \"trace_distance\": %.12g,\n", m.trace_distance);
    std::printf("  \"linear_entropy\": %.12g,\n", m.linear_entropy);
    std::printf("  \"von_neumann_entropy\": %.12g,\n", m.von_neumann_entropy);
    std::printf("  \"conditional_entropy_signal\": %.12g,\n", m.conditional_entropy_signal);
    std::printf("  \"conditional_entropy_idler\": %.12g,\n", m.conditional_entropy_idler);
    std::printf("  \"coherent_information\": %.12g,\n", m.coherent_information);
    std::printf("  \"secure_key_bound_bits\": %.12g,\n", m.secure_key_bound_bits);
    std::printf("  \"optimal_phi\": %.12g\n", m.optimal_phi);
    std::printf("}\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-bin entangled qudit toolkit: simulation, drift tracking, "
                 "tomography, and entanglement metrics"};
    app.require_subcommand(1);

    // simulate
    std::string sim_config;
    std::string sim_out = "out";
    double sim_scale = 1.0;
    std::int64_t sim_seed = -1;
    auto* simulate = app.add_subcommand("simulate", "Generate counts and histograms from a config");
    simulate->add_option("--config", sim_config, "Experiment config JSON, or 'paper-100km'")
        ->required();
    simulate->add_option("--out", sim_out, "Output directory");
    simulate->add_option("--scale", sim_scale, "Count-volume scale factor");
    simulate->add_option("--seed", sim_seed, "Seed override (negative keeps the config seed)");

    // track
    std::string track_hist;
    int track_detector = 1;
    double track_slot_ns = 1.0;
    double track_window_ns = 0.33;
    std::string track_out = "offsets.csv";
    auto* track = app.add_subcommand("track", "Estimate first-slot offsets per epoch");
    track->add_option("--histograms", track_hist, "Histogram CSV")->required();
    track->add_option("--detector", track_detector, "Detector index (1 or 2)")
        ->check(CLI::IsMember({1, 2}));
    track->add_option("--slot-interval-ns", track_slot_ns, "Slot interval T in ns");
    track->add_option("--window-ns", track_window_ns, "Coincidence window in ns");
    track->add_option("--out", track_out, "Output offsets CSV");

    // realign
    std::string re_events;
    std::string re_offsets_a;
    std::string re_offsets_b;
    std::string re_template;
    double re_slot_ns = 1.0;
    double re_window_ns = 0.33;
    std::string re_out = "counts_realigned.csv";
    auto* realign = app.add_subcommand("realign", "Re-bin timed events using offset estimates");
    realign->add_option("--events", re_events, "Events CSV")->required();
    realign->add_option("--offsets-alice", re_offsets_a, "Alice offsets CSV")->required();
    realign->add_option("--offsets-bob", re_offsets_b, "Bob offsets CSV")->required();
    realign->add_option("--counts-template", re_template,
                        "Raw counts CSV supplying the setting table")->required();
    realign->add_option("--slot-interval-ns", re_slot_ns, "Slot interval T in ns");
    realign->add_option("--window-ns", re_window_ns, "Coincidence window in ns");
    realign->add_option("--out", re_out, "Output counts CSV");

    // reconstruct
    std::string rc_counts;
    std::string rc_calib_a;
    std::string rc_calib_b;
    std::string rc_out = "rho.json";
    std::string rc_report;
    int rc_max_iter = 5000;
    double rc_tol = 1e-9;
    auto* reconstruct = app.add_subcommand("reconstruct", "Maximum-likelihood state tomography");
    reconstruct->add_option("--counts", rc_counts, "Coincidence counts CSV")->required();
    reconstruct->add_option("--calib-a", rc_calib_a, "Alice calibration JSON")->required();
    reconstruct->add_option("--calib-b", rc_calib_b, "Bob calibration JSON")->required();
    reconstruct->add_option("--out", rc_out, "Output density-operator JSON");
    reconstruct->add_option("--report", rc_report, "Run-report JSON");
    reconstruct->add_option("--max-iter", rc_max_iter, "Iteration cap");
    reconstruct->add_option("--tol", rc_tol, "Relative likelihood tolerance");

    // metrics
    std::string me_rho;
    std::string me_phi = "auto";
    std::string me_out;
    auto* metrics = app.add_subcommand("metrics", "Figures of merit for a density operator");
    metrics->add_option("--rho", me_rho, "Density-operator JSON")->required();
    metrics->add_option("--phi", me_phi, "Target phase in radians, or 'auto'");
    metrics->add_option("--out", me_out, "Write the report JSON here instead of stdout");

    // report
    std::string rp_rho;
    std::string rp_out = "report.txt";
    auto* report = app.add_subcommand("report", "Merit table plus state rendering (txt or html)");
    report->add_option("--rho", rp_rho, "Density-operator JSON")->required();
    report->add_option("--out", rp_out, "Output path (.txt or .html)");

    // run
    std::string run_config;
    std::string run_preset;
    std::string run_out = "out";
    double run_scale = 1.0;
    std::int64_t run_seed = -1;
    bool run_parallel = false;
    auto* run = app.add_subcommand("run", "End-to-end: simulate, track, realign, reconstruct, score");
    auto* run_config_opt = run->add_option("--config", run_config, "Experiment config JSON");
    run->add_option("--preset", run_preset, "Built-in preset name (paper-100km)")
        ->excludes(run_config_opt);
    run->add_option("--out", run_out, "Output directory");
    run->add_option("--scale", run_scale, "Count-volume scale factor");
    run->add_option("--seed", run_seed, "Seed override (negative keeps the config seed)");
    run->add_flag("--parallel-trials", run_parallel, "Run trials concurrently");

    CLI11_PARSE(app, argc, argv);

    if (simulate->parsed()) {
        return finish(tb_simulate(sim_config.c_str(), sim_out.c_str(), sim_scale, sim_seed));
    }
    if (track->parsed()) {
        return finish(tb_track(track_hist.c_str(), track_detector, track_slot_ns,
                               track_window_ns, track_out.c_str()));
    }
    if (realign->parsed()) {
        return finish(tb_realign(re_events.c_str(), re_offsets_a.c_str(), re_offsets_b.c_str(),
                                 re_template.c_str(), re_slot_ns, re_window_ns, re_out.c_str()));
    }
    if (reconstruct->parsed()) {
        return finish(tb_reconstruct(rc_counts.c_str(), rc_calib_a.c_str(), rc_calib_b.c_str(),
                                     rc_out.c_str(),
                                     rc_report.empty() ? nullptr : rc_report.c_str(),
                                     rc_max_iter, rc_tol));
    }
    if (metrics->parsed()) {
        tb_density* rho = nullptr;
        tb_status status = tb_density_load(me_rho.c_str(), &rho);
        if (status != TB_OK) return finish(status);
        double phi = NAN;
        if (me_phi != "auto") {
            try {
                phi = std::stod(me_phi);
            } catch (const std::exception&) {
                tb_density_free(rho);
                std::fprintf(stderr, "error: --phi expects a number or 'auto'\n");
                return 1;
            }
        }
        tb_merit merit{};
        status = tb_metrics_compute(rho, phi, &merit);
        if (status == TB_OK && !me_out.empty()) {
            status = tb_metrics_write_json(&merit, me_out.c_str());
        } else if (status == TB_OK) {
            print_merits(merit);
        }
        tb_density_free(rho);
        return finish(status);
    }
    if (report->parsed()) {
        tb_density* rho = nullptr;
        tb_status status = tb_density_load(rp_rho.c_str(), &rho);
        if (status != TB_OK) return finish(status);
        status = tb_report_write(rho, rp_out.c_str());
        tb_density_free(rho);
        return finish(status);
    }
    if (run->parsed()) {
        if (run_config.empty() && run_preset.empty()) {
            std::fprintf(stderr, "error: run requires --config or --preset\n");
            return 1;
        }
        const std::string& config = run_config.empty() ? run_preset : run_config;
        return finish(tb_run(config.c_str(), run_out.c_str(), run_scale, run_seed,
                             run_parallel ? 1 : 0));
    }
    return 1;
}
