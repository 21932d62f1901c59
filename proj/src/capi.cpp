#include "timebin.h"

#include <cmath>
#include <cstring>
#include <exception>
#include <filesystem>
#include <string>

#include "timebin/harness.hpp"

namespace {

thread_local std::string g_last_error;

tb_status fail(tb_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

tb_status from_exception() {
    try {
        throw;
    } catch (const timebin::ParseError& e) {
        return fail(TB_ERR_DATA, e.what());
    } catch (const timebin::InsufficientData& e) {
        return fail(TB_ERR_DATA, e.what());
    } catch (const timebin::InvalidOutcome& e) {
        return fail(TB_ERR_DATA, e.what());
    } catch (const timebin::UnalignableEpoch& e) {
        return fail(TB_ERR_DATA, e.what());
    } catch (const timebin::NotConverged& e) {
        return fail(TB_ERR_NONCONVERGED, e.what());
    } catch (const timebin::Error& e) {
        return fail(TB_ERR_USAGE, e.what());
    } catch (const std::exception& e) {
        return fail(TB_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(TB_ERR_INTERNAL, "unknown error");
    }
}

timebin::ExperimentConfig load_config(const char* config_path) {
    if (std::strcmp(config_path, "paper-100km") == 0) {
        return timebin::ExperimentConfig::paper_100km();
    }
    return timebin::ExperimentConfig::from_json(timebin::read_text_file(config_path));
}

}  // namespace

struct tb_density {
    timebin::DensityOperator rho;
};

extern "C" {

const char* tb_last_error(void) { return g_last_error.c_str(); }

const char* tb_version(void) { return "timebin 1.0.0"; }

tb_status tb_density_load(const char* path, tb_density** out) {
    if (path == nullptr || out == nullptr) return fail(TB_ERR_USAGE, "null argument");
    try {
        auto rho = timebin::DensityOperator::from_json(timebin::read_text_file(path));
        *out = new tb_density{std::move(rho)};
        return TB_OK;
    } catch (...) {
        return from_exception();
    }
}

tb_status tb_density_save(const tb_density* rho, const char* path) {
    if (rho == nullptr || path == nullptr) return fail(TB_ERR_USAGE, "null argument");
    try {
        timebin::write_text_file(path, rho->rho.to_json());
        return TB_OK;
    } catch (...) {
        return from_exception();
    }
}

tb_status tb_density_maximally_entangled(int d, double phi, tb_density** out) {
    if (out == nullptr) return fail(TB_ERR_USAGE, "null argument");
    try {
        *out = new tb_density{
            timebin::DensityOperator::from_ket(timebin::maximally_entangled(d, phi))};
        return TB_OK;
    } catch (...) {
        return from_exception();
    }
}

tb_status tb_density_werner(double p, double phi, tb_density** out) {
    if (out == nullptr) return fail(TB_ERR_USAGE, "null argument");
    try {
        *out = new tb_density{timebin::werner_state(p, phi)};
        return TB_OK;
    } catch (...) {
        return from_exception();
    }
}

int tb_density_dim(const tb_density* rho) { return rho == nullptr ? 0 : rho->rho.dim(); }

void tb_density_free(tb_density* rho) { delete rho; }

tb_status tb_metrics_compute(const tb_density* rho, double phi, tb_merit* out) {
    if (rho == nullptr || out == nullptr) return fail(TB_ERR_USAGE, "null argument");
    try {
        const timebin::MeritReport m = std::isnan(phi)
                                           ? timebin::compute_merits(rho->rho)
                                           : timebin::compute_merits(rho->rho, phi);
        out->fidelity = m.fidelity;
        out->trace_distance = m.trace_distance;
        out->linear_entropy = m.linear_entropy;
        out->von_neumann_entropy = m.von_neumann_entropy;
        out->conditional_entropy_signal = m.conditional_entropy_signal;
        out->conditional_entropy_idler = m.conditional_entropy_idler;
        out->coherent_information = m.coherent_information;
        out->secure_key_bound_bits = m.secure_key_bound_bits;
        out->optimal_phi = m.optimal_phi;
        return TB_OK;
    } catch (...) {
        return from_exception();
    }
}

tb_status tb_metrics_write_json(const tb_merit* merit, const char* path) {
    if (merit == nullptr || path == nullptr) return fail(TB_ERR_USAGE, "null argument");
    try {
        timebin::MeritReport m;
        m.fidelity = merit->fidelity;
        m.trace_distance = merit->trace_distance;
        m.linear_entropy = merit->linear_entropy;
        m.von_neumann_entropy = merit->von_neumann_entropy;
        m.conditional_entropy_signal = merit->conditional_entropy_signal;
        m.conditional_entropy_idler = merit->conditional_entropy_idler;
        m.coherent_information = merit->coherent_information;
        m.secure_key_bound_bits = merit->secure_key_bound_bits;
        m.optimal_phi = merit->optimal_phi;
        timebin::write_text_file(path, m.to_json());
        return TB_OK;
    } catch (...) {
        return from_exception();
    }
}

tb_status tb_report_write(const tb_density* rho, const char* path) {
    if (rho == nullptr || path == nullptr) return fail(TB_ERR_USAGE, "null argument");
    try {
        timebin::write_report(rho->rho, path);
        return TB_OK;
    } catch (...) {
        return from_exception();
    }
}

tb_status tb_simulate(const char* config_path, const char* out_dir, double scale, int64_t seed) {
    if (config_path == nullptr || out_dir == nullptr) {
        return fail(TB_ERR_USAGE, "null argument");
    }
    try {
        auto config = load_config(config_path);
        std::filesystem::create_directories(out_dir);
        const std::string dir(out_dir);

        timebin::SimulateOptions options;
        options.count_scale = scale;
        options.emit_events = config.channel.drift.model != timebin::DriftModel::None;
        if (seed >= 0) options.seed_override = static_cast<std::uint64_t>(seed);

        const auto truth = config.true_state.resolve();
        const auto sim = timebin::simulate_counts(truth, config.plan, config.source,
                                                  config.channel, config.calib_a,
                                                  config.calib_b, options);
        timebin::write_counts_csv(dir + "/counts_raw.csv", config.plan.settings, sim.records);
        timebin::write_histograms_csv(dir + "/hist_alice_det1.csv", sim.histograms_alice[0]);
        timebin::write_histograms_csv(dir + "/hist_alice_det2.csv", sim.histograms_alice[1]);
        timebin::write_histograms_csv(dir + "/hist_bob_det1.csv", sim.histograms_bob[0]);
        timebin::write_histograms_csv(dir + "/hist_bob_det2.csv", sim.histograms_bob[1]);
        if (options.emit_events) {
            timebin::write_events_csv(dir + "/events.csv", sim.events);
        }
        return TB_OK;
    } catch (...) {
        return from_exception();
    }
}

tb_status tb_track(const char* histograms_csv, int detector, double slot_interval_ns,
                   double window_ns, const char* out_csv) {
    if (histograms_csv == nullptr || out_csv == nullptr) {
        return fail(TB_ERR_USAGE, "null argument");
    }
    try {
        const auto histograms = timebin::read_histograms_csv(histograms_csv);
        const auto offsets = timebin::track_run(histograms, detector, slot_interval_ns * 1e-9,
                                                window_ns * 1e-9);
        timebin::write_offsets_csv(out_csv, offsets);
        return TB_OK;
    } catch (...) {
        return from_exception();
    }
}

tb_status tb_realign(const char* events_csv, const char* offsets_alice_csv,
                     const char* offsets_bob_csv, const char* counts_template_csv,
                     double slot_interval_ns, double window_ns, const char* out_counts_csv) {
    if (events_csv == nullptr || offsets_alice_csv == nullptr || offsets_bob_csv == nullptr ||
        counts_template_csv == nullptr || out_counts_csv == nullptr) {
        return fail(TB_ERR_USAGE, "null argument");
    }
    try {
        const auto events = timebin::read_events_csv(events_csv);
        const auto offsets_a = timebin::read_offsets_csv(offsets_alice_csv);
        const auto offsets_b = timebin::read_offsets_csv(offsets_bob_csv);
        // Settings (the theta columns) come from the raw counts file.
        const auto template_file = timebin::read_counts_csv(counts_template_csv);
        const auto records = timebin::realign(events, offsets_a, offsets_b,
                                              slot_interval_ns * 1e-9, window_ns * 1e-9);
        timebin::write_counts_csv(out_counts_csv, template_file.settings, records);
        return TB_OK;
    } catch (...) {
        return from_exception();
    }
}

tb_status tb_reconstruct(const char* counts_csv, const char* calib_a_json,
                         const char* calib_b_json, const char* rho_out_json,
                         const char* report_out_json, int max_iterations, double tolerance) {
    if (counts_csv == nullptr || calib_a_json == nullptr || calib_b_json == nullptr ||
        rho_out_json == nullptr) {
        return fail(TB_ERR_USAGE, "null argument");
    }
    try {
        const auto calib_a =
            timebin::CalibrationSet::from_json(timebin::read_text_file(calib_a_json));
        const auto calib_b =
            timebin::CalibrationSet::from_json(timebin::read_text_file(calib_b_json));
        auto problem = timebin::ingest_counts(counts_csv, calib_a, calib_b);

        timebin::MleOptions options;
        options.warm_start = true;
        if (max_iterations > 0) options.max_iterations = max_iterations;
        if (tolerance > 0.0) options.tolerance = tolerance;
        const auto result = timebin::mle_reconstruct(problem, options);

        timebin::write_text_file(rho_out_json, result.rho.to_json());
        if (report_out_json != nullptr) {
            std::string report = "{\n  \"iterations\": " + std::to_string(result.iterations) +
                                 ",\n  \"log_likelihood\": " +
                                 std::to_string(result.log_likelihood) +
                                 ",\n  \"converged\": " +
                                 (result.converged ? "true" : "false") +
                                 ",\n  \"rate_scale\": " + std::to_string(result.rate_scale) +
                                 ",\n  \"conditioning_warning\": " +
                                 (result.conditioning_warning ? "true" : "false") + "\n}\n";
            timebin::write_text_file(report_out_json, report);
        }
        if (!result.converged) {
            return fail(TB_ERR_NONCONVERGED,
                        "MLE stopped before convergence; best iterate written");
        }
        return TB_OK;
    } catch (...) {
        return from_exception();
    }
}

tb_status tb_run(const char* config_path, const char* out_dir, double scale, int64_t seed,
                 int parallel_trials) {
    if (config_path == nullptr || out_dir == nullptr) {
        return fail(TB_ERR_USAGE, "null argument");
    }
    try {
        auto config = load_config(config_path);
        timebin::RunOptions options;
        options.scale = scale;
        options.parallel_trials = parallel_trials != 0;
        if (seed >= 0) options.seed_override = static_cast<std::uint64_t>(seed);
        const auto summary = timebin::run_experiment(config, out_dir, options);
        for (const auto& trial : summary.per_trial) {
            if (trial.failed) {
                return fail(TB_ERR_DATA, "trial " + std::to_string(trial.index) +
                                             " failed: " + trial.error);
            }
            if (!trial.mle.converged) {
                return fail(TB_ERR_NONCONVERGED,
                            "trial " + std::to_string(trial.index) + " did not converge");
            }
        }
        return TB_OK;
    } catch (...) {
        return from_exception();
    }
}

}  // extern "C"
