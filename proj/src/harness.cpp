#include "timebin/harness.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

namespace timebin {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

DensityOperator TrueStateSpec::resolve() const {
    switch (kind) {
        case Kind::MaximallyEntangled:
            return DensityOperator::from_ket(maximally_entangled(4, phi));
        case Kind::Werner:
            return werner_state(p, phi);
        case Kind::File:
            return DensityOperator::from_json(read_text_file(path));
    }
    throw ContractViolation("TrueStateSpec: unknown kind");
}

void ExperimentConfig::validate() const {
    source.validate();
    channel.validate();
    plan.validate();
    calib_a.validate();
    calib_b.validate();
    if (trials < 1) {
        throw ContractViolation("ExperimentConfig: trials must be >= 1");
    }
    if (!(coincidence_window_s > 0.0)) {
        throw ContractViolation("ExperimentConfig: coincidence window must be positive");
    }
    if (true_state.kind == TrueStateSpec::Kind::File && !fs::exists(true_state.path)) {
        throw ContractViolation("ExperimentConfig: true-state file does not exist: " +
                                true_state.path);
    }
}

namespace {

ordered_json calib_to_json(const CalibrationSet& c) {
    return ordered_json{{"eta1_2bit", c.eta1_2bit},
                        {"eta2_2bit", c.eta2_2bit},
                        {"eta1_1bit", c.eta1_1bit},
                        {"eta", c.eta_global}};
}

CalibrationSet calib_from_json(const nlohmann::json& j) {
    CalibrationSet c;
    c.eta1_2bit = j.at("eta1_2bit").get<double>();
    c.eta2_2bit = j.at("eta2_2bit").get<double>();
    c.eta1_1bit = j.at("eta1_1bit").get<double>();
    c.eta_global = j.at("eta").get<double>();
    return c;
}

const char* drift_model_name(DriftModel m) {
    switch (m) {
        case DriftModel::None: return "none";
        case DriftModel::Linear: return "linear";
        case DriftModel::RandomWalk: return "random_walk";
    }
    return "none";
}

DriftModel drift_model_from_name(const std::string& s) {
    if (s == "none") return DriftModel::None;
    if (s == "linear") return DriftModel::Linear;
    if (s == "random_walk") return DriftModel::RandomWalk;
    throw ParseError("unknown drift model: " + s);
}

}  // namespace

std::string ExperimentConfig::to_json() const {
    ordered_json j;
    j["source"] = {{"mean_pairs_per_qudit", source.mean_pairs_per_qudit},
                   {"qudit_rate_hz", source.qudit_rate_hz},
                   {"slot_interval_s", source.slot_interval_s},
                   {"pulse_fwhm_s", source.pulse_fwhm_s}};
    j["channel"] = {{"loss_signal_db", channel.loss_signal_db},
                    {"loss_idler_db", channel.loss_idler_db},
                    {"drift",
                     {{"model", drift_model_name(channel.drift.model)},
                      {"linear_rate", channel.drift.linear_rate},
                      {"step_sigma_s", channel.drift.step_sigma_s}}},
                    {"background_cps", channel.background_cps}};
    auto settings = ordered_json::array();
    for (const auto& [sa, sb] : plan.settings) {
        settings.push_back({{"alice", {{"theta1", sa.theta1}, {"theta2", sa.theta2}}},
                            {"bob", {{"theta1", sb.theta1}, {"theta2", sb.theta2}}}});
    }
    j["plan"] = {{"settings", std::move(settings)},
                 {"duration_per_setting_s", plan.duration_per_setting_s},
                 {"histogram_bin_s", plan.histogram_bin_s},
                 {"seed", plan.seed}};
    j["calib_a"] = calib_to_json(calib_a);
    j["calib_b"] = calib_to_json(calib_b);
    switch (true_state.kind) {
        case TrueStateSpec::Kind::MaximallyEntangled:
            j["true_state"] = {{"kind", "maximally_entangled"}, {"phi", true_state.phi}};
            break;
        case TrueStateSpec::Kind::Werner:
            j["true_state"] = {{"kind", "werner"}, {"p", true_state.p}, {"phi", true_state.phi}};
            break;
        case TrueStateSpec::Kind::File:
            j["true_state"] = {{"kind", "file"}, {"path", true_state.path}};
            break;
    }
    j["coincidence_window_s"] = coincidence_window_s;
    j["trials"] = trials;
    return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("experiment config JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    try {
        const auto& src = j.at("source");
        cfg.source.mean_pairs_per_qudit = src.at("mean_pairs_per_qudit").get<double>();
        cfg.source.qudit_rate_hz = src.at("qudit_rate_hz").get<double>();
        cfg.source.slot_interval_s = src.at("slot_interval_s").get<double>();
        cfg.source.pulse_fwhm_s = src.at("pulse_fwhm_s").get<double>();

        const auto& ch = j.at("channel");
        cfg.channel.loss_signal_db = ch.at("loss_signal_db").get<double>();
        cfg.channel.loss_idler_db = ch.at("loss_idler_db").get<double>();
        cfg.channel.background_cps = ch.value("background_cps", 0.0);
        if (ch.contains("drift")) {
            const auto& d = ch.at("drift");
            cfg.channel.drift.model = drift_model_from_name(d.at("model").get<std::string>());
            cfg.channel.drift.linear_rate = d.value("linear_rate", 0.0);
            cfg.channel.drift.step_sigma_s = d.value("step_sigma_s", 0.0);
        }

        const auto& plan = j.at("plan");
        const auto& settings = plan.at("settings");
        if (settings.is_string() && settings.get<std::string>() == "qst16") {
            cfg.plan.settings = RunPlan::qst16_settings();
        } else {
            for (const auto& s : settings) {
                PhaseSetting sa{s.at("alice").at("theta1").get<double>(),
                                s.at("alice").at("theta2").get<double>()};
                PhaseSetting sb{s.at("bob").at("theta1").get<double>(),
                                s.at("bob").at("theta2").get<double>()};
                cfg.plan.settings.push_back({sa, sb});
            }
        }
        cfg.plan.duration_per_setting_s = plan.at("duration_per_setting_s").get<double>();
        cfg.plan.histogram_bin_s = plan.at("histogram_bin_s").get<double>();
        cfg.plan.seed = plan.at("seed").get<std::uint64_t>();

        cfg.calib_a = calib_from_json(j.at("calib_a"));
        cfg.calib_b = calib_from_json(j.at("calib_b"));

        const auto& ts = j.at("true_state");
        const auto kind = ts.at("kind").get<std::string>();
        if (kind == "maximally_entangled") {
            cfg.true_state.kind = TrueStateSpec::Kind::MaximallyEntangled;
            cfg.true_state.phi = ts.value("phi", 0.0);
        } else if (kind == "werner") {
            cfg.true_state.kind = TrueStateSpec::Kind::Werner;
            cfg.true_state.p = ts.at("p").get<double>();
            cfg.true_state.phi = ts.value("phi", 0.0);
        } else if (kind == "file") {
            cfg.true_state.kind = TrueStateSpec::Kind::File;
            cfg.true_state.path = ts.at("path").get<std::string>();
        } else {
            throw ParseError("unknown true_state kind: " + kind);
        }

        cfg.coincidence_window_s = j.value("coincidence_window_s", 0.33e-9);
        cfg.trials = j.value("trials", 4);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("experiment config JSON: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::paper_100km() {
    ExperimentConfig cfg;
    cfg.source = SourceConfig{};  // 0.03 pairs, 31.25 MHz frames, 1 ns slots, 100 ps FWHM
    cfg.channel.loss_signal_db = 11.8;
    cfg.channel.loss_idler_db = 11.2;
    cfg.plan.settings = RunPlan::qst16_settings();
    cfg.plan.duration_per_setting_s = 900.0;
    cfg.plan.histogram_bin_s = 1e-11;
    cfg.plan.seed = 0;
    cfg.calib_a = CalibrationSet::alice_preset();
    cfg.calib_b = CalibrationSet::bob_preset();
    cfg.true_state.kind = TrueStateSpec::Kind::MaximallyEntangled;
    cfg.true_state.phi = 0.0;
    cfg.coincidence_window_s = 0.33e-9;
    cfg.trials = 4;
    return cfg;
}

TomographyProblem build_problem(const std::vector<std::pair<PhaseSetting, PhaseSetting>>& settings,
                                const std::vector<CoincidenceRecord>& records,
                                const CalibrationSet& calib_a, const CalibrationSet& calib_b) {
    TomographyProblem problem;
    problem.dim = 16;

    // Count table: setting -> cell -> count, zeros imputed.
    std::map<std::pair<int, OutcomeCell>, double> table;
    for (const auto& r : records) {
        if (r.setting_index < 0 || r.setting_index >= static_cast<int>(settings.size())) {
            throw InvalidOutcome("build_problem: record references unknown setting " +
                                 std::to_string(r.setting_index));
        }
        table[{r.setting_index, r.cell}] += static_cast<double>(r.count);
    }

    OutcomeCache cache;
    for (std::size_t i = 0; i < settings.size(); ++i) {
        const auto& ops_a = cache.get(settings[i].first, calib_a);
        const auto& ops_b = cache.get(settings[i].second, calib_b);
        for (const auto& ea : ops_a) {
            for (const auto& eb : ops_b) {
                TomographyCell cell;
                cell.op = joint_operator(ea, eb);
                const auto it =
                    table.find({static_cast<int>(i), OutcomeCell{ea.t, ea.x, eb.t, eb.x}});
                cell.count = (it != table.end()) ? it->second : 0.0;
                problem.cells.push_back(std::move(cell));
            }
        }
    }
    return problem;
}

TomographyProblem ingest_counts(const std::string& csv_path, const CalibrationSet& calib_a,
                                const CalibrationSet& calib_b) {
    const CountsFile file = read_counts_csv(csv_path);
    return build_problem(file.settings, file.records, calib_a, calib_b);
}

namespace {

TrialResult run_trial(const ExperimentConfig& config, const DensityOperator& truth,
                      const RunOptions& options, int trial_index, std::uint64_t base_seed,
                      const std::string& trial_dir) {
    TrialResult trial;
    trial.index = trial_index;
    fs::create_directories(trial_dir);

    const bool drifting = config.channel.drift.model != DriftModel::None;
    SimulateOptions sim_options;
    sim_options.count_scale = options.scale;
    sim_options.emit_events = drifting;
    sim_options.seed_override = derive_seed(base_seed, 7000 + static_cast<std::uint64_t>(trial_index));

    const auto sim = simulate_counts(truth, config.plan, config.source, config.channel,
                                     config.calib_a, config.calib_b, sim_options);

    write_counts_csv(trial_dir + "/counts_raw.csv", config.plan.settings, sim.records);
    write_histograms_csv(trial_dir + "/hist_alice_det1.csv", sim.histograms_alice[0]);
    write_histograms_csv(trial_dir + "/hist_alice_det2.csv", sim.histograms_alice[1]);
    write_histograms_csv(trial_dir + "/hist_bob_det1.csv", sim.histograms_bob[0]);
    write_histograms_csv(trial_dir + "/hist_bob_det2.csv", sim.histograms_bob[1]);

    std::vector<CoincidenceRecord> records;
    if (drifting) {
        // Detector 1 carries the taller comb; use it for the per-receiver
        // offset series.
        const auto offsets_a = track_run(sim.histograms_alice[0], 1,
                                         config.source.slot_interval_s,
                                         config.coincidence_window_s);
        const auto offsets_b = track_run(sim.histograms_bob[0], 1,
                                         config.source.slot_interval_s,
                                         config.coincidence_window_s);
        write_offsets_csv(trial_dir + "/offsets_alice.csv", offsets_a);
        write_offsets_csv(trial_dir + "/offsets_bob.csv", offsets_b);
        records = realign(sim.events, offsets_a, offsets_b, config.source.slot_interval_s,
                          config.coincidence_window_s, &trial.realign_stats);
        write_counts_csv(trial_dir + "/counts_realigned.csv", config.plan.settings, records);
    } else {
        records = sim.records;
    }

    for (const auto& r : records) trial.total_counts += r.count;

    auto problem = build_problem(config.plan.settings, records, config.calib_a, config.calib_b);
    trial.mle = mle_reconstruct(problem, options.mle);
    write_text_file(trial_dir + "/rho.json", trial.mle.rho.to_json());

    ordered_json run_report;
    run_report["iterations"] = trial.mle.iterations;
    run_report["log_likelihood"] = trial.mle.log_likelihood;
    run_report["converged"] = trial.mle.converged;
    run_report["rate_scale"] = trial.mle.rate_scale;
    run_report["conditioning_warning"] = trial.mle.conditioning_warning;
    run_report["total_counts"] = trial.total_counts;
    run_report["realigned_accepted"] = trial.realign_stats.accepted;
    run_report["realigned_discarded"] = trial.realign_stats.discarded;
    write_text_file(trial_dir + "/run_report.json", run_report.dump(2));

    trial.merits = compute_merits(trial.mle.rho);
    write_text_file(trial_dir + "/merits.json", trial.merits.to_json());
    return trial;
}

void accumulate_metric(std::map<std::string, std::vector<double>>& samples,
                       const TrialResult& trial) {
    samples["fidelity"].push_back(trial.merits.fidelity);
    samples["trace_distance"].push_back(trial.merits.trace_distance);
    samples["linear_entropy"].push_back(trial.merits.linear_entropy);
    samples["von_neumann_entropy"].push_back(trial.merits.von_neumann_entropy);
    samples["conditional_entropy_signal"].push_back(trial.merits.conditional_entropy_signal);
    samples["conditional_entropy_idler"].push_back(trial.merits.conditional_entropy_idler);
    samples["coherent_information"].push_back(trial.merits.coherent_information);
    samples["secure_key_bound_bits"].push_back(trial.merits.secure_key_bound_bits);
    samples["optimal_phi"].push_back(trial.merits.optimal_phi);
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    return {mean, std::sqrt(var)};
}

}  // namespace

std::string ExperimentSummary::to_json() const {
    ordered_json j;
    j["trials"] = trials;
    auto per = ordered_json::array();
    for (const auto& t : per_trial) {
        ordered_json tj;
        tj["index"] = t.index;
        tj["failed"] = t.failed;
        if (t.failed) {
            tj["error"] = t.error;
        } else {
            tj["converged"] = t.mle.converged;
            tj["iterations"] = t.mle.iterations;
            tj["total_counts"] = t.total_counts;
            tj["merits"] = nlohmann::ordered_json::parse(t.merits.to_json());
        }
        per.push_back(std::move(tj));
    }
    j["per_trial"] = std::move(per);
    ordered_json m;
    for (const auto& [name, ms] : metrics) {
        m[name] = {{"mean", ms.first}, {"std", ms.second}};
    }
    j["metrics"] = std::move(m);
    return j.dump(2);
}

ExperimentSummary run_experiment(const ExperimentConfig& config, const std::string& out_dir,
                                 const RunOptions& options) {
    config.validate();
    fs::create_directories(out_dir);
    const DensityOperator truth = config.true_state.resolve();
    const std::uint64_t base_seed = options.seed_override.value_or(config.plan.seed);

    write_text_file(out_dir + "/config.json", config.to_json());

    ExperimentSummary summary;
    summary.trials = config.trials;
    summary.per_trial.resize(static_cast<std::size_t>(config.trials));

    auto execute = [&](int k) {
        const std::string trial_dir = out_dir + "/trial_" + std::to_string(k);
        try {
            summary.per_trial[static_cast<std::size_t>(k)] =
                run_trial(config, truth, options, k, base_seed, trial_dir);
        } catch (const std::exception& e) {
            TrialResult failed;
            failed.index = k;
            failed.failed = true;
            failed.error = e.what();
            summary.per_trial[static_cast<std::size_t>(k)] = failed;
        }
    };

    if (options.parallel_trials && config.trials > 1) {
        std::vector<std::future<void>> futures;
        futures.reserve(static_cast<std::size_t>(config.trials));
        for (int k = 0; k < config.trials; ++k) {
            futures.push_back(std::async(std::launch::async, execute, k));
        }
        for (auto& f : futures) f.get();
    } else {
        for (int k = 0; k < config.trials; ++k) execute(k);
    }

    std::map<std::string, std::vector<double>> samples;
    for (const auto& t : summary.per_trial) {
        if (!t.failed) accumulate_metric(samples, t);
    }
    for (const auto& [name, values] : samples) {
        summary.metrics[name] = mean_std(values);
    }

    write_text_file(out_dir + "/summary.json", summary.to_json());
    return summary;
}

namespace {

std::string format_fixed(double v, int precision) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(precision) << v;
    return ss.str();
}

std::string merit_table_text(const MeritReport& m) {
    std::ostringstream ss;
    ss << "Figures of merit (target |phi(" << format_fixed(m.optimal_phi, 4) << ")>):\n";
    ss << "  Fidelity                    " << format_fixed(m.fidelity, 4) << "\n";
    ss << "  Trace distance              " << format_fixed(m.trace_distance, 4) << "\n";
    ss << "  Linear entropy              " << format_fixed(m.linear_entropy, 4) << "\n";
    ss << "  Von Neumann entropy (bits)  " << format_fixed(m.von_neumann_entropy, 4) << "\n";
    ss << "  Conditional entropy |s      " << format_fixed(m.conditional_entropy_signal, 4)
       << "\n";
    ss << "  Conditional entropy |i      " << format_fixed(m.conditional_entropy_idler, 4)
       << "\n";
    ss << "  Coherent information (bits) " << format_fixed(m.coherent_information, 4) << "\n";
    ss << "  Secure key bound (bits)     " << format_fixed(m.secure_key_bound_bits, 4) << "\n";
    return ss.str();
}

}  // namespace

std::string render_report_text(const DensityOperator& rho, const MeritReport& merits) {
    const DensityOperator rotated = display_rotate(rho, merits.optimal_phi);
    std::ostringstream ss;
    ss << merit_table_text(merits) << "\n";
    const char* parts[2] = {"Re(rho), phase-rotated for display", "Im(rho)"};
    for (int part = 0; part < 2; ++part) {
        ss << parts[part] << ":\n";
        for (int r = 0; r < 16; ++r) {
            for (int c = 0; c < 16; ++c) {
                const auto v = rotated.matrix()(r, c);
                ss << std::setw(7) << format_fixed(part == 0 ? v.real() : v.imag(), 3);
            }
            ss << "\n";
        }
        ss << "\n";
    }
    return ss.str();
}

std::string render_report_html(const DensityOperator& rho, const MeritReport& merits) {
    const DensityOperator rotated = display_rotate(rho, merits.optimal_phi);
    std::ostringstream ss;
    ss << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">"
       << "<title>State report</title><style>\n"
       << "body{font-family:sans-serif;margin:2em}\n"
       << "table.merits td{padding:2px 12px}\n"
       << ".grid{display:grid;grid-template-columns:repeat(16,22px);gap:1px;margin:1em 0}\n"
       << ".cell{height:22px;position:relative}\n"
       << ".bar{position:absolute;bottom:0;width:100%}\n"
       << "</style></head><body>\n<h1>Reconstructed state</h1>\n";
    ss << "<h2>Figures of merit</h2>\n<table class=\"merits\">\n";
    auto row = [&](const char* name, double v) {
        ss << "<tr><td>" << name << "</td><td>" << format_fixed(v, 4) << "</td></tr>\n";
    };
    row("Fidelity", merits.fidelity);
    row("Trace distance", merits.trace_distance);
    row("Linear entropy", merits.linear_entropy);
    row("Von Neumann entropy (bits)", merits.von_neumann_entropy);
    row("Conditional entropy | signal (bits)", merits.conditional_entropy_signal);
    row("Conditional entropy | idler (bits)", merits.conditional_entropy_idler);
    row("Coherent information (bits)", merits.coherent_information);
    row("Secure key bound (bits)", merits.secure_key_bound_bits);
    row("Display phase (rad)", merits.optimal_phi);
    ss << "</table>\n";
    const char* titles[2] = {"Real part (phase-rotated)", "Imaginary part"};
    for (int part = 0; part < 2; ++part) {
        ss << "<h2>" << titles[part] << "</h2>\n<div class=\"grid\">\n";
        for (int r = 0; r < 16; ++r) {
            for (int c = 0; c < 16; ++c) {
                const auto z = rotated.matrix()(r, c);
                const double v = (part == 0) ? z.real() : z.imag();
                const double h = std::min(1.0, std::abs(v) / 0.25) * 100.0;
                const char* color = (v >= 0.0) ? "#4a78c8" : "#c85a4a";
                ss << "<div class=\"cell\" title=\"(" << r << "," << c << ") "
                   << format_fixed(v, 4) << "\"><div class=\"bar\" style=\"height:"
                   << format_fixed(h, 1) << "%;background:" << color << "\"></div></div>\n";
            }
        }
        ss << "</div>\n";
    }
    ss << "</body></html>\n";
    return ss.str();
}

void write_report(const DensityOperator& rho, const std::string& out_path) {
    const MeritReport merits = compute_merits(rho);
    const bool html = out_path.size() >= 5 && out_path.substr(out_path.size() - 5) == ".html";
    write_text_file(out_path, html ? render_report_html(rho, merits)
                                   : render_report_text(rho, merits));
}

}  // namespace timebin
