#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "timebin/harness.hpp"

using namespace timebin;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

fs::path temp_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("timebin_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ExperimentConfig small_lossless_config() {
    ExperimentConfig config;
    config.channel.loss_signal_db = 0.0;
    config.channel.loss_idler_db = 0.0;
    config.plan.settings = RunPlan::qst16_settings();
    config.plan.duration_per_setting_s = 1e6 / config.source.qudit_rate_hz;  // 1e6 frames
    config.plan.seed = 11;
    config.trials = 1;
    return config;
}

}  // namespace

TEST_CASE("experiment config JSON round trip") {
    const auto config = ExperimentConfig::paper_100km();
    const auto restored = ExperimentConfig::from_json(config.to_json());
    CHECK(restored.source.mean_pairs_per_qudit == doctest::Approx(0.03));
    CHECK(restored.channel.loss_signal_db == doctest::Approx(11.8));
    CHECK(restored.channel.loss_idler_db == doctest::Approx(11.2));
    CHECK(restored.plan.settings.size() == 16);
    CHECK(restored.plan.duration_per_setting_s == doctest::Approx(900.0));
    CHECK(restored.calib_a.eta_global == doctest::Approx(0.8507));
    CHECK(restored.calib_b.eta_global == doctest::Approx(0.4812));
    CHECK(restored.coincidence_window_s == doctest::Approx(0.33e-9));
    CHECK(restored.trials == 4);
    CHECK(restored.to_json() == config.to_json());

    ExperimentConfig bad = config;
    bad.trials = 0;
    CHECK_THROWS_AS(bad.validate(), ContractViolation);
}

TEST_CASE("true state resolution") {
    TrueStateSpec spec;
    spec.kind = TrueStateSpec::Kind::Werner;
    spec.p = 0.5;
    spec.phi = 0.0;
    CHECK((spec.resolve().matrix() - werner_state(0.5, 0.0).matrix()).cwiseAbs().maxCoeff() <
          1e-15);
    spec.kind = TrueStateSpec::Kind::File;
    spec.path = (temp_dir("state") / "rho.json").string();
    write_text_file(spec.path, DensityOperator::maximally_mixed(16).to_json());
    CHECK(spec.resolve().dim() == 16);
}

TEST_CASE("counts CSV round trip and ingestion") {
    const auto dir = temp_dir("io");
    const auto config = small_lossless_config();
    const auto rho = config.true_state.resolve();
    SimulateOptions options;
    options.emit_histograms = false;
    const auto sim = simulate_counts(rho, config.plan, config.source, config.channel,
                                     config.calib_a, config.calib_b, options);

    const auto counts_path = (dir / "counts.csv").string();
    write_counts_csv(counts_path, config.plan.settings, sim.records);

    SUBCASE("read back is identical") {
        const auto file = read_counts_csv(counts_path);
        REQUIRE(file.settings.size() == 16);
        REQUIRE(file.records.size() == sim.records.size());
        for (std::size_t i = 0; i < sim.records.size(); ++i) {
            CHECK(file.records[i].setting_index == sim.records[i].setting_index);
            CHECK(file.records[i].cell == sim.records[i].cell);
            CHECK(file.records[i].count == sim.records[i].count);
        }
        for (std::size_t s = 0; s < 16; ++s) {
            CHECK(file.settings[s].first == config.plan.settings[s].first);
            CHECK(file.settings[s].second == config.plan.settings[s].second);
        }
    }
    SUBCASE("ingest builds 16 x 169 cells with matching totals") {
        const auto problem = ingest_counts(counts_path, config.calib_a, config.calib_b);
        CHECK(problem.cells.size() == 16 * 169);
        double total = 0.0;
        for (const auto& rec : sim.records) total += static_cast<double>(rec.count);
        CHECK(problem.total_counts() == doctest::Approx(total));
    }
    SUBCASE("sparse files impute missing cells as zeros") {
        // One row per setting: the remaining 168 cells per setting must be
        // imputed as zero counts.
        std::vector<CoincidenceRecord> sparse;
        for (std::size_t i = 0; i < 16; ++i) {
            sparse.push_back(sim.records[i * 169]);
        }
        const auto sparse_path = (dir / "sparse.csv").string();
        write_counts_csv(sparse_path, config.plan.settings, sparse);
        const auto problem = ingest_counts(sparse_path, config.calib_a, config.calib_b);
        CHECK(problem.cells.size() == 16 * 169);
    }
}

TEST_CASE("malformed counts files") {
    const auto dir = temp_dir("bad_csv");
    const std::string header =
        "setting,theta1_a,theta2_a,theta1_b,theta2_b,t_a,x_a,t_b,x_b,count\n";
    SUBCASE("phase outside the protocol set") {
        const auto path = (dir / "phase.csv").string();
        write_text_file(path, header + "0,2,0,0,0,0,1,0,1,5\n");
        CHECK_THROWS_AS(read_counts_csv(path), ParseError);
    }
    SUBCASE("outcome outside the detector range") {
        const auto path = (dir / "outcome.csv").string();
        write_text_file(path, header + "0,0,0,0,0,7,2,0,1,5\n");
        CHECK_THROWS_AS(read_counts_csv(path), InvalidOutcome);
    }
    SUBCASE("short row reports the line number") {
        const auto path = (dir / "short.csv").string();
        write_text_file(path, header + "0,0,0,0,0,0,1,0,1,5\n0,0,0\n");
        try {
            read_counts_csv(path);
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("3") != std::string::npos);
        }
    }
    SUBCASE("empty file rejected") {
        const auto path = (dir / "empty.csv").string();
        write_text_file(path, header);
        CHECK_THROWS_AS(read_counts_csv(path), InsufficientData);
    }
}

TEST_CASE("histogram, offset, and event CSV round trips") {
    const auto dir = temp_dir("aux_csv");
    SUBCASE("histograms") {
        std::vector<HistogramTrace> traces(2);
        traces[0].bin_width_s = 1e-11;
        traces[0].epoch_min = 0;
        traces[0].counts = {1, 0, 7, 3};
        traces[1].bin_width_s = 1e-11;
        traces[1].epoch_min = 1;
        traces[1].counts = {0, 2, 5, 9};
        const auto path = (dir / "hist.csv").string();
        write_histograms_csv(path, traces);
        const auto restored = read_histograms_csv(path);
        REQUIRE(restored.size() == 2);
        CHECK(restored[0].counts == traces[0].counts);
        CHECK(restored[1].counts == traces[1].counts);
        CHECK(restored[1].epoch_min == doctest::Approx(1.0));
        CHECK(restored[0].bin_width_s == doctest::Approx(1e-11));
    }
    SUBCASE("offsets") {
        std::vector<OffsetEstimate> offsets(2);
        offsets[0] = {1.7e-9, 0.0, 123.0, true};
        offsets[1] = {3.1e-9, 1.0, 99.0, true};
        const auto path = (dir / "offsets.csv").string();
        write_offsets_csv(path, offsets);
        const auto restored = read_offsets_csv(path);
        REQUIRE(restored.size() == 2);
        CHECK(restored[0].tau_s == doctest::Approx(1.7e-9).epsilon(1e-12));
        CHECK(restored[1].epoch_min == doctest::Approx(1.0));
        CHECK(restored[1].score == doctest::Approx(99.0));
    }
    SUBCASE("events") {
        std::vector<TimedCoincidence> events(2);
        events[0] = {0.0, 3, 1, 2.5e-9, 2, 1.0e-9};
        events[1] = {2.0, 7, 2, 0.25e-9, 1, 6.5e-9};
        const auto path = (dir / "events.csv").string();
        write_events_csv(path, events);
        const auto restored = read_events_csv(path);
        REQUIRE(restored.size() == 2);
        CHECK(restored[0].setting_index == 3);
        CHECK(restored[0].time_a_s == doctest::Approx(2.5e-9).epsilon(1e-12));
        CHECK(restored[1].epoch_min == doctest::Approx(2.0));
        CHECK(restored[1].x_a == 2);
    }
}

TEST_CASE("run_experiment end to end") {
    auto config = small_lossless_config();
    const auto dir = temp_dir("run");
    RunOptions options;
    options.mle.warm_start = true;
    const auto summary = run_experiment(config, dir.string(), options);

    SUBCASE("summary fidelity >= 0.99 on the lossless single trial") {
        REQUIRE(summary.per_trial.size() == 1);
        CHECK_FALSE(summary.per_trial[0].failed);
        CHECK(summary.metrics.at("fidelity").first >= 0.99);
    }
    SUBCASE("artifacts are on disk") {
        CHECK(fs::exists(dir / "config.json"));
        CHECK(fs::exists(dir / "summary.json"));
        CHECK(fs::exists(dir / "trial_0" / "counts_raw.csv"));
        CHECK(fs::exists(dir / "trial_0" / "rho.json"));
        CHECK(fs::exists(dir / "trial_0" / "merits.json"));
        CHECK(fs::exists(dir / "trial_0" / "run_report.json"));
        const auto rho = DensityOperator::from_json(
            read_text_file((dir / "trial_0" / "rho.json").string()));
        CHECK(rho.dim() == 16);
        const auto merits = MeritReport::from_json(
            read_text_file((dir / "trial_0" / "merits.json").string()));
        CHECK(merits.fidelity == doctest::Approx(summary.metrics.at("fidelity").first));
    }
    SUBCASE("summary statistics match recomputation from trials") {
        double mean = 0.0;
        for (const auto& trial : summary.per_trial) mean += trial.merits.fidelity;
        mean /= static_cast<double>(summary.per_trial.size());
        CHECK(summary.metrics.at("fidelity").first == doctest::Approx(mean).epsilon(1e-12));
    }
}

TEST_CASE("run_experiment determinism across reruns") {
    auto config = small_lossless_config();
    config.trials = 2;
    config.true_state.kind = TrueStateSpec::Kind::Werner;
    config.true_state.p = 0.95;
    RunOptions options;
    options.mle.warm_start = true;
    const auto dir_a = temp_dir("det_a");
    const auto dir_b = temp_dir("det_b");
    run_experiment(config, dir_a.string(), options);
    run_experiment(config, dir_b.string(), options);
    CHECK(read_text_file((dir_a / "summary.json").string()) ==
          read_text_file((dir_b / "summary.json").string()));
    CHECK(read_text_file((dir_a / "trial_1" / "rho.json").string()) ==
          read_text_file((dir_b / "trial_1" / "rho.json").string()));
}

TEST_CASE("report rendering") {
    const auto rho = DensityOperator::from_ket(maximally_entangled(4, 0.3));
    const auto merits = compute_merits(rho);
    SUBCASE("text report carries the merit table") {
        const auto text = render_report_text(rho, merits);
        CHECK(text.find("Fidelity") != std::string::npos);
        CHECK(text.find("Conditional entropy") != std::string::npos);
        CHECK(text.find("1.0000") != std::string::npos);  // pure-state fidelity
    }
    SUBCASE("HTML report is a standalone page") {
        const auto html = render_report_html(rho, merits);
        CHECK(html.find("<html") != std::string::npos);
        CHECK(html.find("Fidelity") != std::string::npos);
    }
    SUBCASE("write_report picks the format from the extension") {
        const auto dir = temp_dir("report");
        write_report(rho, (dir / "report.html").string());
        write_report(rho, (dir / "report.txt").string());
        CHECK(read_text_file((dir / "report.html").string()).find("<html") !=
              std::string::npos);
        CHECK(read_text_file((dir / "report.txt").string()).find("Fidelity") !=
              std::string::npos);
    }
}
