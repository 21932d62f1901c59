#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>

#include "timebin.h"
#include "timebin/harness.hpp"

namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("timebin_capi_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string small_config_json(bool drift) {
    timebin::ExperimentConfig config;
    config.channel.loss_signal_db = 0.0;
    config.channel.loss_idler_db = 0.0;
    if (drift) {
        config.channel.drift.model = timebin::DriftModel::Linear;
        config.channel.drift.linear_rate = 1e-9 / 512.0;
        config.plan.settings = {{timebin::PhaseSetting{}, timebin::PhaseSetting{}}};
        config.plan.duration_per_setting_s = 120.0;
    } else {
        config.plan.settings = timebin::RunPlan::qst16_settings();
        config.plan.duration_per_setting_s = 1e6 / config.source.qudit_rate_hz;
    }
    config.plan.seed = 31;
    config.trials = 1;
    return config.to_json();
}

}  // namespace

TEST_CASE("density handles") {
    tb_density* rho = nullptr;
    REQUIRE(tb_density_maximally_entangled(4, 0.7, &rho) == TB_OK);
    REQUIRE(rho != nullptr);
    CHECK(tb_density_dim(rho) == 16);

    SUBCASE("save and load round trip") {
        const auto dir = temp_dir("density");
        const auto path = (dir / "rho.json").string();
        CHECK(tb_density_save(rho, path.c_str()) == TB_OK);
        tb_density* restored = nullptr;
        REQUIRE(tb_density_load(path.c_str(), &restored) == TB_OK);
        CHECK(tb_density_dim(restored) == 16);
        tb_merit a{};
        tb_merit b{};
        CHECK(tb_metrics_compute(rho, 0.7, &a) == TB_OK);
        CHECK(tb_metrics_compute(restored, 0.7, &b) == TB_OK);
        CHECK(a.fidelity == doctest::Approx(b.fidelity).epsilon(1e-12));
        tb_density_free(restored);
    }
    SUBCASE("invalid dimension and null arguments") {
        tb_density* bad = nullptr;
        CHECK(tb_density_maximally_entangled(1, 0.0, &bad) == TB_ERR_USAGE);
        CHECK(std::string(tb_last_error()).size() > 0);
        CHECK(tb_density_maximally_entangled(4, 0.0, nullptr) == TB_ERR_USAGE);
        CHECK(tb_density_dim(nullptr) == 0);
        tb_density_free(nullptr);  // must be a no-op
    }
    SUBCASE("loading a missing file reports a data error") {
        tb_density* missing = nullptr;
        CHECK(tb_density_load("/nonexistent/rho.json", &missing) == TB_ERR_DATA);
        CHECK(std::string(tb_last_error()).find("nonexistent") != std::string::npos);
    }
    tb_density_free(rho);
}

TEST_CASE("metrics and reports through the C interface") {
    tb_density* rho = nullptr;
    REQUIRE(tb_density_werner(0.95, 0.4, &rho) == TB_OK);

    SUBCASE("NAN phi optimizes the target phase") {
        tb_merit merit{};
        REQUIRE(tb_metrics_compute(rho, NAN, &merit) == TB_OK);
        CHECK(std::abs(std::remainder(merit.optimal_phi - 0.4, 2.0 * M_PI)) < 0.01);
        CHECK(merit.fidelity > 0.9);
        CHECK(merit.coherent_information ==
              doctest::Approx(-merit.conditional_entropy_signal).epsilon(1e-12));
    }
    SUBCASE("fixed phi is honored") {
        tb_merit at_zero{};
        tb_merit at_fit{};
        REQUIRE(tb_metrics_compute(rho, 0.0, &at_zero) == TB_OK);
        REQUIRE(tb_metrics_compute(rho, 0.4, &at_fit) == TB_OK);
        CHECK(at_zero.optimal_phi == 0.0);
        CHECK(at_fit.fidelity > at_zero.fidelity);
    }
    SUBCASE("merit JSON and report files") {
        const auto dir = temp_dir("merit");
        tb_merit merit{};
        REQUIRE(tb_metrics_compute(rho, NAN, &merit) == TB_OK);
        const auto merit_path = (dir / "merits.json").string();
        CHECK(tb_metrics_write_json(&merit, merit_path.c_str()) == TB_OK);
        const auto restored =
            timebin::MeritReport::from_json(timebin::read_text_file(merit_path));
        CHECK(restored.fidelity == doctest::Approx(merit.fidelity).epsilon(1e-12));

        const auto report_path = (dir / "report.html").string();
        CHECK(tb_report_write(rho, report_path.c_str()) == TB_OK);
        CHECK(timebin::read_text_file(report_path).find("<html") != std::string::npos);
    }
    tb_density_free(rho);
}

TEST_CASE("file-based pipeline stages") {
    const auto dir = temp_dir("pipeline");
    const auto config_path = (dir / "config.json").string();
    timebin::write_text_file(config_path, small_config_json(false));

    SUBCASE("simulate then reconstruct") {
        const auto sim_dir = (dir / "sim").string();
        REQUIRE(tb_simulate(config_path.c_str(), sim_dir.c_str(), 1.0, 7) == TB_OK);
        CHECK(fs::exists(fs::path(sim_dir) / "counts_raw.csv"));
        CHECK(fs::exists(fs::path(sim_dir) / "hist_bob_det2.csv"));

        const auto calib_a = (dir / "calib_a.json").string();
        const auto calib_b = (dir / "calib_b.json").string();
        timebin::write_text_file(calib_a, timebin::CalibrationSet::alice_preset().to_json());
        timebin::write_text_file(calib_b, timebin::CalibrationSet::bob_preset().to_json());

        const auto rho_path = (dir / "rho.json").string();
        const auto report_path = (dir / "mle_report.json").string();
        const auto counts = (fs::path(sim_dir) / "counts_raw.csv").string();
        REQUIRE(tb_reconstruct(counts.c_str(), calib_a.c_str(), calib_b.c_str(),
                               rho_path.c_str(), report_path.c_str(), 0, 0.0) == TB_OK);
        CHECK(fs::exists(report_path));

        tb_density* rho = nullptr;
        REQUIRE(tb_density_load(rho_path.c_str(), &rho) == TB_OK);
        tb_merit merit{};
        REQUIRE(tb_metrics_compute(rho, NAN, &merit) == TB_OK);
        CHECK(merit.fidelity >= 0.95);
        tb_density_free(rho);
    }
    SUBCASE("track and realign a drifting run") {
        const auto drift_config = (dir / "drift_config.json").string();
        timebin::write_text_file(drift_config, small_config_json(true));
        const auto sim_dir = (dir / "drift_sim").string();
        REQUIRE(tb_simulate(drift_config.c_str(), sim_dir.c_str(), 0.005, 9) == TB_OK);
        CHECK(fs::exists(fs::path(sim_dir) / "events.csv"));

        const auto hist_a = (fs::path(sim_dir) / "hist_alice_det1.csv").string();
        const auto hist_b = (fs::path(sim_dir) / "hist_bob_det1.csv").string();
        const auto offsets_a = (dir / "offsets_a.csv").string();
        const auto offsets_b = (dir / "offsets_b.csv").string();
        REQUIRE(tb_track(hist_a.c_str(), 1, 1.0, 0.33, offsets_a.c_str()) == TB_OK);
        REQUIRE(tb_track(hist_b.c_str(), 1, 1.0, 0.33, offsets_b.c_str()) == TB_OK);

        const auto events = (fs::path(sim_dir) / "events.csv").string();
        const auto raw = (fs::path(sim_dir) / "counts_raw.csv").string();
        const auto realigned = (dir / "counts_realigned.csv").string();
        REQUIRE(tb_realign(events.c_str(), offsets_a.c_str(), offsets_b.c_str(), raw.c_str(),
                           1.0, 0.33, realigned.c_str()) == TB_OK);

        const auto raw_file = timebin::read_counts_csv(raw);
        const auto realigned_file = timebin::read_counts_csv(realigned);
        double raw_total = 0.0;
        double realigned_total = 0.0;
        for (const auto& rec : raw_file.records) raw_total += static_cast<double>(rec.count);
        for (const auto& rec : realigned_file.records) {
            realigned_total += static_cast<double>(rec.count);
        }
        CHECK(realigned_total >= 0.95 * raw_total);
    }
    SUBCASE("bad inputs map to the data error code") {
        CHECK(tb_track("/nonexistent/hist.csv", 1, 1.0, 0.33, "/tmp/out.csv") == TB_ERR_DATA);
        CHECK(tb_simulate("/nonexistent/config.json", (dir / "x").string().c_str(), 1.0, -1) ==
              TB_ERR_DATA);
        CHECK(tb_reconstruct("/nonexistent/counts.csv", "/nonexistent/a.json",
                             "/nonexistent/b.json", "/tmp/rho.json", nullptr, 0, 0.0) ==
              TB_ERR_DATA);
        CHECK(tb_run(nullptr, "/tmp/x", 1.0, -1, 0) == TB_ERR_USAGE);
    }
}

TEST_CASE("end-to-end run through the C interface") {
    const auto dir = temp_dir("run");
    const auto config_path = (dir / "config.json").string();
    timebin::write_text_file(config_path, small_config_json(false));
    const auto out_dir = (dir / "out").string();
    REQUIRE(tb_run(config_path.c_str(), out_dir.c_str(), 1.0, 5, 0) == TB_OK);
    CHECK(fs::exists(fs::path(out_dir) / "summary.json"));
    CHECK(fs::exists(fs::path(out_dir) / "trial_0" / "merits.json"));
    CHECK(std::string(tb_version()).find("timebin") != std::string::npos);
}
