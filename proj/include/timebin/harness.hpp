#pragma once

// End-to-end orchestration: simulate -> track -> realign -> reconstruct
// -> score, with the paper-style four-trial protocol and a summary of
// mean +- standard deviation per metric.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "timebin/drift.hpp"
#include "timebin/io.hpp"
#include "timebin/metrics.hpp"
#include "timebin/mzi.hpp"
#include "timebin/simulate.hpp"
#include "timebin/tomography.hpp"

namespace timebin {

struct TrueStateSpec {
    enum class Kind { MaximallyEntangled, Werner, File };
    Kind kind = Kind::MaximallyEntangled;
    double phi = 0.0;
    double p = 1.0;        // Werner mixing weight
    std::string path;      // density-operator JSON

    DensityOperator resolve() const;
};

struct ExperimentConfig {
    SourceConfig source;
    ChannelConfig channel;
    RunPlan plan;
    CalibrationSet calib_a = CalibrationSet::alice_preset();
    CalibrationSet calib_b = CalibrationSet::bob_preset();
    TrueStateSpec true_state;
    double coincidence_window_s = 0.33e-9;
    int trials = 4;

    void validate() const;

    std::string to_json() const;
    static ExperimentConfig from_json(const std::string& text);

    // Fig.-1 parameters: 0.03 pairs/qudit, 11.8/11.2 dB, 16 settings at
    // 15 min each, the calibration presets, 0.33 ns window, 4 trials.
    static ExperimentConfig paper_100km();
};

struct TrialResult {
    int index = 0;
    MleResult mle;
    MeritReport merits;
    std::uint64_t total_counts = 0;
    RealignStats realign_stats;
    bool failed = false;
    std::string error;
};

struct ExperimentSummary {
    int trials = 0;
    std::vector<TrialResult> per_trial;
    // metric name -> (mean, std over trials)
    std::map<std::string, std::pair<double, double>> metrics;

    std::string to_json() const;
};

struct RunOptions {
    double scale = 1.0;
    std::optional<std::uint64_t> seed_override;
    bool parallel_trials = false;
    // Warm-started by default: the cold I/16 start can stall on likelihood
    // plateaus well short of the optimum for near-pure truths.
    MleOptions mle{.warm_start = true};
};

// Writes per-trial artifacts (counts CSVs, histograms, offsets, rho and
// merit JSONs) plus summary.json under out_dir.
ExperimentSummary run_experiment(const ExperimentConfig& config, const std::string& out_dir,
                                 const RunOptions& options = {});

// Counts CSV -> tomography problem with operators built from the
// calibrations; missing cells are imputed as zero counts so every
// setting carries all 169 cells.
TomographyProblem ingest_counts(const std::string& csv_path, const CalibrationSet& calib_a,
                                const CalibrationSet& calib_b);
TomographyProblem build_problem(const std::vector<std::pair<PhaseSetting, PhaseSetting>>& settings,
                                const std::vector<CoincidenceRecord>& records,
                                const CalibrationSet& calib_a, const CalibrationSet& calib_b);

// Fig.-3-style rendering: merit table plus real/imaginary matrix view,
// as plain text or a standalone HTML page depending on the extension.
std::string render_report_text(const DensityOperator& rho, const MeritReport& merits);
std::string render_report_html(const DensityOperator& rho, const MeritReport& merits);
void write_report(const DensityOperator& rho, const std::string& out_path);

}  // namespace timebin
