#pragma once

// Monte-Carlo generation of coincidence records and singles histograms
// from a true two-ququart state: Poissonian pair statistics, fibre loss,
// and detection-time drift.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "timebin/mzi.hpp"
#include "timebin/qudit.hpp"

namespace timebin {

struct SourceConfig {
    double mean_pairs_per_qudit = 0.03;
    double qudit_rate_hz = 125e6 / 4.0;  // 125 MHz pulses, 4 pulses per frame
    double slot_interval_s = 1e-9;
    double pulse_fwhm_s = 100e-12;

    void validate() const;
};

enum class DriftModel { None, Linear, RandomWalk };

struct DriftConfig {
    DriftModel model = DriftModel::None;
    double linear_rate = 0.0;        // seconds of offset per second of wall time
    double step_sigma_s = 0.0;       // random-walk step per minute
};

struct ChannelConfig {
    double loss_signal_db = 11.8;
    double loss_idler_db = 11.2;
    DriftConfig drift;
    double background_cps = 0.0;  // accidental coincidences, uniform over cells

    void validate() const;
};

struct RunPlan {
    std::vector<std::pair<PhaseSetting, PhaseSetting>> settings;  // (Alice, Bob)
    double duration_per_setting_s = 900.0;
    double histogram_bin_s = 1e-11;
    std::uint64_t seed = 0;

    // The paper protocol: all 16 combinations of theta1, theta2 in
    // {0, pi/2} per receiver.
    static std::vector<std::pair<PhaseSetting, PhaseSetting>> qst16_settings();

    void validate() const;
};

struct HistogramTrace {
    double bin_width_s = 1e-11;
    std::vector<std::uint64_t> counts;  // one 8T frame
    double epoch_min = 0.0;

    std::uint64_t total() const;
};

struct OutcomeCell {
    int t_a = 0;
    int x_a = 1;
    int t_b = 0;
    int x_b = 1;

    friend bool operator<(const OutcomeCell& a, const OutcomeCell& b) {
        if (a.x_a != b.x_a) return a.x_a < b.x_a;
        if (a.t_a != b.t_a) return a.t_a < b.t_a;
        if (a.x_b != b.x_b) return a.x_b < b.x_b;
        return a.t_b < b.t_b;
    }
    friend bool operator==(const OutcomeCell& a, const OutcomeCell& b) {
        return a.t_a == b.t_a && a.x_a == b.x_a && a.t_b == b.t_b && a.x_b == b.x_b;
    }
};

struct CoincidenceRecord {
    int setting_index = 0;
    OutcomeCell cell;
    std::uint64_t count = 0;
};

// One coincidence with raw detection times within the 8T frame; the
// input to drift realignment.
struct TimedCoincidence {
    double epoch_min = 0.0;
    int setting_index = 0;
    int x_a = 1;
    double time_a_s = 0.0;
    int x_b = 1;
    double time_b_s = 0.0;
};

// Probability of each of the 13x13 outcome cells: Tr(rho (E_a (x) E_b)).
std::vector<std::pair<OutcomeCell, double>> outcome_distribution(
    const DensityOperator& rho, const PhaseSetting& setting_a, const PhaseSetting& setting_b,
    const CalibrationSet& calib_a, const CalibrationSet& calib_b);

// Delta-comb template per detector: weights (1,2,3,4,3,2,1) at 0..6T for
// detector 1 and (1,1,2,2,1,1) at 0..5T for detector 2, one bin each.
HistogramTrace ideal_histogram(int detector, double slot_interval_s,
                               double bin_width_s = 1e-11);

// Ground-truth drift offset as a function of wall time, one path per
// receiver.
class DriftPath {
public:
    static DriftPath make(const DriftConfig& cfg, double total_duration_s, std::uint64_t seed);
    double offset_at(double wall_time_s) const;

private:
    DriftConfig cfg_;
    std::vector<double> walk_;  // per-minute cumulative offsets (random walk)
};

struct SimulationResult {
    std::vector<CoincidenceRecord> records;
    std::vector<TimedCoincidence> events;  // populated when emit_events
    // [detector-1, detector-2] -> per-epoch traces
    std::array<std::vector<HistogramTrace>, 2> histograms_alice;
    std::array<std::vector<HistogramTrace>, 2> histograms_bob;
    std::vector<double> true_offset_alice_s;  // per epoch
    std::vector<double> true_offset_bob_s;
};

struct SimulateOptions {
    double count_scale = 1.0;  // thins expected counts, timeline unchanged
    bool emit_events = false;
    bool emit_histograms = true;
    std::optional<std::uint64_t> seed_override;
};

SimulationResult simulate_counts(const DensityOperator& rho, const RunPlan& plan,
                                 const SourceConfig& source, const ChannelConfig& channel,
                                 const CalibrationSet& calib_a, const CalibrationSet& calib_b,
                                 const SimulateOptions& options = {});

// Deterministic stream derivation so that sub-generators are independent
// of one another and of evaluation order.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace timebin
