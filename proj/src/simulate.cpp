#include "timebin/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace timebin {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kFrameSlots = 8.0;  // analysis frame is 8T

double gauss_sigma(double fwhm) { return fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0))); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double db_to_transmission(double db) { return std::pow(10.0, -db / 10.0); }

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double truncated_gaussian(std::mt19937_64& rng, double sigma, double half_width) {
    std::normal_distribution<double> dist(0.0, sigma);
    for (;;) {
        const double x = dist(rng);
        if (std::abs(x) <= half_width) return x;
    }
}

double wrap_frame(double t, double frame) {
    t = std::fmod(t, frame);
    if (t < 0.0) t += frame;
    return t;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t state = base ^ (0x2545f4914f6cdd1dULL * (stream + 1));
    std::uint64_t s = splitmix64(state);
    return splitmix64(state) ^ s;
}

void SourceConfig::validate() const {
    if (!(mean_pairs_per_qudit >= 0.0) || mean_pairs_per_qudit >= 0.5) {
        throw ContractViolation("SourceConfig: mean_pairs_per_qudit outside [0, 0.5)");
    }
    if (!(qudit_rate_hz > 0.0) || !(slot_interval_s > 0.0) || !(pulse_fwhm_s > 0.0)) {
        throw ContractViolation("SourceConfig: rates and intervals must be positive");
    }
}

void ChannelConfig::validate() const {
    if (loss_signal_db < 0.0 || loss_idler_db < 0.0) {
        throw ContractViolation("ChannelConfig: losses must be non-negative");
    }
    if (background_cps < 0.0) {
        throw ContractViolation("ChannelConfig: background rate must be non-negative");
    }
}

std::vector<std::pair<PhaseSetting, PhaseSetting>> RunPlan::qst16_settings() {
    const double phases[2] = {0.0, kPi / 2.0};
    std::vector<std::pair<PhaseSetting, PhaseSetting>> out;
    out.reserve(16);
    for (double t1a : phases)
        for (double t2a : phases)
            for (double t1b : phases)
                for (double t2b : phases)
                    out.push_back({PhaseSetting{t1a, t2a}, PhaseSetting{t1b, t2b}});
    return out;
}

void RunPlan::validate() const {
    if (settings.empty()) {
        throw ContractViolation("RunPlan: settings list is empty");
    }
    if (!(duration_per_setting_s > 0.0) || !(histogram_bin_s > 0.0)) {
        throw ContractViolation("RunPlan: durations must be positive");
    }
}

std::uint64_t HistogramTrace::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

std::vector<std::pair<OutcomeCell, double>> outcome_distribution(
    const DensityOperator& rho, const PhaseSetting& setting_a, const PhaseSetting& setting_b,
    const CalibrationSet& calib_a, const CalibrationSet& calib_b) {
    if (rho.dim() != kQuditDim * kQuditDim) {
        throw ContractViolation("outcome_distribution: rho must be 16-dimensional");
    }
    const auto ops_a = enumerate_outcomes(setting_a, calib_a);
    const auto ops_b = enumerate_outcomes(setting_b, calib_b);
    std::vector<std::pair<OutcomeCell, double>> out;
    out.reserve(ops_a.size() * ops_b.size());
    for (const auto& ea : ops_a) {
        // rho applied to Alice's rank-1 amplitude once per row of cells
        for (const auto& eb : ops_b) {
            Vector joint(16);
            for (int i = 0; i < kQuditDim; ++i) {
                joint.segment(static_cast<Eigen::Index>(i) * kQuditDim, kQuditDim) =
                    ea.amplitude(i) * eb.amplitude;
            }
            const double p = std::max(0.0, (joint.adjoint() * rho.matrix() * joint)(0).real());
            out.push_back({OutcomeCell{ea.t, ea.x, eb.t, eb.x}, p});
        }
    }
    return out;
}

HistogramTrace ideal_histogram(int detector, double slot_interval_s, double bin_width_s) {
    if (!(slot_interval_s > 0.0) || !(bin_width_s > 0.0)) {
        throw ContractViolation("ideal_histogram: intervals must be positive");
    }
    if (detector != 1 && detector != 2) {
        throw InvalidOutcome("ideal_histogram: detector must be 1 or 2");
    }
    static const std::vector<std::uint64_t> w1 = {1, 2, 3, 4, 3, 2, 1};
    static const std::vector<std::uint64_t> w2 = {1, 1, 2, 2, 1, 1};
    const auto& weights = (detector == 1) ? w1 : w2;
    const double frame = kFrameSlots * slot_interval_s;
    const auto n_bins = static_cast<std::size_t>(std::llround(frame / bin_width_s));
    HistogramTrace trace;
    trace.bin_width_s = bin_width_s;
    trace.counts.assign(n_bins, 0);
    for (std::size_t m = 0; m < weights.size(); ++m) {
        const auto bin = static_cast<std::size_t>(
                             std::llround(m * slot_interval_s / bin_width_s)) %
                         n_bins;
        trace.counts[bin] += weights[m];
    }
    return trace;
}

DriftPath DriftPath::make(const DriftConfig& cfg, double total_duration_s, std::uint64_t seed) {
    DriftPath path;
    path.cfg_ = cfg;
    if (cfg.model == DriftModel::RandomWalk) {
        const auto n_min = static_cast<std::size_t>(std::ceil(total_duration_s / 60.0)) + 1;
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> step(0.0, cfg.step_sigma_s);
        path.walk_.assign(n_min, 0.0);
        for (std::size_t m = 1; m < n_min; ++m) {
            path.walk_[m] = path.walk_[m - 1] + step(rng);
        }
    }
    return path;
}

double DriftPath::offset_at(double wall_time_s) const {
    switch (cfg_.model) {
        case DriftModel::None:
            return 0.0;
        case DriftModel::Linear:
            return cfg_.linear_rate * wall_time_s;
        case DriftModel::RandomWalk: {
            if (walk_.empty()) return 0.0;
            const auto m = std::min(static_cast<std::size_t>(std::max(0.0, wall_time_s / 60.0)),
                                    walk_.size() - 1);
            return walk_[m];
        }
    }
    return 0.0;
}

namespace {

// Expected singles rate per slot at one detector: loss applies to the
// receiver's channel only, the partner photon is ignored.
std::vector<double> singles_slot_weights(const Matrix& marginal,
                                         const std::vector<MeasurementOperator>& ops,
                                         int detector) {
    const int n_slots = (detector == 1) ? kSlotsDetector1 : kSlotsDetector2;
    std::vector<double> w(n_slots, 0.0);
    for (const auto& op : ops) {
        if (op.x != detector) continue;
        w[op.t] = std::max(0.0, (op.amplitude.adjoint() * marginal * op.amplitude)(0).real());
    }
    return w;
}

void accumulate_gaussian(std::vector<double>& lambda, double mean_counts, double center,
                         double sigma, double half_width, double bin, double frame) {
    if (mean_counts <= 0.0) return;
    const auto n = static_cast<long long>(lambda.size());
    const double norm = normal_cdf(half_width / sigma) - normal_cdf(-half_width / sigma);
    const auto lo_bin = static_cast<long long>(std::floor((center - half_width) / bin));
    const auto hi_bin = static_cast<long long>(std::ceil((center + half_width) / bin));
    for (long long b = lo_bin; b < hi_bin; ++b) {
        const double lo = std::max(b * bin, center - half_width);
        const double hi = std::min((b + 1) * bin, center + half_width);
        if (hi <= lo) continue;
        const double mass =
            (normal_cdf((hi - center) / sigma) - normal_cdf((lo - center) / sigma)) / norm;
        const long long wrapped = ((b % n) + n) % n;
        lambda[static_cast<std::size_t>(wrapped)] += mean_counts * mass;
    }
}

}  // namespace

SimulationResult simulate_counts(const DensityOperator& rho, const RunPlan& plan,
                                 const SourceConfig& source, const ChannelConfig& channel,
                                 const CalibrationSet& calib_a, const CalibrationSet& calib_b,
                                 const SimulateOptions& options) {
    source.validate();
    channel.validate();
    plan.validate();
    calib_a.validate();
    calib_b.validate();
    if (!(options.count_scale >= 0.0)) {
        throw ContractViolation("simulate_counts: count_scale must be non-negative");
    }

    const std::uint64_t seed = options.seed_override.value_or(plan.seed);
    const double T = source.slot_interval_s;
    const double frame = kFrameSlots * T;
    const double duration = plan.duration_per_setting_s;
    const double total_duration = duration * static_cast<double>(plan.settings.size());
    const auto n_epochs = static_cast<std::size_t>(std::ceil(total_duration / 60.0));
    const double sigma = gauss_sigma(source.pulse_fwhm_s);
    const double trans_a = db_to_transmission(channel.loss_signal_db);
    const double trans_b = db_to_transmission(channel.loss_idler_db);
    const double frames_per_setting = source.qudit_rate_hz * duration * options.count_scale;

    const DriftPath drift_a = DriftPath::make(channel.drift, total_duration, derive_seed(seed, 11));
    const DriftPath drift_b = DriftPath::make(channel.drift, total_duration, derive_seed(seed, 12));

    SimulationResult result;
    result.true_offset_alice_s.resize(n_epochs);
    result.true_offset_bob_s.resize(n_epochs);
    for (std::size_t e = 0; e < n_epochs; ++e) {
        const double mid = (static_cast<double>(e) + 0.5) * 60.0;
        result.true_offset_alice_s[e] = drift_a.offset_at(mid);
        result.true_offset_bob_s[e] = drift_b.offset_at(mid);
    }

    // Coincidences: per-cell Poisson draws; the stream does not depend on
    // the drift model, so a drifted and a drift-free run with the same
    // seed produce identical cell counts.
    for (std::size_t i = 0; i < plan.settings.size(); ++i) {
        const auto& [sa, sb] = plan.settings[i];
        const auto probs = outcome_distribution(rho, sa, sb, calib_a, calib_b);
        std::mt19937_64 rng_counts(derive_seed(seed, 100 + i));
        const double bg_mean = channel.background_cps * duration * options.count_scale /
                               static_cast<double>(probs.size());
        std::vector<std::uint64_t> counts(probs.size(), 0);
        for (std::size_t c = 0; c < probs.size(); ++c) {
            const double mean =
                frames_per_setting * source.mean_pairs_per_qudit * trans_a * trans_b *
                    probs[c].second +
                bg_mean;
            if (mean > 0.0) {
                std::poisson_distribution<std::uint64_t> poisson(mean);
                counts[c] = poisson(rng_counts);
            }
            result.records.push_back(
                {static_cast<int>(i), probs[c].first, counts[c]});
        }
        if (options.emit_events) {
            std::mt19937_64 rng_events(derive_seed(seed, 500 + i));
            std::uniform_real_distribution<double> uni(0.0, duration);
            for (std::size_t c = 0; c < probs.size(); ++c) {
                const auto& cell = probs[c].first;
                for (std::uint64_t k = 0; k < counts[c]; ++k) {
                    const double wall = static_cast<double>(i) * duration + uni(rng_events);
                    const double epoch = std::floor(wall / 60.0);
                    const double ta = wrap_frame(cell.t_a * T + drift_a.offset_at(wall) +
                                                     truncated_gaussian(rng_events, sigma, T / 2.0),
                                                 frame);
                    const double tb = wrap_frame(cell.t_b * T + drift_b.offset_at(wall) +
                                                     truncated_gaussian(rng_events, sigma, T / 2.0),
                                                 frame);
                    result.events.push_back(
                        {epoch, static_cast<int>(i), cell.x_a, ta, cell.x_b, tb});
                }
            }
        }
    }

    if (!options.emit_histograms) {
        return result;
    }

    const auto n_bins = static_cast<std::size_t>(std::llround(frame / plan.histogram_bin_s));
    const Matrix marginal_a = partial_trace(rho.matrix(), Subsystem::Signal, kQuditDim, kQuditDim);
    const Matrix marginal_b = partial_trace(rho.matrix(), Subsystem::Idler, kQuditDim, kQuditDim);

    struct Receiver {
        const Matrix* marginal;
        const CalibrationSet* calib;
        const DriftPath* drift;
        double transmission;
        bool alice;
    };
    const Receiver receivers[2] = {{&marginal_a, &calib_a, &drift_a, trans_a, true},
                                   {&marginal_b, &calib_b, &drift_b, trans_b, false}};

    OutcomeCache cache;
    for (int r = 0; r < 2; ++r) {
        const Receiver& recv = receivers[r];
        for (int detector = 1; detector <= 2; ++detector) {
            std::mt19937_64 rng(derive_seed(seed, 900 + static_cast<std::uint64_t>(r) * 2 +
                                                      static_cast<std::uint64_t>(detector)));
            auto& traces = (recv.alice ? result.histograms_alice
                                       : result.histograms_bob)[detector - 1];
            traces.reserve(n_epochs);
            for (std::size_t e = 0; e < n_epochs; ++e) {
                const double epoch_start = static_cast<double>(e) * 60.0;
                const double epoch_end = std::min(epoch_start + 60.0, total_duration);
                std::vector<double> lambda(n_bins, 0.0);
                const double drift_off =
                    recv.drift->offset_at((epoch_start + epoch_end) / 2.0);
                // An epoch may straddle a setting boundary; weight by overlap.
                const auto first_setting =
                    static_cast<std::size_t>(std::floor(epoch_start / duration));
                const auto last_setting = std::min(
                    plan.settings.size() - 1,
                    static_cast<std::size_t>(std::floor((epoch_end - 1e-9) / duration)));
                for (std::size_t i = first_setting; i <= last_setting; ++i) {
                    const double overlap = std::min(epoch_end, (i + 1) * duration) -
                                           std::max(epoch_start, i * duration);
                    if (overlap <= 0.0) continue;
                    const PhaseSetting& setting =
                        recv.alice ? plan.settings[i].first : plan.settings[i].second;
                    const auto& ops = cache.get(setting, *recv.calib);
                    const auto slot_w = singles_slot_weights(*recv.marginal, ops, detector);
                    const double exposure = source.qudit_rate_hz * overlap *
                                            options.count_scale *
                                            source.mean_pairs_per_qudit * recv.transmission;
                    for (std::size_t t = 0; t < slot_w.size(); ++t) {
                        accumulate_gaussian(lambda, exposure * slot_w[t],
                                            static_cast<double>(t) * T + drift_off, sigma,
                                            T / 2.0, plan.histogram_bin_s, frame);
                    }
                }
                HistogramTrace trace;
                trace.bin_width_s = plan.histogram_bin_s;
                trace.epoch_min = static_cast<double>(e);
                trace.counts.resize(n_bins);
                for (std::size_t b = 0; b < n_bins; ++b) {
                    if (lambda[b] > 0.0) {
                        std::poisson_distribution<std::uint64_t> poisson(lambda[b]);
                        trace.counts[b] = poisson(rng);
                    } else {
                        trace.counts[b] = 0;
                    }
                }
                traces.push_back(std::move(trace));
            }
        }
    }
    return result;
}

}  // namespace timebin
