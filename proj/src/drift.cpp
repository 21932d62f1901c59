#include "timebin/drift.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>

namespace timebin {

namespace {

const std::vector<double>& comb_weights(int detector) {
    static const std::vector<double> w1 = {1, 2, 3, 4, 3, 2, 1};
    static const std::vector<double> w2 = {1, 1, 2, 2, 1, 1};
    if (detector == 1) return w1;
    if (detector == 2) return w2;
    throw InvalidOutcome("detector must be 1 or 2");
}

}  // namespace

OffsetEstimate estimate_offset(const HistogramTrace& measured, int detector,
                               double slot_interval_s, double window_s) {
    const auto& weights = comb_weights(detector);
    const auto n = static_cast<long long>(measured.counts.size());
    if (n == 0 || measured.total() == 0) {
        throw InsufficientData("estimate_offset: empty histogram");
    }
    const double bin = measured.bin_width_s;
    if (!(window_s > bin)) {
        throw ContractViolation("estimate_offset: window must exceed the bin width");
    }

    std::vector<long long> comb_bins(weights.size());
    for (std::size_t m = 0; m < weights.size(); ++m) {
        comb_bins[m] = static_cast<long long>(std::llround(m * slot_interval_s / bin)) % n;
    }

    long long best_tau = 0;
    double best_score = -1.0;
    for (long long tau = 0; tau < n; ++tau) {
        double score = 0.0;
        for (std::size_t m = 0; m < weights.size(); ++m) {
            score += weights[m] * static_cast<double>(
                                      measured.counts[static_cast<std::size_t>(
                                          (comb_bins[m] + tau) % n)]);
        }
        if (score > best_score) {
            best_score = score;
            best_tau = tau;
        }
    }

    OffsetEstimate est;
    est.tau_s = static_cast<double>(best_tau) * bin;
    est.epoch_min = measured.epoch_min;
    est.score = best_score;
    est.ok = true;
    return est;
}

std::vector<OffsetEstimate> track_run(const std::vector<HistogramTrace>& histograms,
                                      int detector, double slot_interval_s, double window_s,
                                      const TrackOptions& options) {
    std::vector<OffsetEstimate> out;
    out.reserve(histograms.size());
    for (const auto& h : histograms) {
        try {
            out.push_back(estimate_offset(h, detector, slot_interval_s, window_s));
        } catch (const InsufficientData&) {
            OffsetEstimate failed;
            failed.epoch_min = h.epoch_min;
            failed.ok = false;
            out.push_back(failed);
        }
    }
    if (options.smoothing_width > 1 && !out.empty()) {
        const double frame =
            histograms.front().bin_width_s * static_cast<double>(histograms.front().counts.size());
        const int half = options.smoothing_width / 2;
        std::vector<OffsetEstimate> smoothed = out;
        for (std::size_t i = 0; i < out.size(); ++i) {
            // Circular mean over the window; tau lives on a ring of size 8T.
            std::complex<double> acc{0.0, 0.0};
            for (int d = -half; d <= half; ++d) {
                const long long j = static_cast<long long>(i) + d;
                if (j < 0 || j >= static_cast<long long>(out.size())) continue;
                const auto& e = out[static_cast<std::size_t>(j)];
                if (!e.ok) continue;
                acc += std::polar(1.0, 2.0 * M_PI * e.tau_s / frame);
            }
            if (std::abs(acc) > 0.0 && out[i].ok) {
                double tau = std::arg(acc) / (2.0 * M_PI) * frame;
                if (tau < 0.0) tau += frame;
                smoothed[i].tau_s = tau;
            }
        }
        return smoothed;
    }
    return out;
}

std::vector<CoincidenceRecord> realign(const std::vector<TimedCoincidence>& events,
                                       const std::vector<OffsetEstimate>& offsets_alice,
                                       const std::vector<OffsetEstimate>& offsets_bob,
                                       double slot_interval_s, double window_s,
                                       RealignStats* stats) {
    const double T = slot_interval_s;
    const double frame = 8.0 * T;

    auto index_offsets = [](const std::vector<OffsetEstimate>& offsets) {
        std::map<long long, double> by_epoch;
        for (const auto& e : offsets) {
            if (e.ok) by_epoch[static_cast<long long>(std::llround(e.epoch_min))] = e.tau_s;
        }
        return by_epoch;
    };
    const auto tau_a = index_offsets(offsets_alice);
    const auto tau_b = index_offsets(offsets_bob);

    auto assign_slot = [&](double time, double tau, int detector, int* slot) {
        double t = std::fmod(time - tau, frame);
        if (t < 0.0) t += frame;
        long long m = std::llround(t / T);
        const double dist = t - static_cast<double>(m) * T;
        m %= 8;
        if (std::abs(dist) > window_s / 2.0) return false;
        const int max_slot = (detector == 1) ? kSlotsDetector1 - 1 : kSlotsDetector2 - 1;
        if (m < 0 || m > max_slot) return false;
        *slot = static_cast<int>(m);
        return true;
    };

    std::map<std::pair<int, OutcomeCell>, std::uint64_t> table;
    RealignStats local;
    for (const auto& ev : events) {
        const auto epoch = static_cast<long long>(std::llround(ev.epoch_min));
        const auto ita = tau_a.find(epoch);
        const auto itb = tau_b.find(epoch);
        if (ita == tau_a.end() || itb == tau_b.end()) {
            throw UnalignableEpoch("realign: no offset estimate for epoch " +
                                   std::to_string(epoch));
        }
        int slot_a = 0;
        int slot_b = 0;
        if (assign_slot(ev.time_a_s, ita->second, ev.x_a, &slot_a) &&
            assign_slot(ev.time_b_s, itb->second, ev.x_b, &slot_b)) {
            ++table[{ev.setting_index, OutcomeCell{slot_a, ev.x_a, slot_b, ev.x_b}}];
            ++local.accepted;
        } else {
            ++local.discarded;
        }
    }
    if (stats != nullptr) *stats = local;

    std::vector<CoincidenceRecord> out;
    out.reserve(table.size());
    for (const auto& [key, count] : table) {
        out.push_back({key.first, key.second, count});
    }
    return out;
}

}  // namespace timebin
