#pragma once

// Recovery of the drifting first-time-slot offset from singles
// histograms via modular cross-correlation against the ideal comb.

#include <cstdint>
#include <vector>

#include "timebin/simulate.hpp"

namespace timebin {

struct OffsetEstimate {
    double tau_s = 0.0;  // in [0, 8T)
    double epoch_min = 0.0;
    double score = 0.0;
    bool ok = true;
};

// Argmax over tau of the circular correlation sum_m w_m * counts[m*T +
// tau], tau on the bin grid, smallest tau on ties. The window argument
// is validated (it must exceed the bin width) to keep the signature
// aligned with realign, which consumes the same window.
OffsetEstimate estimate_offset(const HistogramTrace& measured, int detector,
                               double slot_interval_s, double window_s);

struct TrackOptions {
    // Optional centered moving average over the tau series (width in
    // epochs, odd; 1 = off).
    int smoothing_width = 1;
};

// Independent per-epoch estimates; failed epochs are flagged ok=false
// and skipped rather than aborting the run.
std::vector<OffsetEstimate> track_run(const std::vector<HistogramTrace>& histograms,
                                      int detector, double slot_interval_s, double window_s,
                                      const TrackOptions& options = {});

struct RealignStats {
    std::uint64_t accepted = 0;
    std::uint64_t discarded = 0;
};

// Shifts every event by -tau(epoch) mod 8T per receiver, bins times
// within +-window/2 of slot centers into (t, x) cells, and drops the
// rest. Offsets must cover every event epoch.
std::vector<CoincidenceRecord> realign(const std::vector<TimedCoincidence>& events,
                                       const std::vector<OffsetEstimate>& offsets_alice,
                                       const std::vector<OffsetEstimate>& offsets_bob,
                                       double slot_interval_s, double window_s,
                                       RealignStats* stats = nullptr);

}  // namespace timebin
