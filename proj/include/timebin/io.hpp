#pragma once

// CSV interchange formats: coincidence counts, singles histograms,
// offset series, and timed coincidence events.

#include <string>
#include <vector>

#include "timebin/drift.hpp"
#include "timebin/simulate.hpp"

namespace timebin {

struct CountsFile {
    // Settings indexed by the `setting` column.
    std::vector<std::pair<PhaseSetting, PhaseSetting>> settings;
    std::vector<CoincidenceRecord> records;
};

// Header: setting,theta1_a,theta2_a,theta1_b,theta2_b,t_a,x_a,t_b,x_b,count
// with phases as integers in multiples of pi/2 (protocol values 0 or 1).
void write_counts_csv(const std::string& path,
                      const std::vector<std::pair<PhaseSetting, PhaseSetting>>& settings,
                      const std::vector<CoincidenceRecord>& records);
CountsFile read_counts_csv(const std::string& path);

// Header: epoch_min,bin_ps,c0,c1,... one row per epoch.
void write_histograms_csv(const std::string& path, const std::vector<HistogramTrace>& traces);
std::vector<HistogramTrace> read_histograms_csv(const std::string& path);

// Header: epoch_min,tau_ps,score
void write_offsets_csv(const std::string& path, const std::vector<OffsetEstimate>& offsets);
std::vector<OffsetEstimate> read_offsets_csv(const std::string& path);

// Header: epoch_min,setting,x_a,time_a_ps,x_b,time_b_ps
void write_events_csv(const std::string& path, const std::vector<TimedCoincidence>& events);
std::vector<TimedCoincidence> read_events_csv(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace timebin
