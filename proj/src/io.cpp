#include "timebin/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace timebin {

namespace {

constexpr double kHalfPi = 1.57079632679489661923;

int phase_to_int(double theta, const char* what) {
    const double units = theta / kHalfPi;
    const auto n = static_cast<long long>(std::llround(units));
    if (std::abs(units - static_cast<double>(n)) > 1e-9 || (n != 0 && n != 1)) {
        throw ContractViolation(std::string(what) +
                                ": counts CSV stores phases as integers in {0, 1} "
                                "(multiples of pi/2); got a non-protocol phase");
    }
    return static_cast<int>(n);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": bad number '" + s + "'");
    }
}

long long parse_int(const std::string& s, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": bad integer '" + s + "'");
    }
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw ParseError("cannot open for writing: " + path);
    }
    out << std::setprecision(17);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open for reading: " + path);
    }
    return in;
}

}  // namespace

void write_counts_csv(const std::string& path,
                      const std::vector<std::pair<PhaseSetting, PhaseSetting>>& settings,
                      const std::vector<CoincidenceRecord>& records) {
    auto out = open_out(path);
    out << "setting,theta1_a,theta2_a,theta1_b,theta2_b,t_a,x_a,t_b,x_b,count\n";
    for (const auto& r : records) {
        if (r.setting_index < 0 || r.setting_index >= static_cast<int>(settings.size())) {
            throw ContractViolation("write_counts_csv: record references unknown setting");
        }
        const auto& [sa, sb] = settings[static_cast<std::size_t>(r.setting_index)];
        out << r.setting_index << ',' << phase_to_int(sa.theta1, "theta1_a") << ','
            << phase_to_int(sa.theta2, "theta2_a") << ',' << phase_to_int(sb.theta1, "theta1_b")
            << ',' << phase_to_int(sb.theta2, "theta2_b") << ',' << r.cell.t_a << ',' << r.cell.x_a
            << ',' << r.cell.t_b << ',' << r.cell.x_b << ',' << r.count << '\n';
    }
}

CountsFile read_counts_csv(const std::string& path) {
    auto in = open_in(path);
    CountsFile file;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue;  // header
        const auto fields = split_csv(line);
        if (fields.size() != 10) {
            throw ParseError("line " + std::to_string(line_no) + ": expected 10 fields, got " +
                             std::to_string(fields.size()));
        }
        const auto setting = parse_int(fields[0], line_no);
        int phases[4];
        for (int i = 0; i < 4; ++i) {
            const auto v = parse_int(fields[static_cast<std::size_t>(1 + i)], line_no);
            if (v != 0 && v != 1) {
                throw ParseError("line " + std::to_string(line_no) +
                                 ": phase must be 0 or 1, got " + std::to_string(v));
            }
            phases[i] = static_cast<int>(v);
        }
        const auto t_a = parse_int(fields[5], line_no);
        const auto x_a = parse_int(fields[6], line_no);
        const auto t_b = parse_int(fields[7], line_no);
        const auto x_b = parse_int(fields[8], line_no);
        const auto count = parse_int(fields[9], line_no);
        if (setting < 0) {
            throw ParseError("line " + std::to_string(line_no) + ": negative setting index");
        }
        if (!outcome_in_range(static_cast<int>(t_a), static_cast<int>(x_a)) ||
            !outcome_in_range(static_cast<int>(t_b), static_cast<int>(x_b))) {
            throw InvalidOutcome("line " + std::to_string(line_no) + ": outcome (t=" +
                                 std::to_string(t_a) + ",x=" + std::to_string(x_a) + ")/(t=" +
                                 std::to_string(t_b) + ",x=" + std::to_string(x_b) +
                                 ") out of range");
        }
        if (count < 0) {
            throw ParseError("line " + std::to_string(line_no) + ": negative count");
        }
        const auto idx = static_cast<std::size_t>(setting);
        if (file.settings.size() <= idx) {
            file.settings.resize(idx + 1);
        }
        const PhaseSetting sa{phases[0] * kHalfPi, phases[1] * kHalfPi};
        const PhaseSetting sb{phases[2] * kHalfPi, phases[3] * kHalfPi};
        file.settings[idx] = {sa, sb};
        file.records.push_back({static_cast<int>(setting),
                                OutcomeCell{static_cast<int>(t_a), static_cast<int>(x_a),
                                            static_cast<int>(t_b), static_cast<int>(x_b)},
                                static_cast<std::uint64_t>(count)});
    }
    if (file.records.empty()) {
        throw InsufficientData("counts CSV contains no records: " + path);
    }
    return file;
}

void write_histograms_csv(const std::string& path, const std::vector<HistogramTrace>& traces) {
    auto out = open_out(path);
    out << "epoch_min,bin_ps,c0,c1,...\n";
    for (const auto& t : traces) {
        out << t.epoch_min << ',' << t.bin_width_s * 1e12;
        for (const auto c : t.counts) {
            out << ',' << c;
        }
        out << '\n';
    }
}

std::vector<HistogramTrace> read_histograms_csv(const std::string& path) {
    auto in = open_in(path);
    std::vector<HistogramTrace> traces;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() < 3) {
            throw ParseError("line " + std::to_string(line_no) + ": histogram row too short");
        }
        HistogramTrace t;
        t.epoch_min = parse_double(fields[0], line_no);
        t.bin_width_s = parse_double(fields[1], line_no) * 1e-12;
        t.counts.reserve(fields.size() - 2);
        for (std::size_t i = 2; i < fields.size(); ++i) {
            const auto c = parse_int(fields[i], line_no);
            if (c < 0) {
                throw ParseError("line " + std::to_string(line_no) + ": negative count");
            }
            t.counts.push_back(static_cast<std::uint64_t>(c));
        }
        traces.push_back(std::move(t));
    }
    return traces;
}

void write_offsets_csv(const std::string& path, const std::vector<OffsetEstimate>& offsets) {
    auto out = open_out(path);
    out << "epoch_min,tau_ps,score\n";
    for (const auto& o : offsets) {
        if (!o.ok) continue;
        out << o.epoch_min << ',' << o.tau_s * 1e12 << ',' << o.score << '\n';
    }
}

std::vector<OffsetEstimate> read_offsets_csv(const std::string& path) {
    auto in = open_in(path);
    std::vector<OffsetEstimate> offsets;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 3) {
            throw ParseError("line " + std::to_string(line_no) + ": expected 3 fields");
        }
        OffsetEstimate o;
        o.epoch_min = parse_double(fields[0], line_no);
        o.tau_s = parse_double(fields[1], line_no) * 1e-12;
        o.score = parse_double(fields[2], line_no);
        o.ok = true;
        offsets.push_back(o);
    }
    return offsets;
}

void write_events_csv(const std::string& path, const std::vector<TimedCoincidence>& events) {
    auto out = open_out(path);
    out << "epoch_min,setting,x_a,time_a_ps,x_b,time_b_ps\n";
    for (const auto& e : events) {
        out << e.epoch_min << ',' << e.setting_index << ',' << e.x_a << ',' << e.time_a_s * 1e12
            << ',' << e.x_b << ',' << e.time_b_s * 1e12 << '\n';
    }
}

std::vector<TimedCoincidence> read_events_csv(const std::string& path) {
    auto in = open_in(path);
    std::vector<TimedCoincidence> events;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 6) {
            throw ParseError("line " + std::to_string(line_no) + ": expected 6 fields");
        }
        TimedCoincidence e;
        e.epoch_min = parse_double(fields[0], line_no);
        e.setting_index = static_cast<int>(parse_int(fields[1], line_no));
        e.x_a = static_cast<int>(parse_int(fields[2], line_no));
        e.time_a_s = parse_double(fields[3], line_no) * 1e-12;
        e.x_b = static_cast<int>(parse_int(fields[4], line_no));
        e.time_b_s = parse_double(fields[5], line_no) * 1e-12;
        events.push_back(e);
    }
    return events;
}

std::string read_text_file(const std::string& path) {
    auto in = open_in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    auto out = open_out(path);
    out << content;
}

}  // namespace timebin
