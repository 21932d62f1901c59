#pragma once

// Measurement operators induced by the cascaded 2-bit and 1-bit delay
// Mach-Zehnder interferometers with time-slot post-selection.

#include <array>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "timebin/qudit.hpp"

namespace timebin {

inline constexpr int kQuditDim = 4;
// Detector 1 sits behind both MZIs (7 slots); detector 2 behind the
// 2-bit MZI only (6 slots).
inline constexpr int kSlotsDetector1 = 7;
inline constexpr int kSlotsDetector2 = 6;
inline constexpr int kOutcomesPerReceiver = kSlotsDetector1 + kSlotsDetector2;

// Short/long transmittance ratios of the MZIs plus the global ratio
// applied to the detector-1 chain.
struct CalibrationSet {
    double eta1_2bit = 1.0;
    double eta2_2bit = 1.0;
    double eta1_1bit = 1.0;
    double eta_global = 1.0;

    void validate() const;

    static CalibrationSet alice_preset();
    static CalibrationSet bob_preset();

    std::string to_json() const;
    static CalibrationSet from_json(const std::string& text);
};

struct PhaseSetting {
    double theta1 = 0.0;
    double theta2 = 0.0;

    friend bool operator<(const PhaseSetting& a, const PhaseSetting& b) {
        if (a.theta1 != b.theta1) return a.theta1 < b.theta1;
        return a.theta2 < b.theta2;
    }
    friend bool operator==(const PhaseSetting& a, const PhaseSetting& b) {
        return a.theta1 == b.theta1 && a.theta2 == b.theta2;
    }
};

// Rank-<=1 POVM element E = amplitude * amplitude^dagger on the 4-dim
// input space, tagged with its outcome cell (t, x).
struct MeasurementOperator {
    int t = 0;
    int x = 1;
    PhaseSetting setting;
    Vector amplitude;  // 4-vector, includes the sqrt(eta_global) factor for x=1
    Matrix matrix;     // amplitude * amplitude^dagger
};

bool outcome_in_range(int t, int x);

// Transfer matrix of the 2-bit delay MZI, 6x4. Column k carries
// (s|k> + sqrt(eta) e^{i theta2} |k+2>) / sqrt(2(1+eta)) with s = +1 for
// port 1 and -1 for port 2.
Matrix mzi_2bit(int port, double theta2, double eta);

// Transfer matrix of the 1-bit delay MZI, 7x6.
Matrix mzi_1bit(double theta1, double eta);

MeasurementOperator build_E(int t, int x, const PhaseSetting& setting,
                            const CalibrationSet& calib);

// All 13 outcomes of one receiver: t = 0..6 at detector 1 then t = 0..5
// at detector 2.
std::vector<MeasurementOperator> enumerate_outcomes(const PhaseSetting& setting,
                                                    const CalibrationSet& calib);

// Kronecker product E_a (x) E_b, Alice-major ordering.
Matrix joint_operator(const MeasurementOperator& ea, const MeasurementOperator& eb);

// Memoizes enumerate_outcomes per (setting, calibration). Safe for
// concurrent readers; population is serialized by an internal mutex.
class OutcomeCache {
public:
    const std::vector<MeasurementOperator>& get(const PhaseSetting& setting,
                                                const CalibrationSet& calib);

private:
    using Key = std::array<double, 6>;
    std::map<Key, std::vector<MeasurementOperator>> cache_;
    std::mutex mutex_;
};

}  // namespace timebin
