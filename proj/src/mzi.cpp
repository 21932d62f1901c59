#include "timebin/mzi.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>

namespace timebin {

void CalibrationSet::validate() const {
    for (double eta : {eta1_2bit, eta2_2bit, eta1_1bit, eta_global}) {
        if (!(eta > 0.0) || !std::isfinite(eta)) {
            throw InvalidCalibration("calibration ratios must be strictly positive and finite");
        }
    }
    if (eta_global > 1.5) {
        throw InvalidCalibration("eta_global outside (0, 1.5]");
    }
}

CalibrationSet CalibrationSet::alice_preset() {
    return CalibrationSet{1.009, 0.8300, 1.063, 0.8507};
}

CalibrationSet CalibrationSet::bob_preset() {
    return CalibrationSet{0.8495, 0.8302, 0.9669, 0.4812};
}

std::string CalibrationSet::to_json() const {
    nlohmann::ordered_json j;
    j["eta1_2bit"] = eta1_2bit;
    j["eta2_2bit"] = eta2_2bit;
    j["eta1_1bit"] = eta1_1bit;
    j["eta"] = eta_global;
    return j.dump(2);
}

CalibrationSet CalibrationSet::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("calibration JSON: ") + e.what());
    }
    CalibrationSet c;
    try {
        c.eta1_2bit = j.at("eta1_2bit").get<double>();
        c.eta2_2bit = j.at("eta2_2bit").get<double>();
        c.eta1_1bit = j.at("eta1_1bit").get<double>();
        c.eta_global = j.at("eta").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("calibration JSON: ") + e.what());
    }
    c.validate();
    return c;
}

bool outcome_in_range(int t, int x) {
    if (x == 1) return t >= 0 && t < kSlotsDetector1;
    if (x == 2) return t >= 0 && t < kSlotsDetector2;
    return false;
}

Matrix mzi_2bit(int port, double theta2, double eta) {
    if (port != 1 && port != 2) {
        throw InvalidOutcome("mzi_2bit: port must be 1 or 2");
    }
    if (!(eta > 0.0) || !std::isfinite(eta)) {
        throw InvalidCalibration("mzi_2bit: eta must be strictly positive");
    }
    const double norm = 1.0 / std::sqrt(2.0 * (1.0 + eta));
    const double sign = (port == 1) ? 1.0 : -1.0;
    const Complex long_amp = std::sqrt(eta) * std::polar(1.0, theta2) * norm;
    Matrix m = Matrix::Zero(kQuditDim + 2, kQuditDim);
    for (int k = 0; k < kQuditDim; ++k) {
        m(k, k) = sign * norm;
        m(k + 2, k) = long_amp;
    }
    return m;
}

Matrix mzi_1bit(double theta1, double eta) {
    if (!(eta > 0.0) || !std::isfinite(eta)) {
        throw InvalidCalibration("mzi_1bit: eta must be strictly positive");
    }
    const double norm = 1.0 / std::sqrt(2.0 * (1.0 + eta));
    const Complex long_amp = std::sqrt(eta) * std::polar(1.0, theta1) * norm;
    Matrix m = Matrix::Zero(kSlotsDetector1, kSlotsDetector2);
    for (int k = 0; k < kSlotsDetector2; ++k) {
        m(k, k) = norm;
        m(k + 1, k) = long_amp;
    }
    return m;
}

MeasurementOperator build_E(int t, int x, const PhaseSetting& setting,
                            const CalibrationSet& calib) {
    calib.validate();
    if (!outcome_in_range(t, x)) {
        throw InvalidOutcome("build_E: outcome (t=" + std::to_string(t) +
                             ", x=" + std::to_string(x) + ") out of range");
    }
    MeasurementOperator op;
    op.t = t;
    op.x = x;
    op.setting = setting;
    if (x == 1) {
        const Matrix chain =
            mzi_1bit(setting.theta1, calib.eta1_1bit) * mzi_2bit(1, setting.theta2, calib.eta1_2bit);
        // E = eta * chain^dag |t><t| chain = v v^dag with v = sqrt(eta) chain^dag e_t
        op.amplitude = std::sqrt(calib.eta_global) * chain.row(t).adjoint();
    } else {
        const Matrix m2 = mzi_2bit(2, setting.theta2, calib.eta2_2bit);
        op.amplitude = m2.row(t).adjoint();
    }
    op.matrix = op.amplitude * op.amplitude.adjoint();
    return op;
}

std::vector<MeasurementOperator> enumerate_outcomes(const PhaseSetting& setting,
                                                    const CalibrationSet& calib) {
    std::vector<MeasurementOperator> out;
    out.reserve(kOutcomesPerReceiver);
    for (int t = 0; t < kSlotsDetector1; ++t) {
        out.push_back(build_E(t, 1, setting, calib));
    }
    for (int t = 0; t < kSlotsDetector2; ++t) {
        out.push_back(build_E(t, 2, setting, calib));
    }
    return out;
}

Matrix joint_operator(const MeasurementOperator& ea, const MeasurementOperator& eb) {
    if (ea.matrix.rows() != kQuditDim || eb.matrix.rows() != kQuditDim) {
        throw InvalidDimension("joint_operator: operands must be 4x4");
    }
    return tensor(ea.matrix, eb.matrix);
}

const std::vector<MeasurementOperator>& OutcomeCache::get(const PhaseSetting& setting,
                                                          const CalibrationSet& calib) {
    const Key key{setting.theta1, setting.theta2, calib.eta1_2bit,
                  calib.eta2_2bit, calib.eta1_1bit, calib.eta_global};
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
        it = cache_.emplace(key, enumerate_outcomes(setting, calib)).first;
    }
    return it->second;
}

}  // namespace timebin
