#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gascope/econometrics.hpp"
#include "gascope/metrics.hpp"

namespace gascope::sched {

struct TxProfile {
    double gas_estimate = 0;  // same unit as the classification threshold
    bool deferrable = true;
    double kappa_usd = 0;  // operational cost of delaying one transaction
    std::optional<int> deadline_window_hours;
    std::optional<i64> monthly_volume;
};

struct HourPoint {
    double expected_fee_usd = 0;
    double t_stat = 0;
    bool estimable = false;
};

// Per-hour expected fee derived from a fitted model: baseline intercept plus
// the hour coefficient.
struct ForwardCurve {
    std::array<HourPoint, 24> hours{};
    std::string source_fit;
    int baseline_hour = 23;
    double baseline_usd = 0;      // fitted intercept
    double peak_premium_usd = 0;  // max hour coefficient inside the peak window
    metrics::PeakWindow peak_window;
};

enum class Regime { I, II, III, IV };
enum class Action { SCHEDULE_OFF_PEAK, MONITOR_AND_BATCH, PROVISION_BUDGET, ACCEPT_MARKET };

const char* to_string(Regime r);
const char* to_string(Action a);

struct RegimeRecommendation {
    Regime regime = Regime::IV;
    bool borderline = false;
    Action action = Action::ACCEPT_MARKET;
    std::vector<int> recommended_hours;  // ordered by (expected fee, hour index)
    double expected_saving_per_tx = 0;   // USD vs the peak hour
    std::optional<double> monthly_saving;  // volume-scaled, selective shaving only
    double provisioning_surcharge = 0;   // USD per peak-window tx, provisioning only
    std::vector<std::string> warnings;
};

ForwardCurve forward_curve(const econ::FitResult& fit,
                           const metrics::PeakWindow& window = {});

// 2x2 of gas intensity (strictly above threshold = high) and deferrability.
// Borderline when the estimate is within 10% of the threshold.
Regime classify_regime(const TxProfile& profile, double gas_threshold,
                       bool* borderline = nullptr);

// Defer iff the fee saved strictly exceeds the cost of waiting.
bool defer_decision(double fee_delta_usd, double kappa_usd);

RegimeRecommendation recommend(const TxProfile& profile, const ForwardCurve& curve,
                               double gas_threshold);

// 24-row delimited export of the curve for external plotting.
void write_curve(std::ostream& out, const ForwardCurve& curve, char delimiter = ',');

}  // namespace gascope::sched
