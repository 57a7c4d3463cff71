#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gascope/econometrics.hpp"
#include "gascope/types.hpp"

namespace gascope::metrics {

struct PeakWindow {
    std::set<int> hours = {11, 12, 13, 14, 15, 16, 17, 18};  // UTC

    bool contains(int h) const { return hours.count(h) != 0; }
    int off_count() const { return 24 - static_cast<int>(hours.size()); }
    void validate() const;  // nonempty strict subset of 0..23
};

struct PssResult {
    i64 n_total = 0, n_peak = 0, n_off = 0;
    double s_off = 0;
    double pss = 0;  // s_off - |off hours| / 24
};

PssResult pss(const std::vector<const TxRecord*>& firm_records, const PeakWindow& window);

// Firm low-cost-hour share over the pooled low-cost-hour share. The low-cost
// set comes from the pooled fit: hours with a negative coefficient.
double avoidance_ratio(const std::vector<const TxRecord*>& firm_records,
                       const std::vector<const TxRecord*>& pooled_records,
                       const std::set<int>& low_cost_hours);

std::set<int> low_cost_hours_from_fit(const econ::FitResult& pooled_fit);

// (mean_peak - mean_off) / mean_peak; nullopt with a reason when either side
// is empty.
std::optional<double> fee_savings(const std::vector<const TxRecord*>& firm_records,
                                  const PeakWindow& window, std::string* reason = nullptr);

struct FloorResult {
    int cheapest_hour = -1;          // argmin of hourly mean fee, lowest index on ties
    double mean_at_cheapest = 0;     // USD
    double c_actual = 0;             // USD, observed total
    double c_cf = 0;                 // USD, counterfactual total at the cheapest hour
    double floor_usd = 0;            // c_actual - c_cf, >= 0 by construction
    std::optional<double> floor_pct; // nullopt when c_actual == 0
};

FloorResult residual_floor(const std::vector<const TxRecord*>& firm_records);

struct WeekdayWeekendResult {
    i64 n_weekday = 0, n_weekend = 0;
    double mean_gas_weekday = 0, mean_gas_weekend = 0;
    double premium = 0;  // (mean_mf - mean_wke) / mean_wke
    double mean_phi_weekday = 0, mean_phi_weekend = 0;
    double delta_phi = 0;
    econ::WelchResult t_gas;
    econ::WelchResult t_phi;
};

// nullopt with an omission reason when either side lacks the two
// observations the Welch tests need.
std::optional<WeekdayWeekendResult> weekday_weekend(
    const std::vector<const TxRecord*>& firm_records, const Panel& panel,
    std::string* omit_reason = nullptr);

struct PermutationConfig {
    int replications = 10000;
    std::uint64_t seed = 0;
};

struct FirmScorecard {
    std::string firm_id;
    i64 n_total = 0, n_peak = 0, n_off = 0;
    double s_off = 0;
    double pss = 0;
    std::optional<double> avoidance_ratio;
    std::optional<double> fee_savings;
    int cheapest_hour = -1;
    double mean_gas_cheapest = 0;
    double c_actual = 0, c_cf = 0, floor_usd = 0;
    std::optional<double> floor_pct;
    std::optional<double> fullness_at_cheapest;  // mean proxy at the cheapest hour
    std::optional<double> pass_through;          // firm-level congestion coefficient
    double pss_pvalue = 1.0;
    std::map<std::string, std::string> not_computable;  // field -> reason
};

// Assembles one firm's scorecard; metric failures become reasons in
// not_computable rather than partial silence.
FirmScorecard scorecard(const Panel& panel, const std::string& firm_id,
                        const econ::FitResult& pooled_fit,
                        const econ::FitResult* firm_fit, const PeakWindow& window,
                        const PermutationConfig& perm);

}  // namespace gascope::metrics
