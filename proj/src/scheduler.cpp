#include "gascope/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "gascope/csv.hpp"
#include "gascope/errors.hpp"

namespace gascope::sched {

const char* to_string(Regime r) {
    switch (r) {
        case Regime::I: return "I";
        case Regime::II: return "II";
        case Regime::III: return "III";
        case Regime::IV: return "IV";
    }
    return "IV";
}

const char* to_string(Action a) {
    switch (a) {
        case Action::SCHEDULE_OFF_PEAK: return "SCHEDULE_OFF_PEAK";
        case Action::MONITOR_AND_BATCH: return "MONITOR_AND_BATCH";
        case Action::PROVISION_BUDGET: return "PROVISION_BUDGET";
        case Action::ACCEPT_MARKET: return "ACCEPT_MARKET";
    }
    return "ACCEPT_MARKET";
}

ForwardCurve forward_curve(const econ::FitResult& fit, const metrics::PeakWindow& window) {
    window.validate();
    if (!fit.has_term("intercept"))
        throw ConfigError("forward curve needs a fitted intercept");
    bool any_hour = false;
    for (int h = 0; h < 24; ++h)
        if (fit.has_term("h" + std::to_string(h))) any_hour = true;
    if (!any_hour) throw ConfigError("forward curve needs hour terms in the fit");

    ForwardCurve curve;
    curve.peak_window = window;
    curve.baseline_hour = fit.spec.baseline_hour;
    curve.baseline_usd = fit.coef.at("intercept");
    curve.source_fit = std::string(fit.spec.include_fullness ? "fullness" : "base") + ";n=" +
                       std::to_string(fit.n);

    for (int h = 0; h < 24; ++h) {
        auto& pt = curve.hours[static_cast<std::size_t>(h)];
        if (h == curve.baseline_hour) {
            pt.expected_fee_usd = curve.baseline_usd;
            pt.t_stat = 0.0;
            pt.estimable = true;
            continue;
        }
        const std::string term = "h" + std::to_string(h);
        if (fit.has_term(term)) {
            pt.expected_fee_usd = curve.baseline_usd + fit.coef.at(term);
            pt.t_stat = fit.t.at(term);
            pt.estimable = true;
        }
        // hours in dropped_terms stay flagged inestimable
    }

    double premium = 0.0;
    bool have = false;
    for (int h : window.hours) {
        if (h == curve.baseline_hour) continue;
        const std::string term = "h" + std::to_string(h);
        if (!fit.has_term(term)) continue;
        const double beta = fit.coef.at(term);
        if (!have || beta > premium) {
            premium = beta;
            have = true;
        }
    }
    curve.peak_premium_usd = have ? premium : 0.0;
    return curve;
}

Regime classify_regime(const TxProfile& profile, double gas_threshold, bool* borderline) {
    if (gas_threshold <= 0) throw ConfigError("gas threshold must be positive");
    const bool high = profile.gas_estimate > gas_threshold;  // strict
    if (borderline) {
        *borderline =
            std::fabs(profile.gas_estimate - gas_threshold) / gas_threshold < 0.1;
    }
    if (profile.deferrable) return high ? Regime::I : Regime::II;
    return high ? Regime::III : Regime::IV;
}

bool defer_decision(double fee_delta_usd, double kappa_usd) {
    return fee_delta_usd > kappa_usd;
}

namespace {

// Hours worth submitting in: coefficient negative or statistically
// indistinguishable from zero at 5%.
std::vector<int> qualifying_hours(const ForwardCurve& curve) {
    std::vector<int> hours;
    for (int h = 0; h < 24; ++h) {
        const auto& pt = curve.hours[static_cast<std::size_t>(h)];
        if (!pt.estimable || h == curve.baseline_hour) continue;
        const double beta = pt.expected_fee_usd - curve.baseline_usd;
        if (beta < 0.0 || std::fabs(pt.t_stat) < 1.959963985) hours.push_back(h);
    }
    std::sort(hours.begin(), hours.end(), [&](int a, int b) {
        const double fa = curve.hours[static_cast<std::size_t>(a)].expected_fee_usd;
        const double fb = curve.hours[static_cast<std::size_t>(b)].expected_fee_usd;
        if (fa != fb) return fa < fb;
        return a < b;
    });
    return hours;
}

int global_minimum_hour(const ForwardCurve& curve) {
    int best = -1;
    for (int h = 0; h < 24; ++h) {
        const auto& pt = curve.hours[static_cast<std::size_t>(h)];
        if (!pt.estimable) continue;
        if (best < 0 ||
            pt.expected_fee_usd < curve.hours[static_cast<std::size_t>(best)].expected_fee_usd)
            best = h;
    }
    if (best < 0) throw ConfigError("forward curve has no estimable hours");
    return best;
}

}  // namespace

RegimeRecommendation recommend(const TxProfile& profile, const ForwardCurve& curve,
                               double gas_threshold) {
    RegimeRecommendation rec;
    rec.regime = classify_regime(profile, gas_threshold, &rec.borderline);

    switch (rec.regime) {
        case Regime::I:
        case Regime::II: {
            rec.action = rec.regime == Regime::I ? Action::SCHEDULE_OFF_PEAK
                                                 : Action::MONITOR_AND_BATCH;
            rec.recommended_hours = qualifying_hours(curve);
            if (rec.recommended_hours.empty()) {
                rec.recommended_hours.push_back(global_minimum_hour(curve));
                rec.warnings.push_back(
                    "no insignificant or negative hours; falling back to the cheapest hour");
            }
            const int best = rec.recommended_hours.front();
            const double best_beta =
                curve.hours[static_cast<std::size_t>(best)].expected_fee_usd -
                curve.baseline_usd;
            rec.expected_saving_per_tx = curve.peak_premium_usd - best_beta;
            if (rec.regime == Regime::II && profile.monthly_volume)
                rec.monthly_saving =
                    rec.expected_saving_per_tx * static_cast<double>(*profile.monthly_volume);
            break;
        }
        case Regime::III:
            rec.action = Action::PROVISION_BUDGET;
            rec.provisioning_surcharge = curve.peak_premium_usd;
            break;
        case Regime::IV:
            rec.action = Action::ACCEPT_MARKET;
            rec.expected_saving_per_tx = 0.0;
            break;
    }
    return rec;
}

void write_curve(std::ostream& out, const ForwardCurve& curve, char delimiter) {
    csv::write_row(out, {"hour_utc", "expected_fee_usd", "t", "estimable", "in_peak_window"},
                   delimiter);
    char fee[32], tval[32];
    for (int h = 0; h < 24; ++h) {
        const auto& pt = curve.hours[static_cast<std::size_t>(h)];
        std::snprintf(fee, sizeof(fee), "%.6f", pt.expected_fee_usd);
        std::snprintf(tval, sizeof(tval), "%.3f", pt.t_stat);
        csv::write_row(out,
                       {std::to_string(h), pt.estimable ? fee : "", pt.estimable ? tval : "",
                        pt.estimable ? "1" : "0", curve.peak_window.contains(h) ? "1" : "0"},
                       delimiter);
    }
}

}  // namespace gascope::sched
