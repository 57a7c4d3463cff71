#include "gascope/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "gascope/errors.hpp"

namespace gascope::metrics {

void PeakWindow::validate() const {
    if (hours.empty()) throw ConfigError("peak window must be nonempty");
    if (static_cast<int>(hours.size()) >= 24)
        throw ConfigError("peak window must be a strict subset of 0..23");
    for (int h : hours)
        if (h < 0 || h > 23) throw ConfigError("peak window hour out of range");
}

PssResult pss(const std::vector<const TxRecord*>& firm_records, const PeakWindow& window) {
    window.validate();
    if (firm_records.empty()) throw MetricError("PSS of an empty firm");

    PssResult r;
    r.n_total = static_cast<i64>(firm_records.size());
    for (const auto* rec : firm_records)
        window.contains(rec->hour_utc) ? ++r.n_peak : ++r.n_off;
    r.s_off = static_cast<double>(r.n_off) / static_cast<double>(r.n_total);
    r.pss = r.s_off - static_cast<double>(window.off_count()) / 24.0;
    return r;
}

std::set<int> low_cost_hours_from_fit(const econ::FitResult& fit) {
    std::set<int> hours;
    for (int h = 0; h < 24; ++h) {
        const std::string term = "h" + std::to_string(h);
        auto it = fit.coef.find(term);
        if (it != fit.coef.end() && it->second < 0.0) hours.insert(h);
    }
    return hours;
}

double avoidance_ratio(const std::vector<const TxRecord*>& firm_records,
                       const std::vector<const TxRecord*>& pooled_records,
                       const std::set<int>& low_cost_hours) {
    if (firm_records.empty()) throw MetricError("avoidance ratio of an empty firm");
    if (pooled_records.empty()) throw MetricError("avoidance ratio needs pooled records");

    auto share = [&](const std::vector<const TxRecord*>& recs) {
        i64 in = 0;
        for (const auto* r : recs)
            if (low_cost_hours.count(r->hour_utc)) ++in;
        return static_cast<double>(in) / static_cast<double>(recs.size());
    };
    const double pooled = share(pooled_records);
    if (pooled == 0.0) throw MetricError("pooled low-cost-hour share is zero");
    return share(firm_records) / pooled;
}

std::optional<double> fee_savings(const std::vector<const TxRecord*>& firm_records,
                                  const PeakWindow& window, std::string* reason) {
    window.validate();
    double sum_peak = 0, sum_off = 0;
    i64 n_peak = 0, n_off = 0;
    for (const auto* r : firm_records) {
        if (window.contains(r->hour_utc)) {
            sum_peak += r->fee_usd();
            ++n_peak;
        } else {
            sum_off += r->fee_usd();
            ++n_off;
        }
    }
    if (n_peak == 0 || n_off == 0) {
        if (reason)
            *reason = n_peak == 0 ? "no peak-window transactions" : "no off-peak transactions";
        return std::nullopt;
    }
    const double mean_peak = sum_peak / static_cast<double>(n_peak);
    const double mean_off = sum_off / static_cast<double>(n_off);
    if (mean_peak == 0.0) {
        if (reason) *reason = "peak-window mean fee is zero";
        return std::nullopt;
    }
    return (mean_peak - mean_off) / mean_peak;
}

FloorResult residual_floor(const std::vector<const TxRecord*>& firm_records) {
    if (firm_records.empty()) throw MetricError("residual floor of an empty firm");

    std::array<double, 24> sums{};
    std::array<i64, 24> counts{};
    double total = 0;
    for (const auto* r : firm_records) {
        sums[static_cast<std::size_t>(r->hour_utc)] += r->fee_usd();
        ++counts[static_cast<std::size_t>(r->hour_utc)];
        total += r->fee_usd();
    }

    FloorResult out;
    out.c_actual = total;
    double best = 0;
    for (int h = 0; h < 24; ++h) {  // ties break toward the lowest hour index
        if (counts[static_cast<std::size_t>(h)] == 0) continue;
        const double mean =
            sums[static_cast<std::size_t>(h)] / static_cast<double>(counts[static_cast<std::size_t>(h)]);
        if (out.cheapest_hour < 0 || mean < best) {
            best = mean;
            out.cheapest_hour = h;
        }
    }
    out.mean_at_cheapest = best;
    out.c_cf = static_cast<double>(firm_records.size()) * best;
    out.floor_usd = std::max(0.0, out.c_actual - out.c_cf);
    if (out.c_actual > 0) out.floor_pct = out.floor_usd / out.c_actual;
    return out;
}

std::optional<WeekdayWeekendResult> weekday_weekend(
    const std::vector<const TxRecord*>& firm_records, const Panel& panel,
    std::string* omit_reason) {
    std::vector<double> gas_mf, gas_wke, phi_mf, phi_wke;
    for (const auto* r : firm_records) {
        auto it = panel.blocks.find(r->block_number);
        const double phi = (it != panel.blocks.end() && it->second.enriched())
                               ? it->second.fullness_proxy()
                               : 0.0;
        if (r->is_weekend()) {
            gas_wke.push_back(r->fee_usd());
            phi_wke.push_back(phi);
        } else {
            gas_mf.push_back(r->fee_usd());
            phi_mf.push_back(phi);
        }
    }
    if (gas_mf.size() < 2 || gas_wke.size() < 2) {
        if (omit_reason)
            *omit_reason = gas_wke.size() < 2 ? "no weekend transactions"
                                              : "no weekday transactions";
        return std::nullopt;
    }

    WeekdayWeekendResult r;
    r.n_weekday = static_cast<i64>(gas_mf.size());
    r.n_weekend = static_cast<i64>(gas_wke.size());
    r.t_gas = econ::welch_t(gas_mf, gas_wke);
    r.t_phi = econ::welch_t(phi_mf, phi_wke);
    r.mean_gas_weekday = r.t_gas.mean_a;
    r.mean_gas_weekend = r.t_gas.mean_b;
    r.mean_phi_weekday = r.t_phi.mean_a;
    r.mean_phi_weekend = r.t_phi.mean_b;
    r.delta_phi = r.mean_phi_weekday - r.mean_phi_weekend;
    if (r.mean_gas_weekend == 0.0) {
        if (omit_reason) *omit_reason = "weekend mean fee is zero";
        return std::nullopt;
    }
    r.premium = (r.mean_gas_weekday - r.mean_gas_weekend) / r.mean_gas_weekend;
    return r;
}

FirmScorecard scorecard(const Panel& panel, const std::string& firm_id,
                        const econ::FitResult& pooled_fit,
                        const econ::FitResult* firm_fit, const PeakWindow& window,
                        const PermutationConfig& perm) {
    const auto firm_recs = panel.firm_records(firm_id);
    if (firm_recs.empty()) throw MetricError("firm has no records: " + firm_id);

    FirmScorecard card;
    card.firm_id = firm_id;

    const PssResult p = pss(firm_recs, window);
    card.n_total = p.n_total;
    card.n_peak = p.n_peak;
    card.n_off = p.n_off;
    card.s_off = p.s_off;
    card.pss = p.pss;

    std::vector<const TxRecord*> pooled;
    pooled.reserve(panel.records.size());
    for (const auto& r : panel.records) pooled.push_back(&r);
    try {
        card.avoidance_ratio =
            avoidance_ratio(firm_recs, pooled, low_cost_hours_from_fit(pooled_fit));
    } catch (const MetricError& e) {
        card.not_computable["avoidance_ratio"] = e.what();
    }

    std::string reason;
    card.fee_savings = fee_savings(firm_recs, window, &reason);
    if (!card.fee_savings) card.not_computable["fee_savings"] = reason;

    const FloorResult f = residual_floor(firm_recs);
    card.cheapest_hour = f.cheapest_hour;
    card.mean_gas_cheapest = f.mean_at_cheapest;
    card.c_actual = f.c_actual;
    card.c_cf = f.c_cf;
    card.floor_usd = f.floor_usd;
    card.floor_pct = f.floor_pct;
    if (!f.floor_pct) card.not_computable["floor_pct"] = "actual cost is zero";

    {
        double phi_sum = 0;
        i64 phi_n = 0;
        for (const auto* r : firm_recs) {
            if (r->hour_utc != f.cheapest_hour) continue;
            auto it = panel.blocks.find(r->block_number);
            if (it != panel.blocks.end() && it->second.enriched()) {
                phi_sum += it->second.fullness_proxy();
                ++phi_n;
            }
        }
        if (phi_n > 0) card.fullness_at_cheapest = phi_sum / static_cast<double>(phi_n);
        else card.not_computable["fullness_at_cheapest"] = "no enriched blocks at cheapest hour";
    }

    if (firm_fit) {
        auto it = firm_fit->coef.find("phi_br");
        if (it == firm_fit->coef.end()) it = firm_fit->coef.find("phi_s");
        if (it != firm_fit->coef.end()) card.pass_through = it->second;
        else card.not_computable["pass_through"] = "firm fit has no congestion term";
    } else {
        card.not_computable["pass_through"] = "firm-level fit unavailable";
    }

    std::vector<int> hours;
    hours.reserve(firm_recs.size());
    for (const auto* r : firm_recs) hours.push_back(r->hour_utc);
    const double off_benchmark = static_cast<double>(window.off_count()) / 24.0;
    auto stat = [&window, off_benchmark](std::span<const int> hs) {
        i64 off = 0;
        for (int h : hs)
            if (!window.contains(h)) ++off;
        return static_cast<double>(off) / static_cast<double>(hs.size()) - off_benchmark;
    };
    card.pss_pvalue =
        econ::permutation_null(hours, stat, perm.replications, perm.seed, "pss").p_value;

    return card;
}

}  // namespace gascope::metrics
