#include "gascope/feesim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "gascope/congestion.hpp"
#include "gascope/csv.hpp"
#include "gascope/errors.hpp"
#include "gascope/rng.hpp"

namespace gascope::sim {

void DemandParams::validate() const {
    for (double r : txn_rate_per_block)
        if (r < 0) throw ConfigError("transactional rate must be >= 0");
    for (double r : burst_intensity_per_block)
        if (r < 0) throw ConfigError("burst intensity must be >= 0");
    if (burst_size_mean < 0) throw ConfigError("burst size must be >= 0");
    if (txn_gas <= 0 || spec_gas <= 0) throw ConfigError("tx gas must be positive");
    if (txn_max_fee_wei < txn_priority_fee_wei || spec_max_fee_wei < spec_priority_fee_wei)
        throw ConfigError("max fee must cover the priority fee");
}

DemandParams default_diurnal_params() {
    DemandParams p;
    p.txn_rate_per_block.fill(40.0);
    // In-window burst demand must overshoot the 15M gas target, not meet it:
    // 25 bursts x ~5 txs x 250k gas > the 30M limit, so peak blocks run full
    // and the base fee climbs until the speculative cutoff bites.
    p.burst_intensity_per_block.fill(0.1);
    for (int h = 11; h <= 18; ++h)
        p.burst_intensity_per_block[static_cast<std::size_t>(h)] = 25.0;
    return p;
}

i64 base_fee_update(const FeeMarketState& state) {
    const i128 delta = i128(state.base_fee_wei) * (state.last_gas_used - state.gas_target) /
                       (i128(8) * state.gas_target);
    i128 next = i128(state.base_fee_wei) + delta;
    if (next < 1) next = 1;
    return static_cast<i64>(next);
}

std::optional<i128> tx_cost(const SimTx& tx, i64 base_fee_wei) {
    if (tx.max_fee_wei < base_fee_wei) return std::nullopt;  // not included
    const i64 tip = std::min(tx.priority_fee_wei, tx.max_fee_wei - base_fee_wei);
    return i128(tx.gas) * (i128(base_fee_wei) + tip);
}

const char* to_string(Policy p) {
    switch (p) {
        case Policy::UNIFORM: return "UNIFORM";
        case Policy::PEAK_SHAVE: return "PEAK_SHAVE";
        case Policy::CHEAPEST_HOUR: return "CHEAPEST_HOUR";
    }
    return "UNIFORM";
}

Trajectory simulate(const DemandParams& params, int hours, int blocks_per_hour,
                    std::uint64_t seed) {
    if (hours < 1) throw ConfigError("simulation needs at least one hour");
    if (blocks_per_hour < 1) throw ConfigError("blocks per hour must be >= 1");
    params.validate();

    Trajectory traj;
    traj.blocks_per_hour = blocks_per_hour;
    traj.seed = seed;

    FeeMarketState state;
    traj.gas_target = state.gas_target;
    traj.gas_limit = state.gas_limit;

    Xoshiro256ss rng(derive_seed(seed, 0));
    std::vector<SimTx> arrivals;

    const i64 total_blocks = static_cast<i64>(hours) * blocks_per_hour;
    for (i64 b = 0; b < total_blocks; ++b) {
        const int hour = static_cast<int>((b / blocks_per_hour) % 24);
        arrivals.clear();

        const int n_txn = rng.poisson(params.txn_rate_per_block[static_cast<std::size_t>(hour)]);
        for (int i = 0; i < n_txn; ++i)
            arrivals.push_back(SimTx{DemandClass::T, params.txn_gas,
                                     params.txn_priority_fee_wei, params.txn_max_fee_wei, hour});

        // Speculative bursts: price-elastic, so they stop submitting entirely
        // once the base fee reaches their willingness to pay.
        if (state.base_fee_wei < params.spec_max_fee_wei) {
            const int n_bursts =
                rng.poisson(params.burst_intensity_per_block[static_cast<std::size_t>(hour)]);
            for (int i = 0; i < n_bursts; ++i) {
                const int size = 1 + rng.poisson(params.burst_size_mean);
                for (int k = 0; k < size; ++k)
                    arrivals.push_back(SimTx{DemandClass::S, params.spec_gas,
                                             params.spec_priority_fee_wei,
                                             params.spec_max_fee_wei, hour});
            }
        }

        // Builder admits eligible txs by descending tip, maximal prefix that
        // fits under the gas limit.
        std::stable_sort(arrivals.begin(), arrivals.end(), [](const SimTx& a, const SimTx& b) {
            return a.priority_fee_wei > b.priority_fee_wei;
        });

        BlockTrace trace;
        trace.block = b;
        trace.hour = hour;
        trace.base_fee_wei = state.base_fee_wei;
        i128 reward = 0;
        for (const auto& tx : arrivals) {
            const bool eligible = tx.max_fee_wei >= state.base_fee_wei;
            const bool fits = trace.gas_used + tx.gas <= state.gas_limit;
            const bool included = eligible && fits;
            traj.inclusion_log.push_back(
                {b, tx.cls, tx.gas, tx.priority_fee_wei, tx.max_fee_wei, included});
            if (!eligible) continue;
            if (!fits) break;  // prefix semantics: stop at the first non-fit
            trace.gas_used += tx.gas;
            (tx.cls == DemandClass::T ? trace.gas_t : trace.gas_s) += tx.gas;
            const i64 tip = std::min(tx.priority_fee_wei, tx.max_fee_wei - state.base_fee_wei);
            reward += i128(tx.gas) * tip;
        }
        trace.reward_wei = static_cast<i64>(std::min<i128>(
            reward, std::numeric_limits<i64>::max()));
        traj.blocks.push_back(trace);

        state.last_gas_used = trace.gas_used;
        state.base_fee_wei = base_fee_update(state);
        ++state.block_index;
    }
    return traj;
}

std::array<double, 24> Trajectory::mean_base_fee_by_hour() const {
    std::array<double, 24> sum{};
    std::array<i64, 24> count{};
    for (const auto& b : blocks) {
        sum[static_cast<std::size_t>(b.hour)] += static_cast<double>(b.base_fee_wei);
        ++count[static_cast<std::size_t>(b.hour)];
    }
    std::array<double, 24> mean{};
    for (int h = 0; h < 24; ++h)
        mean[static_cast<std::size_t>(h)] =
            count[static_cast<std::size_t>(h)] > 0
                ? sum[static_cast<std::size_t>(h)] / static_cast<double>(count[static_cast<std::size_t>(h)])
                : 0.0;
    return mean;
}

PolicyEval evaluate_policy(const Trajectory& trajectory, Policy policy,
                           const std::set<int>& off_window, const std::vector<SimTx>& workload,
                           std::uint64_t seed) {
    if (trajectory.blocks.empty()) throw ConfigError("empty trajectory");
    const int traj_hours = std::min(trajectory.hours(), 24);
    if (traj_hours < 1) throw ConfigError("trajectory shorter than one hour");

    std::vector<int> candidate_hours;
    switch (policy) {
        case Policy::UNIFORM:
            for (int h = 0; h < traj_hours; ++h) candidate_hours.push_back(h);
            break;
        case Policy::PEAK_SHAVE:
            for (int h = 0; h < traj_hours; ++h)
                if (off_window.count(h)) candidate_hours.push_back(h);
            if (candidate_hours.empty())
                throw ConfigError("peak-shave policy window is empty over the trajectory");
            break;
        case Policy::CHEAPEST_HOUR: {
            const auto mean = trajectory.mean_base_fee_by_hour();
            int best = 0;
            for (int h = 1; h < traj_hours; ++h)
                if (mean[static_cast<std::size_t>(h)] < mean[static_cast<std::size_t>(best)]) best = h;
            candidate_hours.push_back(best);
            break;
        }
    }

    // Blocks grouped by hour-of-day for O(1) block draws.
    std::vector<std::vector<std::size_t>> blocks_by_hour(24);
    for (std::size_t i = 0; i < trajectory.blocks.size(); ++i)
        blocks_by_hour[static_cast<std::size_t>(trajectory.blocks[i].hour)].push_back(i);

    Xoshiro256ss rng(derive_seed(seed, 1));
    PolicyEval eval;
    eval.policy = policy;
    i128 total = 0;
    for (const auto& tx : workload) {
        const int hour = candidate_hours[static_cast<std::size_t>(
            rng.below(candidate_hours.size()))];
        const auto& hour_blocks = blocks_by_hour[static_cast<std::size_t>(hour)];
        if (hour_blocks.empty()) throw ConfigError("trajectory does not cover policy hour");
        std::size_t at = hour_blocks[static_cast<std::size_t>(rng.below(hour_blocks.size()))];

        // Wait for the first block whose base fee the cap covers.
        std::optional<i128> cost;
        for (std::size_t step = 0; step < trajectory.blocks.size(); ++step) {
            const auto& blk = trajectory.blocks[(at + step) % trajectory.blocks.size()];
            cost = tx_cost(tx, blk.base_fee_wei);
            if (cost) break;
        }
        if (!cost) continue;  // priced out of the whole trajectory
        total += *cost;
        ++eval.included;
    }
    eval.total_cost_wei = static_cast<double>(total);
    eval.mean_cost_wei =
        eval.included > 0 ? eval.total_cost_wei / static_cast<double>(eval.included) : 0.0;
    return eval;
}

SyntheticPanel export_synthetic_panel(const Trajectory& trajectory,
                                      const std::vector<SynthFirmSpec>& firms,
                                      std::uint64_t seed) {
    if (trajectory.blocks.empty()) throw ConfigError("cannot export an empty trajectory");
    if (firms.empty()) throw ConfigError("synthetic panel needs at least one firm spec");

    constexpr i64 BLOCK_BASE = 21'000'000;
    constexpr i64 WINDOW_START = 1'767'225'600;  // 2026-01-01T00:00Z

    // Pre-compute the fullness proxy exactly as the congestion pass will,
    // over the full set of exported blocks, so the injected pass-through is
    // recoverable without approximation.
    std::vector<i64> rewards;
    rewards.reserve(trajectory.blocks.size());
    for (const auto& b : trajectory.blocks) rewards.push_back(b.reward_wei);
    const RewardCeiling ceiling = congestion::reward_ceiling(rewards);

    SyntheticPanel out;
    out.truth.alpha_usd = firms.front().alpha_usd;
    out.truth.hour_premium_usd = firms.front().hour_premium_usd;
    out.truth.pass_through_usd = firms.front().pass_through_usd;

    for (const auto& b : trajectory.blocks)
        out.panel.blocks.emplace(BLOCK_BASE + b.block,
                                 BlockStat{BLOCK_BASE + b.block, b.reward_wei});

    for (std::size_t fi = 0; fi < firms.size(); ++fi) {
        const auto& spec = firms[fi];
        Firm firm;
        firm.firm_id = spec.firm_id;
        firm.industry = spec.industry;
        firm.address = spec.address;
        out.panel.firms.push_back(firm);

        // Hour sampling distribution; all-zero weights mean uniform.
        std::array<double, 24> cum{};
        double total_w = 0;
        for (double w : spec.hour_weights) total_w += w;
        double acc = 0;
        for (int h = 0; h < 24; ++h) {
            acc += total_w > 0 ? spec.hour_weights[static_cast<std::size_t>(h)] : 1.0;
            cum[static_cast<std::size_t>(h)] = acc;
        }

        Xoshiro256ss rng(derive_seed(seed, 100 + fi));
        const i64 rate_micro = static_cast<i64>(std::llround(spec.usd_per_eth * USD_SCALE));

        for (i64 i = 0; i < spec.n_records; ++i) {
            const double u = rng.uniform01() * acc;
            int hour = 23;
            for (int h = 0; h < 24; ++h) {
                if (u < cum[static_cast<std::size_t>(h)]) {
                    hour = h;
                    break;
                }
            }

            // Blocks are drawn uniformly from the whole trajectory rather
            // than matched to the record's hour: a per-hour block pool would
            // pin a fixed congestion offset onto each hour dummy and bias
            // premium recovery.
            const auto& blk = trajectory.blocks[static_cast<std::size_t>(
                rng.below(trajectory.blocks.size()))];

            const double phi =
                static_cast<double>(congestion::fullness_proxy_nano(blk.reward_wei, ceiling)) /
                FRAC_SCALE;
            double fee_usd = spec.alpha_usd +
                             spec.hour_premium_usd[static_cast<std::size_t>(hour)] +
                             spec.pass_through_usd * phi +
                             rng.normal(0.0, spec.noise_sd_usd);
            if (fee_usd < 1e-6) fee_usd = 1e-6;

            TxRecord rec;
            rec.tx_hash = "0xsynth" + std::to_string(fi) + "_" + std::to_string(i);
            rec.block_number = BLOCK_BASE + blk.block;
            const i64 day = i % 90;
            const i64 sec = (i * 37) % 3600;
            rec.timestamp_utc = WINDOW_START + day * 86400 + static_cast<i64>(hour) * 3600 + sec;
            rec.hour_utc = hour_of_timestamp(rec.timestamp_utc);
            rec.weekday = weekday_of_timestamp(rec.timestamp_utc);
            rec.from_addr = spec.address;
            rec.to_addr = "0xcounterparty";
            rec.gas_used = 21'000;
            const double fee_eth = fee_usd / spec.usd_per_eth;
            rec.gas_price_wei =
                std::max<i64>(1, static_cast<i64>(std::llround(fee_eth * 1e18 / 21'000.0)));
            rec.fee_wei = 21'000 * *rec.gas_price_wei;
            rec.fee_usd_micro = static_cast<i64>(i128(rec.fee_wei) * rate_micro / WEI_PER_ETH);
            rec.usd_per_eth_micro = rate_micro;
            rec.firm_id = spec.firm_id;
            rec.tx_type = TxType::ETH_TRANSFER;
            out.panel.records.push_back(std::move(rec));
        }
    }

    out.panel.window_start = WINDOW_START;
    out.panel.window_end = WINDOW_START;
    for (const auto& r : out.panel.records) {
        out.panel.window_start = std::min(out.panel.window_start, r.timestamp_utc);
        out.panel.window_end = std::max(out.panel.window_end, r.timestamp_utc);
    }
    return out;
}

void write_trajectory(std::ostream& out, const Trajectory& t, char delimiter) {
    csv::write_row(out, {"block", "hour_utc", "base_fee_wei", "gas_used", "phi", "phi_s"},
                   delimiter);
    char phi[32], phi_s[32];
    for (const auto& b : t.blocks) {
        std::snprintf(phi, sizeof(phi), "%.9f",
                      static_cast<double>(b.gas_used) / static_cast<double>(t.gas_limit));
        std::snprintf(phi_s, sizeof(phi_s), "%.9f",
                      static_cast<double>(b.gas_s) / static_cast<double>(t.gas_limit));
        csv::write_row(out,
                       {std::to_string(b.block), std::to_string(b.hour),
                        std::to_string(b.base_fee_wei), std::to_string(b.gas_used), phi, phi_s},
                       delimiter);
    }
}

}  // namespace gascope::sim
