#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gascope/types.hpp"

namespace gascope::sim {

// Discrete-block EIP-1559 fee market with two demand classes: low-elasticity
// transactional flow and bursty, price-elastic speculative flow.

struct FeeMarketState {
    i64 block_index = 0;
    i64 base_fee_wei = 1'000'000'000;  // 1 gwei start
    i64 gas_target = 15'000'000;
    i64 gas_limit = 30'000'000;  // 2x target
    i64 last_gas_used = 0;
};

enum class DemandClass { T, S };

struct SimTx {
    DemandClass cls = DemandClass::T;
    i64 gas = 21'000;
    i64 priority_fee_wei = 0;  // tip per gas
    i64 max_fee_wei = 0;       // fee-per-gas cap
    int submit_hour = 0;
};

struct DemandParams {
    // Transactional class: diurnal Poisson arrival rates per block; submits
    // whenever the cap covers the base fee.
    std::array<double, 24> txn_rate_per_block{};
    i64 txn_gas = 21'000;
    i64 txn_priority_fee_wei = 1'000'000'000;
    i64 txn_max_fee_wei = 1'000'000'000'000;  // effectively price-insensitive

    // Speculative class: compound-Poisson bursts concentrated in a window;
    // a burst tx submits only while the base fee is under its cap.
    std::array<double, 24> burst_intensity_per_block{};
    double burst_size_mean = 4.0;
    i64 spec_gas = 250'000;
    i64 spec_priority_fee_wei = 5'000'000'000;
    i64 spec_max_fee_wei = 60'000'000'000;  // willingness-to-pay cutoff

    void validate() const;
};

// Default scenario: flat transactional demand, speculative bursts in the
// 11-18 UTC window.
DemandParams default_diurnal_params();

// Next base fee: B * (1 + (gas_used - target) / (8 * target)), multiply
// before divide in 128-bit, truncate toward zero, floor at 1 wei.
i64 base_fee_update(const FeeMarketState& state);

// Execution cost g * (B + min(tip, cap - B)); nullopt when the cap is below
// the base fee (not included, distinct from an error).
std::optional<i128> tx_cost(const SimTx& tx, i64 base_fee_wei);

struct BlockTrace {
    i64 block = 0;
    int hour = 0;
    i64 base_fee_wei = 0;  // base fee the block's txs paid
    i64 gas_used = 0;
    i64 gas_t = 0;
    i64 gas_s = 0;
    i64 reward_wei = 0;  // tip revenue collected by the builder

    double fullness(i64 gas_limit) const {
        return static_cast<double>(gas_used) / static_cast<double>(gas_limit);
    }
};

struct InclusionLogEntry {
    i64 block = 0;
    DemandClass cls = DemandClass::T;
    i64 gas = 0;
    i64 priority_fee_wei = 0;
    i64 max_fee_wei = 0;
    bool included = false;
};

struct Trajectory {
    std::vector<BlockTrace> blocks;
    std::vector<InclusionLogEntry> inclusion_log;
    int blocks_per_hour = 300;
    i64 gas_target = 15'000'000;
    i64 gas_limit = 30'000'000;
    std::uint64_t seed = 0;

    int hours() const {
        return static_cast<int>(blocks.size()) / blocks_per_hour;
    }
    std::array<double, 24> mean_base_fee_by_hour() const;
};

Trajectory simulate(const DemandParams& params, int hours, int blocks_per_hour = 300,
                    std::uint64_t seed = 0);

enum class Policy { UNIFORM, PEAK_SHAVE, CHEAPEST_HOUR };

const char* to_string(Policy p);

struct PolicyEval {
    Policy policy = Policy::UNIFORM;
    double mean_cost_wei = 0;
    double total_cost_wei = 0;
    i64 included = 0;
};

// Replays a workload against a simulated trajectory under a submission
// policy. PEAK_SHAVE restricts submit hours to the off window; CHEAPEST_HOUR
// uses the realized per-hour mean base fee minimum.
PolicyEval evaluate_policy(const Trajectory& trajectory, Policy policy,
                           const std::set<int>& off_window, const std::vector<SimTx>& workload,
                           std::uint64_t seed);

// Synthetic-panel generation: each firm spec fixes its record count, hour
// mix, and the ground-truth fee equation (hour premium + congestion
// pass-through + noise). The returned truth enables coefficient-recovery
// tests downstream.
struct SynthFirmSpec {
    std::string firm_id = "synthetic";
    std::string industry = "synthetic";
    std::string address = "0xsynthetic";
    i64 n_records = 1000;
    std::array<double, 24> hour_weights{};  // all-equal when left zero
    double alpha_usd = 0.15;                // baseline-hour expected fee
    std::array<double, 24> hour_premium_usd{};
    double pass_through_usd = 0.0;  // per unit of the block fullness proxy
    double noise_sd_usd = 0.02;
    double usd_per_eth = 2000.0;
};

struct GroundTruth {
    double alpha_usd = 0;
    std::array<double, 24> hour_premium_usd{};
    double pass_through_usd = 0;
};

struct SyntheticPanel {
    Panel panel;
    GroundTruth truth;
};

SyntheticPanel export_synthetic_panel(const Trajectory& trajectory,
                                      const std::vector<SynthFirmSpec>& firms,
                                      std::uint64_t seed);

// Delimited trajectory export: block, hour, base_fee, gas_used, phi, phi_s.
void write_trajectory(std::ostream& out, const Trajectory& t, char delimiter = ',');

}  // namespace gascope::sim
