#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gascope/fixed.hpp"

namespace gascope {

enum class TxType { ETH_TRANSFER, CALL, DEPLOY };

const char* to_string(TxType t);
std::optional<TxType> tx_type_from_string(const std::string& s);

// One confirmed on-chain transaction, normalized from an explorer export.
// Wei quantities are integers; USD is micro-USD; fractions are nano units.
struct TxRecord {
    std::string tx_hash;
    i64 block_number = 0;
    i64 timestamp_utc = 0;
    int hour_utc = 0;  // derived: (timestamp mod 86400) / 3600
    int weekday = 0;   // derived: 0 = Monday ... 6 = Sunday, UTC
    std::string from_addr;
    std::optional<std::string> to_addr;
    std::optional<std::string> contract_addr;
    std::optional<i64> gas_used;
    std::optional<i64> gas_price_wei;
    i64 fee_wei = 0;            // fee in wei (fee_eth scaled 1e18)
    i64 fee_usd_micro = 0;      // fee in micro-USD
    i64 usd_per_eth_micro = 0;  // exchange rate in micro-USD per ETH
    bool is_error = false;
    std::string input_data;  // method-id prefix ("0x..." ) or empty
    std::optional<i128> value_wei;

    std::string firm_id;
    TxType tx_type = TxType::CALL;

    double fee_usd() const { return static_cast<double>(fee_usd_micro) / USD_SCALE; }
    bool is_weekend() const { return weekday >= 5; }
};

// Per-block validator reward plus congestion decomposition. The proxy and the
// three demand shares live in the same nano fixed point so the share-sum
// identity is exact, not approximate.
struct BlockStat {
    i64 block_number = 0;
    i64 reward_wei = 0;
    i64 fullness_proxy_nano = -1;  // -1 until the congestion pass fills it
    i64 share_t_nano = 0;
    i64 share_s_nano = 0;
    i64 share_u_nano = 0;

    bool enriched() const { return fullness_proxy_nano >= 0; }
    double fullness_proxy() const {
        return static_cast<double>(fullness_proxy_nano) / FRAC_SCALE;
    }
};

struct Firm {
    std::string firm_id;
    std::string industry;
    std::string address;
    bool deferrable_default = true;  // operator-supplied deferrability
    double kappa_usd = 0.0;          // operational cost of delaying one tx
};

// Pooled reward ceiling used by the block-reward fullness proxy; one value
// for the whole panel.
struct RewardCeiling {
    i64 ceiling_wei = 0;
    i64 sample_size = 0;
};

// The joined firm x transaction x block dataset that all estimation consumes.
// Immutable after build + congestion enrichment.
struct Panel {
    std::vector<Firm> firms;
    std::vector<TxRecord> records;
    std::map<i64, BlockStat> blocks;
    i64 window_start = 0;
    i64 window_end = 0;
    std::optional<RewardCeiling> reward_ceiling;

    const Firm* find_firm(const std::string& firm_id) const;
    std::vector<const TxRecord*> firm_records(const std::string& firm_id) const;
    std::map<std::string, std::size_t> per_firm_counts() const;
};

int hour_of_timestamp(i64 timestamp_utc);
int weekday_of_timestamp(i64 timestamp_utc);  // 0 = Monday

}  // namespace gascope
