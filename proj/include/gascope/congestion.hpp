#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gascope/types.hpp"

namespace gascope::congestion {

enum class Tag { T, S, U };

const char* to_string(Tag t);

struct AddressTag {
    std::string address;
    Tag tag = Tag::U;
    double above_threshold_share = 0.0;
    i64 n_observed = 0;
};

struct Config {
    double tip_pct = 0.75;      // within-block per-gas price percentile
    double consistency = 0.5;   // share of above-threshold txs that makes an address S
    i64 min_obs = 5;            // addresses below this stay unclassified
    std::map<std::string, Tag> overrides;  // operator-pinned tags
};

// Nearest-rank p-th percentile of an unsorted sample: sort ascending, take
// the element at index ceil(p*n) - 1.
i64 nearest_rank_percentile(std::vector<i64> values, double p);

// Pooled 95th-percentile reward ceiling; identical for every firm by
// construction because it is computed once on the pooled block sample.
RewardCeiling reward_ceiling(const std::vector<i64>& rewards_wei);

// clip(reward/ceiling, 0, 1) in integer arithmetic, rounded to 9 dp.
i64 fullness_proxy_nano(i64 reward_wei, const RewardCeiling& ceiling);

// Tags every from-address in the panel by its tip behavior: per-block
// thresholds first, then one pass per address.
std::vector<AddressTag> tag_addresses(const Panel& panel, const Config& cfg = {});

// Splits a block's fullness proxy into T/S/U shares proportional to observed
// gas per tag class, largest-remainder rounded so the three shares sum to the
// proxy exactly. Blocks with no attributable gas put everything in U.
void decompose_fullness(BlockStat& block, const std::vector<const TxRecord*>& records_in_block,
                        const std::map<std::string, Tag>& tags);

// Full congestion pass over a fresh panel: ceiling, per-block proxies,
// address tags, per-block demand decomposition.
std::vector<AddressTag> enrich(Panel& panel, const Config& cfg = {});

// Delimited export: address, tag, share, n.
void write_tags(std::ostream& out, const std::vector<AddressTag>& tags, char delimiter = ',');

// Per-gas price used for within-block tip ranking; legacy records carry no
// explicit tip, so the gas price (or fee/gas) stands in.
std::optional<i64> per_gas_price(const TxRecord& r);

}  // namespace gascope::congestion
