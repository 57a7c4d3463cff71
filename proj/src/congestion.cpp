#include "gascope/congestion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "gascope/csv.hpp"
#include "gascope/errors.hpp"

namespace gascope::congestion {

const char* to_string(Tag t) {
    switch (t) {
        case Tag::T: return "T";
        case Tag::S: return "S";
        case Tag::U: return "U";
    }
    return "U";
}

i64 nearest_rank_percentile(std::vector<i64> values, double p) {
    if (values.empty()) throw EstimationError("percentile of empty sample");
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    auto rank = static_cast<std::size_t>(std::ceil(p * n));
    if (rank == 0) rank = 1;
    if (rank > values.size()) rank = values.size();
    return values[rank - 1];
}

RewardCeiling reward_ceiling(const std::vector<i64>& rewards_wei) {
    if (rewards_wei.empty()) throw EstimationError("reward ceiling needs a nonempty sample");
    RewardCeiling rc;
    rc.ceiling_wei = nearest_rank_percentile(rewards_wei, 0.95);
    rc.sample_size = static_cast<i64>(rewards_wei.size());
    if (rc.ceiling_wei <= 0) throw DataError("reward ceiling is not positive");
    return rc;
}

i64 fullness_proxy_nano(i64 reward_wei, const RewardCeiling& ceiling) {
    if (ceiling.ceiling_wei <= 0) throw DataError("fullness proxy needs a positive ceiling");
    if (reward_wei < 0) throw DataError("negative block reward");
    if (reward_wei >= ceiling.ceiling_wei) return FRAC_SCALE;  // clipped at 1
    // round-half-up at the 9th decimal
    const i128 num = i128(reward_wei) * FRAC_SCALE * 2 + ceiling.ceiling_wei;
    return static_cast<i64>(num / (i128(ceiling.ceiling_wei) * 2));
}

std::optional<i64> per_gas_price(const TxRecord& r) {
    if (r.gas_price_wei) return r.gas_price_wei;
    if (r.gas_used && *r.gas_used > 0) return r.fee_wei / *r.gas_used;
    return std::nullopt;
}

std::vector<AddressTag> tag_addresses(const Panel& panel, const Config& cfg) {
    // Pass 1: per-block 75th-percentile per-gas price over observed records.
    std::map<i64, std::vector<i64>> block_prices;
    for (const auto& r : panel.records) {
        if (auto p = per_gas_price(r)) block_prices[r.block_number].push_back(*p);
    }
    std::map<i64, i64> thresholds;
    for (auto& [bn, prices] : block_prices)
        thresholds[bn] = nearest_rank_percentile(prices, cfg.tip_pct);

    // Pass 2: per-address above-threshold share.
    struct Counts {
        i64 n = 0;
        i64 above = 0;
    };
    std::map<std::string, Counts> per_addr;
    for (const auto& r : panel.records) {
        auto& c = per_addr[r.from_addr];
        ++c.n;
        auto p = per_gas_price(r);
        auto th = thresholds.find(r.block_number);
        if (p && th != thresholds.end() && *p > th->second) ++c.above;
    }

    std::vector<AddressTag> tags;
    tags.reserve(per_addr.size());
    for (const auto& [addr, c] : per_addr) {
        AddressTag t;
        t.address = addr;
        t.n_observed = c.n;
        t.above_threshold_share = c.n > 0 ? static_cast<double>(c.above) / c.n : 0.0;
        if (auto ov = cfg.overrides.find(addr); ov != cfg.overrides.end()) {
            t.tag = ov->second;
        } else if (c.n < cfg.min_obs) {
            t.tag = Tag::U;
        } else if (t.above_threshold_share >= cfg.consistency) {
            t.tag = Tag::S;
        } else {
            t.tag = Tag::T;
        }
        tags.push_back(std::move(t));
    }
    return tags;
}

void decompose_fullness(BlockStat& block, const std::vector<const TxRecord*>& records_in_block,
                        const std::map<std::string, Tag>& tags) {
    if (!block.enriched()) throw DataError("decompose_fullness needs the fullness proxy");

    i128 gas_by_tag[3] = {0, 0, 0};
    i128 gas_total = 0;
    for (const auto* r : records_in_block) {
        i64 gas = 0;
        if (r->gas_used) {
            gas = *r->gas_used;
        } else if (r->gas_price_wei && *r->gas_price_wei > 0) {
            gas = r->fee_wei / *r->gas_price_wei;
        } else {
            continue;  // no way to attribute gas for this record
        }
        auto it = tags.find(r->from_addr);
        const Tag tag = it == tags.end() ? Tag::U : it->second;
        gas_by_tag[static_cast<int>(tag)] += gas;
        gas_total += gas;
    }

    if (gas_total == 0) {
        block.share_t_nano = 0;
        block.share_s_nano = 0;
        block.share_u_nano = block.fullness_proxy_nano;
        return;
    }

    // Largest-remainder apportionment of the proxy across the three classes;
    // the rounded shares must sum to the proxy exactly.
    i64 floors[3];
    i128 remainders[3];
    i64 assigned = 0;
    for (int k = 0; k < 3; ++k) {
        const i128 raw = i128(block.fullness_proxy_nano) * gas_by_tag[k];
        floors[k] = static_cast<i64>(raw / gas_total);
        remainders[k] = raw % gas_total;
        assigned += floors[k];
    }
    i64 leftover = block.fullness_proxy_nano - assigned;
    int order[3] = {0, 1, 2};
    std::sort(order, order + 3, [&](int a, int b) {
        if (remainders[a] != remainders[b]) return remainders[a] > remainders[b];
        return a < b;  // tie: T before S before U
    });
    for (int k = 0; k < 3 && leftover > 0; ++k, --leftover) floors[order[k]] += 1;

    block.share_t_nano = floors[0];
    block.share_s_nano = floors[1];
    block.share_u_nano = floors[2];
}

std::vector<AddressTag> enrich(Panel& panel, const Config& cfg) {
    std::vector<i64> rewards;
    rewards.reserve(panel.blocks.size());
    for (const auto& [bn, bs] : panel.blocks) rewards.push_back(bs.reward_wei);
    const RewardCeiling ceiling = reward_ceiling(rewards);
    panel.reward_ceiling = ceiling;

    for (auto& [bn, bs] : panel.blocks)
        bs.fullness_proxy_nano = fullness_proxy_nano(bs.reward_wei, ceiling);

    auto tags = tag_addresses(panel, cfg);
    std::map<std::string, Tag> tag_map;
    for (const auto& t : tags) tag_map[t.address] = t.tag;

    std::map<i64, std::vector<const TxRecord*>> by_block;
    for (const auto& r : panel.records) by_block[r.block_number].push_back(&r);

    for (auto& [bn, bs] : panel.blocks) {
        static const std::vector<const TxRecord*> none;
        auto it = by_block.find(bn);
        decompose_fullness(bs, it == by_block.end() ? none : it->second, tag_map);
    }
    return tags;
}

void write_tags(std::ostream& out, const std::vector<AddressTag>& tags, char delimiter) {
    csv::write_row(out, {"address", "tag", "above_threshold_share", "n_observed"}, delimiter);
    char share[32];
    for (const auto& t : tags) {
        std::snprintf(share, sizeof(share), "%.6f", t.above_threshold_share);
        csv::write_row(out,
                       {t.address, to_string(t.tag), share, std::to_string(t.n_observed)},
                       delimiter);
    }
}

}  // namespace gascope::congestion
