#include "gascope/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gascope/errors.hpp"

using nlohmann::json;

namespace gascope::ingest {

ColumnMap default_column_map() { return ColumnMap{}; }

namespace {

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

// Boolean coercion for explorer status/isError columns. Empty and "0" mean
// ok; anything mentioning "error" or "fail" means failed.
std::optional<bool> parse_error_flag(const std::string& raw) {
    const std::string v = lower(trim(raw));
    if (v.empty() || v == "0" || v == "false" || v == "ok" || v == "success") return false;
    if (v == "1" || v == "true") return true;
    if (v.find("error") != std::string::npos || v.find("fail") != std::string::npos) return true;
    return std::nullopt;
}

bool field_empty(const std::string& raw) {
    const std::string v = trim(raw);
    return v.empty() || v == "0x";
}

struct ColumnIndex {
    std::size_t tx_hash, block_number, timestamp_utc, from_addr, fee_eth, fee_usd, usd_per_eth;
    std::optional<std::size_t> to_addr, contract_addr, gas_used, gas_price, is_error, input_data,
        value_eth;
};

std::size_t require_column(const csv::Table& t, const std::string& name,
                           const char* field) {
    if (name.empty())
        throw ConfigError(std::string("column map leaves required field unmapped: ") + field);
    auto idx = t.column(name);
    if (!idx)
        throw ConfigError("mapped column not found in header: " + name);
    return *idx;
}

std::optional<std::size_t> optional_column(const csv::Table& t, const std::string& name) {
    if (name.empty()) return std::nullopt;
    auto idx = t.column(name);
    if (!idx) throw ConfigError("mapped column not found in header: " + name);
    return idx;
}

ColumnIndex resolve_columns(const csv::Table& t, const ColumnMap& map) {
    ColumnIndex ix{
        require_column(t, map.tx_hash, "tx_hash"),
        require_column(t, map.block_number, "block_number"),
        require_column(t, map.timestamp_utc, "timestamp_utc"),
        require_column(t, map.from_addr, "from_addr"),
        require_column(t, map.fee_eth, "fee_eth"),
        require_column(t, map.fee_usd, "fee_usd"),
        require_column(t, map.usd_per_eth, "usd_per_eth"),
        {}, {}, {}, {}, {}, {}, {},
    };
    ix.to_addr = optional_column(t, map.to_addr);
    ix.contract_addr = optional_column(t, map.contract_addr);
    ix.gas_used = optional_column(t, map.gas_used);
    ix.gas_price = optional_column(t, map.gas_price);
    ix.is_error = optional_column(t, map.is_error);
    ix.input_data = optional_column(t, map.input_data);
    ix.value_eth = optional_column(t, map.value_eth);
    return ix;
}

const std::string& cell(const std::vector<std::string>& row, std::size_t i) {
    static const std::string empty;
    return i < row.size() ? row[i] : empty;
}

}  // namespace

ParseResult parse_transactions(const csv::Table& rows, const ColumnMap& map) {
    const ColumnIndex ix = resolve_columns(rows, map);
    ParseResult result;
    result.records.reserve(rows.rows.size());

    for (std::size_t ri = 0; ri < rows.rows.size(); ++ri) {
        const auto& row = rows.rows[ri];
        auto reject = [&](const std::string& why) {
            result.rejects.push_back({ri, why});
        };

        TxRecord rec;
        rec.tx_hash = trim(cell(row, ix.tx_hash));
        if (rec.tx_hash.empty()) {
            reject("empty tx hash");
            continue;
        }

        auto block = parse_int(cell(row, ix.block_number));
        if (!block || *block < 0) {
            reject("unparseable block number: " + cell(row, ix.block_number));
            continue;
        }
        rec.block_number = *block;

        auto ts = parse_int(cell(row, ix.timestamp_utc));
        if (!ts) {
            reject("unparseable timestamp: " + cell(row, ix.timestamp_utc));
            continue;
        }
        rec.timestamp_utc = *ts;
        rec.hour_utc = hour_of_timestamp(*ts);
        rec.weekday = weekday_of_timestamp(*ts);

        rec.from_addr = trim(cell(row, ix.from_addr));
        if (ix.to_addr && !field_empty(cell(row, *ix.to_addr)))
            rec.to_addr = trim(cell(row, *ix.to_addr));
        if (ix.contract_addr && !field_empty(cell(row, *ix.contract_addr)))
            rec.contract_addr = trim(cell(row, *ix.contract_addr));

        auto fee_eth = parse_scaled_decimal(cell(row, ix.fee_eth), 18);
        if (!fee_eth || *fee_eth < 0) {
            reject("unparseable fee (ETH): " + cell(row, ix.fee_eth));
            continue;
        }
        auto fee_wei = to_i64(*fee_eth);
        if (!fee_wei) {
            reject("fee (ETH) out of range: " + cell(row, ix.fee_eth));
            continue;
        }
        rec.fee_wei = *fee_wei;

        auto fee_usd = parse_scaled_decimal(cell(row, ix.fee_usd), 6);
        if (!fee_usd || *fee_usd < 0) {
            reject("unparseable fee (USD): " + cell(row, ix.fee_usd));
            continue;
        }
        auto fee_usd64 = to_i64(*fee_usd);
        if (!fee_usd64) {
            reject("fee (USD) out of range");
            continue;
        }
        rec.fee_usd_micro = *fee_usd64;

        auto rate = parse_scaled_decimal(cell(row, ix.usd_per_eth), 6);
        if (!rate || *rate <= 0) {
            reject("unparseable USD/ETH rate: " + cell(row, ix.usd_per_eth));
            continue;
        }
        auto rate64 = to_i64(*rate);
        if (!rate64) {
            reject("USD/ETH rate out of range");
            continue;
        }
        rec.usd_per_eth_micro = *rate64;

        if (ix.gas_used && !trim(cell(row, *ix.gas_used)).empty()) {
            auto g = parse_int(cell(row, *ix.gas_used));
            if (!g || *g <= 0) {
                reject("unparseable gas used: " + cell(row, *ix.gas_used));
                continue;
            }
            rec.gas_used = *g;
        }
        if (ix.gas_price && !trim(cell(row, *ix.gas_price)).empty()) {
            auto p = parse_int(cell(row, *ix.gas_price));
            if (!p || *p < 0) {
                reject("unparseable gas price: " + cell(row, *ix.gas_price));
                continue;
            }
            rec.gas_price_wei = *p;
        }

        if (ix.is_error) {
            auto flag = parse_error_flag(cell(row, *ix.is_error));
            if (!flag) {
                reject("unrecognized status value: " + cell(row, *ix.is_error));
                continue;
            }
            rec.is_error = *flag;
        }

        if (ix.input_data) {
            const std::string v = trim(cell(row, *ix.input_data));
            rec.input_data = (v == "0x") ? "" : v;
        }

        if (ix.value_eth && !trim(cell(row, *ix.value_eth)).empty()) {
            auto v = parse_scaled_decimal(cell(row, *ix.value_eth), 18);
            if (v) rec.value_wei = *v;
        }

        // Fee identity: fee_wei = gas_used * gas_price within 1e-6 relative.
        if (rec.gas_used && rec.gas_price_wei) {
            const i128 product = i128(*rec.gas_used) * i128(*rec.gas_price_wei);
            const i128 diff = product > rec.fee_wei ? product - rec.fee_wei
                                                    : i128(rec.fee_wei) - product;
            const i128 tol = std::max<i128>(product / 1'000'000, 1);
            if (diff > tol) {
                reject("fee does not equal gas_used * gas_price");
                continue;
            }
        }

        // Cross-currency consistency within 1e-4 relative.
        {
            const i128 implied_usd = i128(rec.fee_wei) * rec.usd_per_eth_micro / WEI_PER_ETH;
            const i128 diff = implied_usd > rec.fee_usd_micro
                                  ? implied_usd - rec.fee_usd_micro
                                  : i128(rec.fee_usd_micro) - implied_usd;
            const i128 tol = std::max<i128>(implied_usd / 10'000, 1);
            if (diff > tol) {
                reject("fee (USD) inconsistent with fee (ETH) * rate");
                continue;
            }
        }

        rec.tx_type = classify_tx_type(rec);
        result.records.push_back(std::move(rec));
    }
    return result;
}

ParseResult parse_transactions_file(const std::string& path, const ColumnMap& map,
                                    char delimiter) {
    return parse_transactions(csv::read_file(path, delimiter), map);
}

FilterResult filter_valid(const std::vector<TxRecord>& records,
                          const std::map<i64, BlockStat>& blocks) {
    FilterResult out;
    out.kept.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.is_error) {
            out.removed.push_back({i, "failed transaction"});
        } else if (!blocks.count(r.block_number)) {
            out.removed.push_back({i, "missing block reward"});
        } else {
            out.kept.push_back(r);
        }
    }
    return out;
}

TxType classify_tx_type(const TxRecord& record) {
    if (!record.to_addr) return TxType::DEPLOY;
    if (record.input_data.empty()) return TxType::ETH_TRANSFER;
    return TxType::CALL;
}

BlocksParseResult parse_blocks(const csv::Table& rows, const BlocksColumnMap& map) {
    auto bn_idx = rows.column(map.block_number);
    if (!bn_idx) throw ConfigError("mapped column not found in header: " + map.block_number);
    auto rw_idx = rows.column(map.reward_wei);
    if (!rw_idx) throw ConfigError("mapped column not found in header: " + map.reward_wei);

    BlocksParseResult result;
    for (std::size_t ri = 0; ri < rows.rows.size(); ++ri) {
        const auto& row = rows.rows[ri];
        auto block = parse_int(cell(row, *bn_idx));
        if (!block || *block < 0) {
            result.rejects.push_back({ri, "unparseable block number"});
            continue;
        }
        auto reward = parse_int(cell(row, *rw_idx));
        if (!reward || *reward < 0) {
            result.rejects.push_back({ri, "unparseable reward"});
            continue;
        }
        result.blocks.push_back(BlockStat{*block, *reward});
    }
    return result;
}

BlocksParseResult parse_blocks_file(const std::string& path, const BlocksColumnMap& map,
                                    char delimiter) {
    return parse_blocks(csv::read_file(path, delimiter), map);
}

Panel build_panel(const std::vector<FirmBatch>& batches,
                  const std::vector<BlockStat>& block_rows, BuildReport* report) {
    Panel panel;

    std::set<std::string> seen_firms;
    for (const auto& b : batches) {
        if (b.firm.firm_id.empty()) throw ConfigError("firm with empty id");
        if (!seen_firms.insert(b.firm.firm_id).second)
            throw ConfigError("duplicate firm id: " + b.firm.firm_id);
        panel.firms.push_back(b.firm);
    }

    for (const auto& bs : block_rows) {
        auto [it, inserted] = panel.blocks.emplace(bs.block_number, bs);
        if (!inserted && it->second.reward_wei != bs.reward_wei)
            throw DataError("conflicting rewards for block " +
                            std::to_string(bs.block_number));
    }

    BuildReport local;
    for (const auto& b : batches) {
        auto filtered = filter_valid(b.records, panel.blocks);
        for (auto& rm : filtered.removed) local.removed.emplace_back(b.firm.firm_id, rm);
        local.per_firm_counts[b.firm.firm_id] = filtered.kept.size();
        for (auto& rec : filtered.kept) {
            rec.firm_id = b.firm.firm_id;
            rec.tx_type = classify_tx_type(rec);
            panel.records.push_back(std::move(rec));
        }
    }
    local.total = panel.records.size();

    if (!panel.records.empty()) {
        panel.window_start = panel.records.front().timestamp_utc;
        panel.window_end = panel.records.front().timestamp_utc;
        for (const auto& r : panel.records) {
            panel.window_start = std::min(panel.window_start, r.timestamp_utc);
            panel.window_end = std::max(panel.window_end, r.timestamp_utc);
        }
    }

    if (report) *report = std::move(local);
    return panel;
}

// ---------------------------- JSON persistence -----------------------------

namespace {

json record_to_json(const TxRecord& r) {
    json j;
    j["tx_hash"] = r.tx_hash;
    j["block_number"] = r.block_number;
    j["timestamp_utc"] = r.timestamp_utc;
    j["hour_utc"] = r.hour_utc;
    j["weekday"] = r.weekday;
    j["from_addr"] = r.from_addr;
    if (r.to_addr) j["to_addr"] = *r.to_addr;
    if (r.contract_addr) j["contract_addr"] = *r.contract_addr;
    if (r.gas_used) j["gas_used"] = *r.gas_used;
    if (r.gas_price_wei) j["gas_price_wei"] = *r.gas_price_wei;
    j["fee_wei"] = r.fee_wei;
    j["fee_usd_micro"] = r.fee_usd_micro;
    j["usd_per_eth_micro"] = r.usd_per_eth_micro;
    j["is_error"] = r.is_error;
    if (!r.input_data.empty()) j["input_data"] = r.input_data;
    if (r.value_wei) j["value_wei"] = i128_to_string(*r.value_wei);
    j["firm_id"] = r.firm_id;
    j["tx_type"] = to_string(r.tx_type);
    return j;
}

TxRecord record_from_json(const json& j) {
    TxRecord r;
    r.tx_hash = j.at("tx_hash").get<std::string>();
    r.block_number = j.at("block_number").get<i64>();
    r.timestamp_utc = j.at("timestamp_utc").get<i64>();
    r.hour_utc = j.at("hour_utc").get<int>();
    r.weekday = j.at("weekday").get<int>();
    r.from_addr = j.at("from_addr").get<std::string>();
    if (j.contains("to_addr")) r.to_addr = j.at("to_addr").get<std::string>();
    if (j.contains("contract_addr")) r.contract_addr = j.at("contract_addr").get<std::string>();
    if (j.contains("gas_used")) r.gas_used = j.at("gas_used").get<i64>();
    if (j.contains("gas_price_wei")) r.gas_price_wei = j.at("gas_price_wei").get<i64>();
    r.fee_wei = j.at("fee_wei").get<i64>();
    r.fee_usd_micro = j.at("fee_usd_micro").get<i64>();
    r.usd_per_eth_micro = j.at("usd_per_eth_micro").get<i64>();
    r.is_error = j.at("is_error").get<bool>();
    if (j.contains("input_data")) r.input_data = j.at("input_data").get<std::string>();
    if (j.contains("value_wei")) {
        auto v = i128_from_string(j.at("value_wei").get<std::string>());
        if (v) r.value_wei = *v;
    }
    r.firm_id = j.at("firm_id").get<std::string>();
    auto t = tx_type_from_string(j.at("tx_type").get<std::string>());
    if (!t) throw DataError("unknown tx_type in panel document");
    r.tx_type = *t;
    return r;
}

}  // namespace

void save_panel(const Panel& panel, std::ostream& out) {
    json j;
    j["panel_schema"] = 1;
    j["window_start"] = panel.window_start;
    j["window_end"] = panel.window_end;

    json firms = json::array();
    for (const auto& f : panel.firms) {
        firms.push_back({{"firm_id", f.firm_id},
                         {"industry", f.industry},
                         {"address", f.address},
                         {"deferrable_default", f.deferrable_default},
                         {"kappa_usd", f.kappa_usd}});
    }
    j["firms"] = std::move(firms);

    json blocks = json::array();
    for (const auto& [bn, bs] : panel.blocks) {
        json jb;
        jb["block_number"] = bs.block_number;
        jb["reward_wei"] = bs.reward_wei;
        if (bs.enriched()) {
            jb["fullness_proxy_nano"] = bs.fullness_proxy_nano;
            jb["share_t_nano"] = bs.share_t_nano;
            jb["share_s_nano"] = bs.share_s_nano;
            jb["share_u_nano"] = bs.share_u_nano;
        }
        blocks.push_back(std::move(jb));
    }
    j["blocks"] = std::move(blocks);

    json records = json::array();
    for (const auto& r : panel.records) records.push_back(record_to_json(r));
    j["records"] = std::move(records);

    if (panel.reward_ceiling) {
        j["reward_ceiling"] = {{"ceiling_wei", panel.reward_ceiling->ceiling_wei},
                               {"sample_size", panel.reward_ceiling->sample_size}};
    }

    out << j.dump(1, '\t') << "\n";
}

void save_panel_file(const Panel& panel, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write panel file: " + path);
    save_panel(panel, out);
}

Panel load_panel(std::istream& in) {
    json j = json::parse(in);
    if (!j.contains("panel_schema") || j["panel_schema"].get<int>() != 1)
        throw DataError("unsupported panel schema version");

    Panel panel;
    panel.window_start = j.at("window_start").get<i64>();
    panel.window_end = j.at("window_end").get<i64>();
    for (const auto& jf : j.at("firms")) {
        Firm f;
        f.firm_id = jf.at("firm_id").get<std::string>();
        f.industry = jf.at("industry").get<std::string>();
        f.address = jf.at("address").get<std::string>();
        f.deferrable_default = jf.at("deferrable_default").get<bool>();
        f.kappa_usd = jf.at("kappa_usd").get<double>();
        panel.firms.push_back(std::move(f));
    }
    for (const auto& jb : j.at("blocks")) {
        BlockStat bs;
        bs.block_number = jb.at("block_number").get<i64>();
        bs.reward_wei = jb.at("reward_wei").get<i64>();
        if (jb.contains("fullness_proxy_nano")) {
            bs.fullness_proxy_nano = jb.at("fullness_proxy_nano").get<i64>();
            bs.share_t_nano = jb.at("share_t_nano").get<i64>();
            bs.share_s_nano = jb.at("share_s_nano").get<i64>();
            bs.share_u_nano = jb.at("share_u_nano").get<i64>();
        }
        panel.blocks.emplace(bs.block_number, bs);
    }
    for (const auto& jr : j.at("records")) panel.records.push_back(record_from_json(jr));
    if (j.contains("reward_ceiling")) {
        RewardCeiling rc;
        rc.ceiling_wei = j["reward_ceiling"].at("ceiling_wei").get<i64>();
        rc.sample_size = j["reward_ceiling"].at("sample_size").get<i64>();
        panel.reward_ceiling = rc;
    }
    return panel;
}

Panel load_panel_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open panel file: " + path);
    return load_panel(in);
}

}  // namespace gascope::ingest
