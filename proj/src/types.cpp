#include "gascope/types.hpp"

namespace gascope {

const char* to_string(TxType t) {
    switch (t) {
        case TxType::ETH_TRANSFER: return "ETH_TRANSFER";
        case TxType::CALL: return "CALL";
        case TxType::DEPLOY: return "DEPLOY";
    }
    return "CALL";
}

std::optional<TxType> tx_type_from_string(const std::string& s) {
    if (s == "ETH_TRANSFER") return TxType::ETH_TRANSFER;
    if (s == "CALL") return TxType::CALL;
    if (s == "DEPLOY") return TxType::DEPLOY;
    return std::nullopt;
}

const Firm* Panel::find_firm(const std::string& firm_id) const {
    for (const auto& f : firms)
        if (f.firm_id == firm_id) return &f;
    return nullptr;
}

std::vector<const TxRecord*> Panel::firm_records(const std::string& firm_id) const {
    std::vector<const TxRecord*> out;
    for (const auto& r : records)
        if (r.firm_id == firm_id) out.push_back(&r);
    return out;
}

std::map<std::string, std::size_t> Panel::per_firm_counts() const {
    std::map<std::string, std::size_t> counts;
    for (const auto& f : firms) counts[f.firm_id] = 0;
    for (const auto& r : records) ++counts[r.firm_id];
    return counts;
}

int hour_of_timestamp(i64 ts) {
    i64 sec = ts % 86400;
    if (sec < 0) sec += 86400;
    return static_cast<int>(sec / 3600);
}

int weekday_of_timestamp(i64 ts) {
    i64 days = ts / 86400;
    if (ts % 86400 < 0) --days;  // floor for pre-epoch timestamps
    i64 wd = (days + 3) % 7;     // 1970-01-01 was a Thursday
    if (wd < 0) wd += 7;
    return static_cast<int>(wd);
}

}  // namespace gascope
