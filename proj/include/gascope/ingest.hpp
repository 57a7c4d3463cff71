#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gascope/csv.hpp"
#include "gascope/types.hpp"

namespace gascope::ingest {

// Maps TxRecord fields to source-column names. Required fields must be
// mapped; optional ones may be left empty to skip the column entirely.
struct ColumnMap {
    std::string tx_hash = "Txhash";
    std::string block_number = "Blockno";
    std::string timestamp_utc = "UnixTimestamp";
    std::string from_addr = "From";
    std::string fee_eth = "TxnFee(ETH)";
    std::string fee_usd = "TxnFee(USD)";
    std::string usd_per_eth = "Historical $Price/Eth";
    // optional columns ("" = not present in this export)
    std::string to_addr = "To";
    std::string contract_addr = "ContractAddress";
    std::string gas_used = "GasUsed";
    std::string gas_price = "GasPrice";
    std::string is_error = "Status";
    std::string input_data = "MethodId";
    std::string value_eth = "Value_IN(ETH)";
};

ColumnMap default_column_map();

struct RowReject {
    std::size_t row_index = 0;  // 0-based data-row index (header excluded)
    std::string reason;
};

struct ParseResult {
    std::vector<TxRecord> records;
    std::vector<RowReject> rejects;
};

// One TxRecord per parseable row; bad rows land in rejects with the row
// index and a reason, never silently dropped. A mapped column missing from
// the header is a configuration error naming the column.
ParseResult parse_transactions(const csv::Table& rows, const ColumnMap& map);
ParseResult parse_transactions_file(const std::string& path, const ColumnMap& map,
                                    char delimiter = ',');

struct Removal {
    std::size_t index = 0;  // index into the input record list
    std::string reason;
};

struct FilterResult {
    std::vector<TxRecord> kept;
    std::vector<Removal> removed;
};

// Drops error-flagged records and records that cannot join a block reward;
// order preserved, removals reported.
FilterResult filter_valid(const std::vector<TxRecord>& records,
                          const std::map<i64, BlockStat>& blocks);

TxType classify_tx_type(const TxRecord& record);

struct BlocksParseResult {
    std::vector<BlockStat> blocks;
    std::vector<RowReject> rejects;
};

struct BlocksColumnMap {
    std::string block_number = "Blockno";
    std::string reward_wei = "Reward";
};

BlocksParseResult parse_blocks(const csv::Table& rows, const BlocksColumnMap& map);
BlocksParseResult parse_blocks_file(const std::string& path, const BlocksColumnMap& map,
                                    char delimiter = ',');

struct FirmBatch {
    Firm firm;
    std::vector<TxRecord> records;
};

struct BuildReport {
    std::map<std::string, std::size_t> per_firm_counts;
    std::size_t total = 0;
    std::vector<std::pair<std::string, Removal>> removed;  // firm_id, removal
};

// Assembles the canonical Panel: tags records with their firm, classifies
// transaction types, filters invalid rows, and validates panel invariants.
Panel build_panel(const std::vector<FirmBatch>& batches,
                  const std::vector<BlockStat>& block_rows, BuildReport* report = nullptr);

// Panel JSON document, schema version field "panel_schema": 1.
void save_panel(const Panel& panel, std::ostream& out);
void save_panel_file(const Panel& panel, const std::string& path);
Panel load_panel(std::istream& in);
Panel load_panel_file(const std::string& path);

}  // namespace gascope::ingest
