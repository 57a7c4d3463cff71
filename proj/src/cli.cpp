#include "gascope/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gascope/congestion.hpp"
#include "gascope/errors.hpp"
#include "gascope/feesim.hpp"
#include "gascope/rng.hpp"
#include "gascope/scheduler.hpp"
#include "gascope/table.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gascope::cli {

namespace {

void apply_out_env(std::string& dir) {
    if (const char* env = std::getenv("GASCOPE_OUT"); env && *env) dir = env;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    return json::parse(in);
}

// Tracks files written by a command so a failure can remove partial output.
class OutputSet {
public:
    std::ofstream open(const fs::path& path) {
        std::ofstream out(path);
        if (!out) throw ConfigError("cannot write file: " + path.string());
        written_.push_back(path);
        return out;
    }
    void keep() { written_.clear(); }
    ~OutputSet() {
        std::error_code ec;
        for (const auto& p : written_) fs::remove(p, ec);
    }

private:
    std::vector<fs::path> written_;
};

}  // namespace

void ProjectConfig::validate() const {
    if (firms.empty()) throw ConfigError("config names no firms");
    std::set<std::string> ids, paths;
    for (const auto& f : firms) {
        if (f.id.empty()) throw ConfigError("firm with empty id");
        if (!ids.insert(f.id).second) throw ConfigError("duplicate firm id: " + f.id);
        if (f.tx_file.empty()) throw ConfigError("firm " + f.id + " has no tx_file");
        if (!paths.insert(f.tx_file).second)
            throw ConfigError("tx_file used twice: " + f.tx_file);
    }
    if (blocks_file.empty()) throw ConfigError("config has no blocks_file");
    if (paths.count(blocks_file)) throw ConfigError("blocks_file collides with a tx_file");
    if (permutation_replications < 1) throw ConfigError("replications must be >= 1");
    peak_window.validate();
    if (threshold_mode == ThresholdMode::ABSOLUTE && threshold_value <= 0)
        throw ConfigError("absolute gas threshold must be positive");
}

ProjectConfig load_config(const std::string& path) {
    json j = read_json_file(path);
    ProjectConfig cfg;

    if (!j.contains("firms") || !j["firms"].is_array())
        throw ConfigError("config needs a firms array");
    for (const auto& jf : j["firms"]) {
        FirmConfig f;
        f.id = jf.at("id").get<std::string>();
        f.industry = jf.value("industry", std::string{});
        f.address = jf.value("address", std::string{});
        f.tx_file = jf.at("tx_file").get<std::string>();
        f.deferrable = jf.value("deferrable", true);
        f.kappa_usd = jf.value("kappa_usd", 0.0);
        cfg.firms.push_back(std::move(f));
    }
    cfg.blocks_file = j.at("blocks_file").get<std::string>();
    if (j.contains("delimiter")) {
        const auto d = j["delimiter"].get<std::string>();
        if (d.size() != 1) throw ConfigError("delimiter must be one character");
        cfg.delimiter = d[0];
    }
    if (j.contains("column_map")) {
        const auto& cm = j["column_map"];
        auto get = [&](const char* key, std::string& field) {
            if (cm.contains(key)) field = cm[key].get<std::string>();
        };
        get("tx_hash", cfg.column_map.tx_hash);
        get("block_number", cfg.column_map.block_number);
        get("timestamp_utc", cfg.column_map.timestamp_utc);
        get("from_addr", cfg.column_map.from_addr);
        get("fee_eth", cfg.column_map.fee_eth);
        get("fee_usd", cfg.column_map.fee_usd);
        get("usd_per_eth", cfg.column_map.usd_per_eth);
        get("to_addr", cfg.column_map.to_addr);
        get("contract_addr", cfg.column_map.contract_addr);
        get("gas_used", cfg.column_map.gas_used);
        get("gas_price", cfg.column_map.gas_price);
        get("is_error", cfg.column_map.is_error);
        get("input_data", cfg.column_map.input_data);
        get("value_eth", cfg.column_map.value_eth);
    }
    if (j.contains("blocks_column_map")) {
        const auto& bm = j["blocks_column_map"];
        if (bm.contains("block_number"))
            cfg.blocks_column_map.block_number = bm["block_number"].get<std::string>();
        if (bm.contains("reward_wei"))
            cfg.blocks_column_map.reward_wei = bm["reward_wei"].get<std::string>();
    }
    if (j.contains("peak_window")) {
        cfg.peak_window.hours.clear();
        for (const auto& h : j["peak_window"]) cfg.peak_window.hours.insert(h.get<int>());
    }
    if (j.contains("permutation")) {
        cfg.permutation_replications = j["permutation"].value("replications", 10000);
        cfg.seed = j["permutation"].value("seed", std::uint64_t{0});
    }
    if (j.contains("gas_threshold")) {
        const auto mode = j["gas_threshold"].value("mode", std::string{"mean"});
        if (mode == "mean") cfg.threshold_mode = ThresholdMode::MEAN;
        else if (mode == "median") cfg.threshold_mode = ThresholdMode::MEDIAN;
        else if (mode == "absolute") cfg.threshold_mode = ThresholdMode::ABSOLUTE;
        else throw ConfigError("unknown gas_threshold mode: " + mode);
        cfg.threshold_value = j["gas_threshold"].value("value", 0.0);
    }
    if (j.contains("tag_overrides_file"))
        cfg.tag_overrides_file = j["tag_overrides_file"].get<std::string>();
    cfg.output_dir = j.value("output_dir", std::string{"out"});
    apply_out_env(cfg.output_dir);
    cfg.validate();
    return cfg;
}

double gas_threshold_usd(const Panel& panel, const ProjectConfig& cfg) {
    if (cfg.threshold_mode == ThresholdMode::ABSOLUTE) return cfg.threshold_value;
    if (panel.records.empty()) throw DataError("gas threshold over an empty panel");
    if (cfg.threshold_mode == ThresholdMode::MEAN) {
        double sum = 0;
        for (const auto& r : panel.records) sum += r.fee_usd();
        return sum / static_cast<double>(panel.records.size());
    }
    std::vector<double> fees;
    fees.reserve(panel.records.size());
    for (const auto& r : panel.records) fees.push_back(r.fee_usd());
    std::sort(fees.begin(), fees.end());
    return fees[(fees.size() - 1) / 2];
}

std::uint64_t permutation_seed(const ProjectConfig& cfg, std::size_t firm_index) {
    return derive_seed(cfg.seed, 1000 + firm_index);
}

std::uint64_t simulation_seed(const ProjectConfig& cfg) {
    return derive_seed(cfg.seed, 2000);
}

// ------------------------------- ingest ------------------------------------

namespace {

congestion::Config congestion_config(const ProjectConfig& cfg) {
    congestion::Config c;
    if (cfg.tag_overrides_file) {
        auto table = csv::read_file(*cfg.tag_overrides_file, cfg.delimiter);
        auto a_idx = table.column("address");
        auto t_idx = table.column("tag");
        if (!a_idx || !t_idx)
            throw ConfigError("tag override file needs address and tag columns");
        for (const auto& row : table.rows) {
            const std::string tag = row.size() > *t_idx ? row[*t_idx] : "";
            congestion::Tag t;
            if (tag == "T") t = congestion::Tag::T;
            else if (tag == "S") t = congestion::Tag::S;
            else if (tag == "U") t = congestion::Tag::U;
            else throw ConfigError("tag override must be T, S, or U");
            c.overrides[row[*a_idx]] = t;
        }
    }
    return c;
}

}  // namespace

int cmd_ingest(const ProjectConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        fs::create_directories(cfg.output_dir);
        OutputSet outputs;

        std::vector<ingest::FirmBatch> batches;
        std::vector<std::tuple<std::string, std::size_t, std::string>> rejects;
        for (const auto& fc : cfg.firms) {
            auto parsed = ingest::parse_transactions_file(fc.tx_file, cfg.column_map,
                                                          cfg.delimiter);
            for (const auto& rj : parsed.rejects)
                rejects.emplace_back(fc.id, rj.row_index, rj.reason);
            ingest::FirmBatch batch;
            batch.firm = Firm{fc.id, fc.industry, fc.address, fc.deferrable, fc.kappa_usd};
            batch.records = std::move(parsed.records);
            batches.push_back(std::move(batch));
        }

        auto blocks = ingest::parse_blocks_file(cfg.blocks_file, cfg.blocks_column_map,
                                                cfg.delimiter);
        for (const auto& rj : blocks.rejects)
            rejects.emplace_back("(blocks)", rj.row_index, rj.reason);

        ingest::BuildReport report;
        Panel panel = ingest::build_panel(batches, blocks.blocks, &report);
        auto tags = congestion::enrich(panel, congestion_config(cfg));

        {
            auto f = outputs.open(fs::path(cfg.output_dir) / "panel.json");
            ingest::save_panel(panel, f);
        }
        {
            auto f = outputs.open(fs::path(cfg.output_dir) / "rejects.csv");
            csv::write_row(f, {"firm_id", "row_index", "reason"});
            for (const auto& [firm, row, reason] : rejects)
                csv::write_row(f, {firm, std::to_string(row), reason});
            for (const auto& [firm, rm] : report.removed)
                csv::write_row(f, {firm, std::to_string(rm.index), rm.reason});
        }
        {
            auto f = outputs.open(fs::path(cfg.output_dir) / "tags.csv");
            congestion::write_tags(f, tags);
        }

        TextTable t;
        t.add_column("firm", TextTable::Align::LEFT);
        t.add_column("industry", TextTable::Align::LEFT);
        t.add_column("n");
        for (const auto& fc : cfg.firms)
            t.add_row({fc.id, fc.industry,
                       std::to_string(report.per_firm_counts.at(fc.id))});
        t.add_row({"total", "", std::to_string(report.total)});
        out << t.render();
        out << "panel: " << (fs::path(cfg.output_dir) / "panel.json").string() << "\n";
        out << "rejected rows: " << rejects.size()
            << ", filtered records: " << report.removed.size() << "\n";

        outputs.keep();
        return EXIT_OK;
    } catch (const std::exception& e) {
        err << "ingest: " << e.what() << "\n";
        return EXIT_CONFIG;
    }
}

// -------------------------------- fit --------------------------------------

namespace {

std::string fit_table_text(const econ::FitResult& fit) {
    TextTable t;
    t.add_column("term", TextTable::Align::LEFT);
    t.add_column("estimate");
    t.add_column("t");
    t.add_column("sig", TextTable::Align::LEFT);
    auto row = [&](const std::string& term) {
        t.add_row({term, fmt_fixed(fit.coef.at(term), 4), fmt_fixed(fit.t.at(term), 3),
                   econ::stars(fit.t.at(term))});
    };
    for (int h = 0; h < 24; ++h) {
        const std::string term = "h" + std::to_string(h);
        if (fit.has_term(term)) row(term);
        else if (h != fit.spec.baseline_hour)
            t.add_row({term, "---", "---", ""});
    }
    if (fit.has_term("phi_br")) row("phi_br");
    if (fit.has_term("phi_s")) row("phi_s");
    row("intercept");

    std::ostringstream body;
    body << t.render();
    if (fit.adj_r2) body << "adj_r2  " << fmt_fixed(*fit.adj_r2, 4) << "\n";
    else body << "adj_r2  n/a (no variance)\n";
    body << "n       " << fit.n << "\n";
    if (!fit.dropped_terms.empty()) {
        body << "inestimable (no rows):";
        for (const auto& d : fit.dropped_terms) body << " " << d;
        body << "\n";
    }
    return body.str();
}

}  // namespace

int cmd_fit(const std::string& panel_path, const std::string& model,
            const std::string& fixed_effects, const std::string& out_dir, std::ostream& out,
            std::ostream& err) {
    try {
        Panel panel = ingest::load_panel_file(panel_path);
        if (panel.records.empty()) throw DataError("panel has no records");

        econ::ModelSpec spec;
        if (model == "base") spec.include_fullness = false;
        else if (model == "fullness") spec.include_fullness = true;
        else throw ConfigError("unknown model: " + model + " (expected base|fullness)");
        if (fixed_effects != "none" && !fixed_effects.empty()) {
            std::stringstream ss(fixed_effects);
            std::string item;
            while (std::getline(ss, item, ',')) {
                if (item == "firm") spec.fe_firm = true;
                else if (item == "week") spec.fe_week = true;
                else throw ConfigError("unknown fixed effect: " + item);
            }
        }

        std::string dir = out_dir;
        apply_out_env(dir);
        fs::create_directories(dir);
        OutputSet outputs;

        try {
            econ::FitResult fit = econ::fit_model(panel, spec);
            {
                auto f = outputs.open(fs::path(dir) / ("fit_" + model + ".json"));
                econ::fit_to_json_stream(fit, f);
            }
            const std::string table = fit_table_text(fit);
            {
                auto f = outputs.open(fs::path(dir) / ("coef_" + model + ".txt"));
                f << table;
            }
            out << table;
            outputs.keep();
            return EXIT_OK;
        } catch (const EstimationError& e) {
            err << "fit: " << e.what() << "\n";
            return EXIT_NOT_COMPUTABLE;
        }
    } catch (const std::exception& e) {
        err << "fit: " << e.what() << "\n";
        return EXIT_CONFIG;
    }
}

// -------------------------------- score ------------------------------------

namespace {

json scorecard_to_json(const metrics::FirmScorecard& c, const std::string& industry,
                       const std::string& regime, bool borderline) {
    json j;
    j["firm_id"] = c.firm_id;
    j["industry"] = industry;
    j["n_total"] = c.n_total;
    j["n_peak"] = c.n_peak;
    j["n_off"] = c.n_off;
    j["s_off"] = c.s_off;
    j["pss"] = c.pss;
    if (c.avoidance_ratio) j["avoidance_ratio"] = *c.avoidance_ratio;
    if (c.fee_savings) j["fee_savings"] = *c.fee_savings;
    j["cheapest_hour"] = c.cheapest_hour;
    j["mean_gas_cheapest"] = c.mean_gas_cheapest;
    j["c_actual"] = c.c_actual;
    j["c_cf"] = c.c_cf;
    j["floor_usd"] = c.floor_usd;
    if (c.floor_pct) j["floor_pct"] = *c.floor_pct;
    if (c.fullness_at_cheapest) j["fullness_at_cheapest"] = *c.fullness_at_cheapest;
    if (c.pass_through) j["pass_through"] = *c.pass_through;
    j["pss_pvalue"] = c.pss_pvalue;
    j["regime"] = regime;
    j["borderline"] = borderline;
    if (!c.not_computable.empty()) j["not_computable"] = c.not_computable;
    return j;
}

void write_scorecards_csv(std::ostream& out, const json& doc) {
    csv::write_row(out, {"industry", "firm_id", "n_total", "n_peak", "n_off", "s_off", "pss",
                         "avoidance_ratio", "fee_savings", "cheapest_hour",
                         "mean_gas_cheapest", "c_actual", "c_cf", "floor_usd", "floor_pct",
                         "fullness_at_cheapest", "pass_through", "pss_pvalue", "regime",
                         "borderline"});
    auto opt = [](const json& c, const char* key, int dp) {
        return c.contains(key) ? fmt_fixed(c[key].get<double>(), dp) : std::string{};
    };
    for (const auto& c : doc.at("scorecards")) {
        csv::write_row(out, {c.at("industry").get<std::string>(),
                             c.at("firm_id").get<std::string>(),
                             std::to_string(c.at("n_total").get<i64>()),
                             std::to_string(c.at("n_peak").get<i64>()),
                             std::to_string(c.at("n_off").get<i64>()),
                             fmt_fixed(c.at("s_off").get<double>(), 6),
                             fmt_fixed(c.at("pss").get<double>(), 6),
                             opt(c, "avoidance_ratio", 6), opt(c, "fee_savings", 6),
                             std::to_string(c.at("cheapest_hour").get<int>()),
                             fmt_fixed(c.at("mean_gas_cheapest").get<double>(), 6),
                             fmt_fixed(c.at("c_actual").get<double>(), 6),
                             fmt_fixed(c.at("c_cf").get<double>(), 6),
                             fmt_fixed(c.at("floor_usd").get<double>(), 6),
                             opt(c, "floor_pct", 6), opt(c, "fullness_at_cheapest", 6),
                             opt(c, "pass_through", 6),
                             fmt_fixed(c.at("pss_pvalue").get<double>(), 6),
                             c.at("regime").get<std::string>(),
                             c.at("borderline").get<bool>() ? "1" : "0"});
    }
}

std::string scorecards_table_text(const json& doc) {
    TextTable t;
    t.add_column("industry", TextTable::Align::LEFT);
    t.add_column("firm", TextTable::Align::LEFT);
    t.add_column("n");
    t.add_column("n_peak");
    t.add_column("n_off");
    t.add_column("s_off");
    t.add_column("pss");
    t.add_column("savings");
    t.add_column("floor_usd");
    t.add_column("floor_pct");
    t.add_column("pass_through");
    t.add_column("p(pss)");
    t.add_column("regime", TextTable::Align::LEFT);
    for (const auto& c : doc.at("scorecards")) {
        const bool borderline = c.value("borderline", false);
        t.add_row({c.at("industry").get<std::string>(),
                   c.at("firm_id").get<std::string>(),
                   std::to_string(c.at("n_total").get<i64>()),
                   std::to_string(c.at("n_peak").get<i64>()),
                   std::to_string(c.at("n_off").get<i64>()),
                   fmt_fixed(c.at("s_off").get<double>(), 3),
                   fmt_signed(c.at("pss").get<double>(), 3),
                   c.contains("fee_savings") ? fmt_pct(c["fee_savings"].get<double>(), 1)
                                             : "n/a",
                   fmt_fixed(c.at("floor_usd").get<double>(), 2),
                   c.contains("floor_pct") ? fmt_pct(c["floor_pct"].get<double>(), 1) : "n/a",
                   c.contains("pass_through") ? fmt_fixed(c["pass_through"].get<double>(), 3)
                                              : "n/a",
                   fmt_fixed(c.at("pss_pvalue").get<double>(), 4),
                   c.at("regime").get<std::string>() + (borderline ? "*" : "")});
    }
    std::ostringstream body;
    body << t.render();
    if (!doc.at("omitted").empty()) {
        body << "omitted firms:\n";
        for (const auto& o : doc.at("omitted"))
            body << "  " << o.at("firm_id").get<std::string>() << ": "
                 << o.at("reason").get<std::string>() << "\n";
    }
    body << "* regime borderline: gas estimate within 10% of the threshold\n";
    return body.str();
}

}  // namespace

int cmd_score(const std::string& panel_path, const std::string& pooled_fit_path,
              const ProjectConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        Panel panel = ingest::load_panel_file(panel_path);
        if (panel.records.empty()) throw DataError("panel has no records");
        econ::FitResult pooled_fit;
        {
            std::ifstream in(pooled_fit_path);
            if (!in) throw ConfigError("cannot open pooled fit: " + pooled_fit_path);
            pooled_fit = econ::fit_from_json_stream(in);
        }

        const double threshold = gas_threshold_usd(panel, cfg);
        metrics::PermutationConfig perm;
        perm.replications = cfg.permutation_replications;

        struct Row {
            metrics::FirmScorecard card;
            std::string industry;
            std::string regime;
            bool borderline = false;
        };
        std::vector<Row> rows;
        json omitted = json::array();
        json firm_fits = json::object();

        for (std::size_t fi = 0; fi < cfg.firms.size(); ++fi) {
            const auto& fc = cfg.firms[fi];
            const auto recs = panel.firm_records(fc.id);
            econ::FitResult firm_fit;
            const econ::FitResult* firm_fit_ptr = nullptr;
            std::string firm_fit_error;
            try {
                econ::ModelSpec spec;
                spec.include_fullness = true;
                firm_fit = econ::fit_model(panel, spec, fc.id);
                firm_fit_ptr = &firm_fit;
                std::ostringstream buf;
                econ::fit_to_json_stream(firm_fit, buf);
                firm_fits[fc.id] = json::parse(buf.str());
            } catch (const std::exception& e) {
                // firm-level fit can fail on tiny firms; scorecard reports it
                firm_fit_error = e.what();
            }
            try {
                perm.seed = permutation_seed(cfg, fi);
                Row row;
                row.card = metrics::scorecard(panel, fc.id, pooled_fit, firm_fit_ptr,
                                              cfg.peak_window, perm);
                if (!firm_fit_error.empty())
                    row.card.not_computable["pass_through"] =
                        "firm-level fit failed: " + firm_fit_error;
                row.industry = fc.industry;
                double gas_estimate = 0;
                for (const auto* r : recs) gas_estimate += r->fee_usd();
                if (!recs.empty()) gas_estimate /= static_cast<double>(recs.size());
                sched::TxProfile profile;
                profile.gas_estimate = gas_estimate;
                profile.deferrable = fc.deferrable;
                profile.kappa_usd = fc.kappa_usd;
                row.regime = sched::to_string(
                    sched::classify_regime(profile, threshold, &row.borderline));
                rows.push_back(std::move(row));
            } catch (const std::exception& e) {
                omitted.push_back({{"firm_id", fc.id}, {"reason", e.what()}});
            }
        }

        std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
            if (a.card.pss != b.card.pss) return a.card.pss > b.card.pss;
            return a.card.firm_id < b.card.firm_id;
        });

        json doc;
        doc["gas_threshold_usd"] = threshold;
        doc["peak_window"] = std::vector<int>(cfg.peak_window.hours.begin(),
                                              cfg.peak_window.hours.end());
        doc["permutation"] = {{"replications", cfg.permutation_replications},
                              {"rng", RNG_ALGORITHM},
                              {"seed", cfg.seed}};
        json cards = json::array();
        for (const auto& r : rows)
            cards.push_back(scorecard_to_json(r.card, r.industry, r.regime, r.borderline));
        doc["scorecards"] = std::move(cards);
        doc["omitted"] = std::move(omitted);

        std::string dir = cfg.output_dir;
        fs::create_directories(dir);
        OutputSet outputs;
        {
            auto f = outputs.open(fs::path(dir) / "scorecards.json");
            f << doc.dump(1, '\t') << "\n";
        }
        {
            auto f = outputs.open(fs::path(dir) / "firm_fits.json");
            f << firm_fits.dump(1, '\t') << "\n";
        }
        {
            auto f = outputs.open(fs::path(dir) / "scorecards.csv");
            write_scorecards_csv(f, doc);
        }
        const std::string table = scorecards_table_text(doc);
        {
            auto f = outputs.open(fs::path(dir) / "scorecards.txt");
            f << table;
        }
        out << table;
        outputs.keep();
        return EXIT_OK;
    } catch (const EstimationError& e) {
        err << "score: " << e.what() << "\n";
        return EXIT_NOT_COMPUTABLE;
    } catch (const MetricError& e) {
        err << "score: " << e.what() << "\n";
        return EXIT_NOT_COMPUTABLE;
    } catch (const std::exception& e) {
        err << "score: " << e.what() << "\n";
        return EXIT_CONFIG;
    }
}

// ------------------------------ recommend ----------------------------------

int cmd_recommend(const std::string& fit_path, const std::string& gas,
                  bool deferrable, double kappa, std::optional<i64> volume,
                  std::optional<int> deadline_hours, double gas_threshold,
                  const std::string& out_dir, std::ostream& out, std::ostream& err) {
    try {
        econ::FitResult fit;
        {
            std::ifstream in(fit_path);
            if (!in) throw ConfigError("cannot open fit: " + fit_path);
            fit = econ::fit_from_json_stream(in);
        }
        auto curve = sched::forward_curve(fit);

        double threshold = gas_threshold;
        sched::TxProfile profile;
        profile.deferrable = deferrable;
        profile.kappa_usd = kappa;
        profile.monthly_volume = volume;
        profile.deadline_window_hours = deadline_hours;
        if (gas == "high" || gas == "low") {
            if (threshold <= 0) threshold = 1.0;  // keyword mode needs no real threshold
            profile.gas_estimate = gas == "high" ? 2.0 * threshold : 0.5 * threshold;
        } else {
            auto v = parse_scaled_decimal(gas, 6);
            if (!v || *v < 0) throw ConfigError("--gas must be high, low, or a number");
            if (threshold <= 0)
                throw ConfigError("numeric --gas needs --gas-threshold");
            profile.gas_estimate = static_cast<double>(static_cast<i64>(*v)) / USD_SCALE;
        }
        if (deadline_hours && *deadline_hours < 1)
            throw ConfigError("--deadline-hours must be >= 1");
        if (volume && *volume < 1) throw ConfigError("--volume must be >= 1");
        if (kappa < 0) throw ConfigError("--kappa must be >= 0");

        auto rec = sched::recommend(profile, curve, threshold);
        const bool defer = sched::defer_decision(rec.expected_saving_per_tx, kappa);

        json j;
        j["regime"] = sched::to_string(rec.regime);
        j["borderline"] = rec.borderline;
        j["action"] = sched::to_string(rec.action);
        j["recommended_hours"] = rec.recommended_hours;
        j["expected_saving_per_tx_usd"] = rec.expected_saving_per_tx;
        if (rec.monthly_saving) j["monthly_saving_usd"] = *rec.monthly_saving;
        j["provisioning_surcharge_usd"] = rec.provisioning_surcharge;
        j["defer"] = defer;
        j["warnings"] = rec.warnings;

        std::string dir = out_dir;
        apply_out_env(dir);
        OutputSet outputs;
        if (!dir.empty()) {
            fs::create_directories(dir);
            auto f = outputs.open(fs::path(dir) / "recommendation.json");
            f << j.dump(1, '\t') << "\n";
        }

        out << "regime " << sched::to_string(rec.regime) << (rec.borderline ? "*" : "")
            << "  action " << sched::to_string(rec.action) << "\n";
        if (!rec.recommended_hours.empty()) {
            out << "recommended hours (cheapest first):";
            for (int h : rec.recommended_hours) out << " " << h;
            out << "\n";
        }
        out << "expected saving per tx: $" << fmt_fixed(rec.expected_saving_per_tx, 4) << "\n";
        if (rec.monthly_saving)
            out << "monthly saving at volume: $" << fmt_fixed(*rec.monthly_saving, 2) << "\n";
        if (rec.provisioning_surcharge > 0)
            out << "provision per peak-window tx: $" << fmt_fixed(rec.provisioning_surcharge, 4)
                << "\n";
        out << (defer ? "decision: defer into the recommended window\n"
                      : "decision: submit now (delay cost covers the fee delta)\n");
        for (const auto& w : rec.warnings) out << "warning: " << w << "\n";
        outputs.keep();
        return EXIT_OK;
    } catch (const std::exception& e) {
        err << "recommend: " << e.what() << "\n";
        return EXIT_CONFIG;
    }
}

// ------------------------------- simulate ----------------------------------

namespace {

std::array<double, 24> rates_from_json(const json& j, const char* key, double fallback) {
    std::array<double, 24> rates;
    rates.fill(fallback);
    if (!j.contains(key)) return rates;
    const auto& v = j[key];
    if (v.is_number()) {
        rates.fill(v.get<double>());
    } else if (v.is_array()) {
        if (v.size() != 24) throw ConfigError(std::string(key) + " must have 24 entries");
        for (int h = 0; h < 24; ++h) rates[static_cast<std::size_t>(h)] = v[h].get<double>();
    } else {
        throw ConfigError(std::string(key) + " must be a number or a 24-entry array");
    }
    return rates;
}

sim::DemandParams scenario_from_json(const json& j) {
    sim::DemandParams p = sim::default_diurnal_params();
    p.txn_rate_per_block = rates_from_json(j, "txn_rate_per_block", p.txn_rate_per_block[0]);
    if (j.contains("burst_intensity_per_block")) {
        p.burst_intensity_per_block = rates_from_json(j, "burst_intensity_per_block", 0.0);
    } else if (j.contains("burst_window")) {
        const double base = j.value("burst_base_intensity", 0.1);
        const double peak = j.value("burst_window_intensity", 12.0);
        p.burst_intensity_per_block.fill(base);
        for (const auto& h : j["burst_window"])
            p.burst_intensity_per_block.at(h.get<std::size_t>()) = peak;
    }
    p.txn_gas = j.value("txn_gas", p.txn_gas);
    p.txn_priority_fee_wei = j.value("txn_priority_fee_wei", p.txn_priority_fee_wei);
    p.txn_max_fee_wei = j.value("txn_max_fee_wei", p.txn_max_fee_wei);
    p.burst_size_mean = j.value("burst_size_mean", p.burst_size_mean);
    p.spec_gas = j.value("spec_gas", p.spec_gas);
    p.spec_priority_fee_wei = j.value("spec_priority_fee_wei", p.spec_priority_fee_wei);
    p.spec_max_fee_wei = j.value("spec_max_fee_wei", p.spec_max_fee_wei);
    return p;
}

sim::SynthFirmSpec synth_spec_from_json(const json& j) {
    sim::SynthFirmSpec s;
    s.firm_id = j.value("firm_id", s.firm_id);
    s.industry = j.value("industry", s.industry);
    s.address = j.value("address", s.address);
    s.n_records = j.value("n_records", s.n_records);
    s.alpha_usd = j.value("alpha_usd", s.alpha_usd);
    s.pass_through_usd = j.value("pass_through_usd", s.pass_through_usd);
    s.noise_sd_usd = j.value("noise_sd_usd", s.noise_sd_usd);
    s.usd_per_eth = j.value("usd_per_eth", s.usd_per_eth);
    if (j.contains("hour_premium_usd")) {
        const auto& v = j["hour_premium_usd"];
        if (v.is_array() && v.size() == 24) {
            for (int h = 0; h < 24; ++h)
                s.hour_premium_usd[static_cast<std::size_t>(h)] = v[h].get<double>();
        } else if (v.is_object()) {
            const double amount = v.value("amount", 0.05);
            for (const auto& h : v.at("hours"))
                s.hour_premium_usd.at(h.get<std::size_t>()) = amount;
        }
    }
    if (j.contains("hour_weights")) {
        const auto& v = j["hour_weights"];
        if (!v.is_array() || v.size() != 24)
            throw ConfigError("hour_weights must have 24 entries");
        for (int h = 0; h < 24; ++h)
            s.hour_weights[static_cast<std::size_t>(h)] = v[h].get<double>();
    }
    return s;
}

}  // namespace

int cmd_simulate(const std::string& scenario_path, std::uint64_t seed, int hours,
                 int blocks_per_hour, bool emit_panel, const std::string& out_dir,
                 std::ostream& out, std::ostream& err) {
    try {
        if (hours < 1) throw ConfigError("--hours must be >= 1");
        if (blocks_per_hour < 1) throw ConfigError("--blocks-per-hour must be >= 1");

        json scenario = json::object();
        if (!scenario_path.empty()) scenario = read_json_file(scenario_path);
        const sim::DemandParams params = scenario_from_json(scenario);

        auto traj = sim::simulate(params, hours, blocks_per_hour, seed);

        std::string dir = out_dir;
        apply_out_env(dir);
        fs::create_directories(dir);
        OutputSet outputs;
        {
            auto f = outputs.open(fs::path(dir) / "trajectory.csv");
            sim::write_trajectory(f, traj);
        }

        TextTable t;
        t.add_column("hour");
        t.add_column("mean_base_fee_wei");
        const auto mean = traj.mean_base_fee_by_hour();
        const int shown = std::min(traj.hours(), 24);
        for (int h = 0; h < shown; ++h)
            t.add_row({std::to_string(h),
                       fmt_fixed(mean[static_cast<std::size_t>(h)], 0)});
        out << t.render();

        if (emit_panel) {
            std::vector<sim::SynthFirmSpec> specs;
            if (scenario.contains("synthetic_firms")) {
                for (const auto& jf : scenario["synthetic_firms"])
                    specs.push_back(synth_spec_from_json(jf));
            } else {
                specs.push_back(sim::SynthFirmSpec{});
            }
            auto synth = sim::export_synthetic_panel(traj, specs, derive_seed(seed, 1));
            {
                auto f = outputs.open(fs::path(dir) / "panel_synth.json");
                ingest::save_panel(synth.panel, f);
            }
            json truth;
            truth["alpha_usd"] = synth.truth.alpha_usd;
            truth["hour_premium_usd"] = synth.truth.hour_premium_usd;
            truth["pass_through_usd"] = synth.truth.pass_through_usd;
            {
                auto f = outputs.open(fs::path(dir) / "panel_synth_truth.json");
                f << truth.dump(1, '\t') << "\n";
            }
            out << "synthetic panel: " << (fs::path(dir) / "panel_synth.json").string()
                << "\n";
        }
        outputs.keep();
        return EXIT_OK;
    } catch (const std::exception& e) {
        err << "simulate: " << e.what() << "\n";
        return EXIT_CONFIG;
    }
}

// -------------------------------- report -----------------------------------

namespace {

json require_artifact(const fs::path& dir, const char* name) {
    const fs::path p = dir / name;
    if (!fs::exists(p))
        throw ConfigError("missing input artifact: " + p.string() +
                          " (run the producing command first)");
    return read_json_file(p.string());
}

std::string pooled_coef_table(const std::optional<econ::FitResult>& m1,
                              const std::optional<econ::FitResult>& m2) {
    TextTable t;
    t.add_column("term", TextTable::Align::LEFT);
    if (m1) {
        t.add_column("est(1)");
        t.add_column("t(1)");
        t.add_column("sig(1)", TextTable::Align::LEFT);
    }
    if (m2) {
        t.add_column("est(2)");
        t.add_column("t(2)");
        t.add_column("sig(2)", TextTable::Align::LEFT);
    }
    auto cells_for = [](const std::optional<econ::FitResult>& fit, const std::string& term,
                        std::vector<std::string>& cells) {
        if (!fit) return;
        if (fit->has_term(term)) {
            cells.push_back(fmt_fixed(fit->coef.at(term), 4));
            cells.push_back(fmt_fixed(fit->t.at(term), 3));
            cells.push_back(econ::stars(fit->t.at(term)));
        } else {
            cells.push_back("---");
            cells.push_back("---");
            cells.push_back("");
        }
    };
    for (int h = 0; h < 24; ++h) {
        const std::string term = "h" + std::to_string(h);
        const bool baseline =
            (m1 && h == m1->spec.baseline_hour) || (m2 && h == m2->spec.baseline_hour);
        if (baseline) continue;
        std::vector<std::string> cells{term};
        cells_for(m1, term, cells);
        cells_for(m2, term, cells);
        t.add_row(std::move(cells));
    }
    for (const std::string& term : {std::string("phi_br"), std::string("phi_s"),
                                    std::string("intercept")}) {
        if (!(m1 && m1->has_term(term)) && !(m2 && m2->has_term(term))) continue;
        std::vector<std::string> cells{term};
        cells_for(m1, term, cells);
        cells_for(m2, term, cells);
        t.add_row(std::move(cells));
    }
    std::ostringstream body;
    body << t.render();
    if (m1 && m1->adj_r2) body << "adj_r2(1)  " << fmt_fixed(*m1->adj_r2, 4) << "\n";
    if (m2 && m2->adj_r2) body << "adj_r2(2)  " << fmt_fixed(*m2->adj_r2, 4) << "\n";
    body << "n          " << (m1 ? m1->n : m2->n) << "\n";
    return body.str();
}

}  // namespace

int cmd_report(const std::string& artifacts_dir, const std::string& report_dir,
               std::ostream& out, std::ostream& err) {
    try {
        const fs::path adir(artifacts_dir);
        std::string rdir_s = report_dir;
        apply_out_env(rdir_s);
        const fs::path rdir(rdir_s);

        if (!fs::exists(adir / "panel.json"))
            throw ConfigError("missing input artifact: " + (adir / "panel.json").string());
        Panel panel = ingest::load_panel_file((adir / "panel.json").string());

        std::optional<econ::FitResult> m1, m2;
        if (fs::exists(adir / "fit_base.json")) {
            std::ifstream in(adir / "fit_base.json");
            m1 = econ::fit_from_json_stream(in);
        }
        if (fs::exists(adir / "fit_fullness.json")) {
            std::ifstream in(adir / "fit_fullness.json");
            m2 = econ::fit_from_json_stream(in);
        }
        if (!m1 && !m2)
            throw ConfigError("missing input artifact: fit_base.json or fit_fullness.json in " +
                              adir.string());
        json scorecards = require_artifact(adir, "scorecards.json");
        json firm_fits = require_artifact(adir, "firm_fits.json");

        fs::create_directories(rdir);
        OutputSet outputs;
        std::vector<std::string> files;

        {
            auto f = outputs.open(rdir / "coef_pooled.txt");
            f << pooled_coef_table(m1, m2);
            files.push_back("coef_pooled.txt");
        }

        {
            // Per-firm hour premia side by side, one column pair per firm.
            std::vector<std::pair<std::string, econ::FitResult>> fits;
            for (const auto& fc : panel.firms) {
                if (!firm_fits.contains(fc.firm_id)) continue;
                std::stringstream buf(firm_fits[fc.firm_id].dump());
                fits.emplace_back(fc.firm_id, econ::fit_from_json_stream(buf));
            }
            TextTable t;
            t.add_column("term", TextTable::Align::LEFT);
            for (const auto& [id, fit] : fits) {
                t.add_column(id);
                t.add_column("t");
            }
            std::vector<std::string> terms;
            for (int h = 0; h < 24; ++h) terms.push_back("h" + std::to_string(h));
            terms.push_back("phi_br");
            terms.push_back("intercept");
            for (const auto& term : terms) {
                bool baseline_everywhere = true;
                for (const auto& [id, fit] : fits)
                    if (fit.has_term(term)) baseline_everywhere = false;
                if (baseline_everywhere) continue;
                std::vector<std::string> cells{term};
                for (const auto& [id, fit] : fits) {
                    if (fit.has_term(term)) {
                        cells.push_back(fmt_fixed(fit.coef.at(term), 3) +
                                        econ::stars(fit.t.at(term)));
                        cells.push_back(fmt_fixed(fit.t.at(term), 2));
                    } else {
                        cells.push_back("---");
                        cells.push_back("---");
                    }
                }
                t.add_row(std::move(cells));
            }
            auto f = outputs.open(rdir / "coef_firms.txt");
            f << t.render();
            files.push_back("coef_firms.txt");
        }

        {
            auto f = outputs.open(rdir / "scorecards.txt");
            f << scorecards_table_text(scorecards);
            files.push_back("scorecards.txt");
        }

        {
            // Residual-floor table, rows sorted by floor share descending.
            auto cards = scorecards.at("scorecards");
            std::vector<json> rows(cards.begin(), cards.end());
            std::sort(rows.begin(), rows.end(), [](const json& a, const json& b) {
                const double fa = a.value("floor_pct", 0.0), fb = b.value("floor_pct", 0.0);
                if (fa != fb) return fa > fb;
                return a.at("firm_id").get<std::string>() < b.at("firm_id").get<std::string>();
            });
            TextTable t;
            t.add_column("industry", TextTable::Align::LEFT);
            t.add_column("firm", TextTable::Align::LEFT);
            t.add_column("n");
            t.add_column("h*");
            t.add_column("mean_at_h*");
            t.add_column("c_actual");
            t.add_column("c_cf");
            t.add_column("floor_usd");
            t.add_column("floor_pct");
            t.add_column("phi_at_h*");
            for (const auto& c : rows) {
                t.add_row({c.at("industry").get<std::string>(),
                           c.at("firm_id").get<std::string>(),
                           std::to_string(c.at("n_total").get<i64>()),
                           std::to_string(c.at("cheapest_hour").get<int>()),
                           fmt_fixed(c.at("mean_gas_cheapest").get<double>(), 3),
                           fmt_fixed(c.at("c_actual").get<double>(), 2),
                           fmt_fixed(c.at("c_cf").get<double>(), 2),
                           fmt_fixed(c.at("floor_usd").get<double>(), 2),
                           c.contains("floor_pct") ? fmt_fixed(c["floor_pct"].get<double>(), 3)
                                                   : "n/a",
                           c.contains("fullness_at_cheapest")
                               ? fmt_fixed(c["fullness_at_cheapest"].get<double>(), 3)
                               : "n/a"});
            }
            auto f = outputs.open(rdir / "floors.txt");
            f << t.render();
            files.push_back("floors.txt");
        }

        {
            TextTable t;
            t.add_column("firm", TextTable::Align::LEFT);
            t.add_column("n_mf");
            t.add_column("n_wke");
            t.add_column("gas_mf");
            t.add_column("gas_wke");
            t.add_column("premium");
            t.add_column("t_gas");
            t.add_column("phi_mf");
            t.add_column("phi_wke");
            t.add_column("d_phi");
            t.add_column("t_phi");
            std::vector<std::string> omitted;
            for (const auto& fc : panel.firms) {
                const auto recs = panel.firm_records(fc.firm_id);
                std::string reason;
                auto ww = metrics::weekday_weekend(recs, panel, &reason);
                if (!ww) {
                    omitted.push_back(fc.firm_id + ": " + reason);
                    continue;
                }
                t.add_row({fc.firm_id, std::to_string(ww->n_weekday),
                           std::to_string(ww->n_weekend), fmt_fixed(ww->mean_gas_weekday, 3),
                           fmt_fixed(ww->mean_gas_weekend, 3), fmt_fixed(ww->premium, 3),
                           fmt_fixed(ww->t_gas.t, 3), fmt_fixed(ww->mean_phi_weekday, 3),
                           fmt_fixed(ww->mean_phi_weekend, 3), fmt_fixed(ww->delta_phi, 3),
                           fmt_fixed(ww->t_phi.t, 3)});
            }
            auto f = outputs.open(rdir / "weekday_weekend.txt");
            f << t.render();
            for (const auto& o : omitted) f << "omitted " << o << "\n";
            files.push_back("weekday_weekend.txt");
        }

        {
            auto curve = sched::forward_curve(m1 ? *m1 : *m2);
            auto f = outputs.open(rdir / "forward_curve.csv");
            sched::write_curve(f, curve);
            files.push_back("forward_curve.csv");
        }

        {
            std::sort(files.begin(), files.end());
            json manifest;
            manifest["report_schema"] = 1;
            manifest["files"] = files;
            auto f = outputs.open(rdir / "manifest.json");
            f << manifest.dump(1, '\t') << "\n";
        }

        out << "report written to " << rdir.string() << " (" << files.size()
            << " files + manifest)\n";
        outputs.keep();
        return EXIT_OK;
    } catch (const std::exception& e) {
        err << "report: " << e.what() << "\n";
        return EXIT_CONFIG;
    }
}

// --------------------------------- argv ------------------------------------

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"intraday gas-fee structure, peak-shaving scorecards, and "
                 "submission scheduling for Ethereum transaction exports"};
    app.require_subcommand(1);

    std::string config_path, panel_path, fit_path, model = "base", fe = "none";
    std::string out_dir = "out", gas = "low", scenario_path, artifacts_dir = "out";
    std::string report_dir = "report";
    bool deferrable = false, emit_panel = false;
    double kappa = 0.0, gas_threshold = 0.0;
    std::uint64_t seed = 0;
    int hours = 24, blocks_per_hour = 300;
    i64 volume = 0;
    int deadline_hours = 0;

    auto* ingest_cmd = app.add_subcommand("ingest", "parse exports and build the panel");
    ingest_cmd->add_option("--config", config_path, "project config JSON")->required();

    auto* fit_cmd = app.add_subcommand("fit", "hour-of-day regression on a panel");
    fit_cmd->add_option("--panel", panel_path, "panel.json path")->required();
    fit_cmd->add_option("--model", model, "base|fullness");
    fit_cmd->add_option("--fixed-effects", fe, "none|firm,week");
    fit_cmd->add_option("--out", out_dir, "output directory");

    auto* score_cmd = app.add_subcommand("score", "firm peak-shaving scorecards");
    score_cmd->add_option("--config", config_path, "project config JSON")->required();
    score_cmd->add_option("--panel", panel_path, "panel.json path")->required();
    score_cmd->add_option("--pooled-fit", fit_path, "pooled fit JSON")->required();

    auto* rec_cmd = app.add_subcommand("recommend", "regime and submission guidance");
    rec_cmd->add_option("--fit", fit_path, "fit JSON with hour terms")->required();
    rec_cmd->add_option("--gas", gas, "high|low|<expected fee USD>");
    rec_cmd->add_option("--gas-threshold", gas_threshold, "USD threshold for high/low");
    rec_cmd->add_flag("--deferrable,!--no-deferrable", deferrable,
                      "transactions can wait inside the window");
    rec_cmd->add_option("--kappa", kappa, "delay cost USD per deferred tx");
    rec_cmd->add_option("--volume", volume, "monthly volume for aggregate saving");
    rec_cmd->add_option("--deadline-hours", deadline_hours, "deferral window length");
    rec_cmd->add_option("--out", out_dir, "output directory (optional)");

    auto* sim_cmd = app.add_subcommand("simulate", "EIP-1559 fee-market simulation");
    sim_cmd->add_option("--scenario", scenario_path, "scenario JSON (defaults when absent)");
    sim_cmd->add_option("--seed", seed, "simulation seed");
    sim_cmd->add_option("--hours", hours, "simulated hours");
    sim_cmd->add_option("--blocks-per-hour", blocks_per_hour, "block cadence");
    sim_cmd->add_flag("--emit-panel", emit_panel, "export an ingest-compatible panel");
    sim_cmd->add_option("--out", out_dir, "output directory");

    auto* report_cmd = app.add_subcommand("report", "assemble the report bundle");
    report_cmd->add_option("--artifacts", artifacts_dir, "directory with prior outputs");
    report_cmd->add_option("--out", report_dir, "report directory");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        std::ostringstream msg;
        const int code = app.exit(e, out, msg);
        err << msg.str();
        return code == 0 ? EXIT_OK : EXIT_CONFIG;
    }

    try {
        if (ingest_cmd->parsed()) return cmd_ingest(load_config(config_path), out, err);
        if (fit_cmd->parsed()) return cmd_fit(panel_path, model, fe, out_dir, out, err);
        if (score_cmd->parsed())
            return cmd_score(panel_path, fit_path, load_config(config_path), out, err);
        if (rec_cmd->parsed())
            return cmd_recommend(fit_path, gas, deferrable, kappa,
                                 rec_cmd->count("--volume") ? std::optional<i64>(volume)
                                                            : std::nullopt,
                                 rec_cmd->count("--deadline-hours")
                                     ? std::optional<int>(deadline_hours)
                                     : std::nullopt,
                                 gas_threshold, out_dir, out, err);
        if (sim_cmd->parsed())
            return cmd_simulate(scenario_path, seed, hours, blocks_per_hour, emit_panel,
                                out_dir, out, err);
        if (report_cmd->parsed()) return cmd_report(artifacts_dir, report_dir, out, err);
    } catch (const ConfigError& e) {
        err << e.what() << "\n";
        return EXIT_CONFIG;
    } catch (const DataError& e) {
        err << e.what() << "\n";
        return EXIT_CONFIG;
    } catch (const std::exception& e) {
        err << e.what() << "\n";
        return EXIT_NOT_COMPUTABLE;
    }
    return EXIT_CONFIG;
}

}  // namespace gascope::cli
