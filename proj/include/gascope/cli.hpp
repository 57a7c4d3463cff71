#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gascope/ingest.hpp"
#include "gascope/metrics.hpp"

namespace gascope::cli {

// Exit-code contract: 0 success, 1 analysis-level not-computable,
// 2 configuration/data error.
inline constexpr int EXIT_OK = 0;
inline constexpr int EXIT_NOT_COMPUTABLE = 1;
inline constexpr int EXIT_CONFIG = 2;

struct FirmConfig {
    std::string id;
    std::string industry;
    std::string address;
    std::string tx_file;
    bool deferrable = true;
    double kappa_usd = 0.0;
};

enum class ThresholdMode { MEAN, MEDIAN, ABSOLUTE };

struct ProjectConfig {
    std::vector<FirmConfig> firms;
    std::string blocks_file;
    char delimiter = ',';
    ingest::ColumnMap column_map;
    ingest::BlocksColumnMap blocks_column_map;
    metrics::PeakWindow peak_window;
    int permutation_replications = 10000;
    std::uint64_t seed = 0;  // root seed; stages derive from it
    ThresholdMode threshold_mode = ThresholdMode::MEAN;
    double threshold_value = 0.0;  // used by ABSOLUTE
    std::optional<std::string> tag_overrides_file;
    std::string output_dir = "out";

    void validate() const;
};

ProjectConfig load_config(const std::string& path);

// Panel-wide gas-intensity threshold per the configured mode.
double gas_threshold_usd(const Panel& panel, const ProjectConfig& cfg);

// Per-stage seed derivation from the config root seed. Stage indices are
// stable so reruns and parallel schedules agree.
std::uint64_t permutation_seed(const ProjectConfig& cfg, std::size_t firm_index);
std::uint64_t simulation_seed(const ProjectConfig& cfg);

int cmd_ingest(const ProjectConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_fit(const std::string& panel_path, const std::string& model,
            const std::string& fixed_effects, const std::string& out_dir, std::ostream& out,
            std::ostream& err);
int cmd_score(const std::string& panel_path, const std::string& pooled_fit_path,
              const ProjectConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_recommend(const std::string& fit_path, const std::string& gas,
                  bool deferrable, double kappa, std::optional<i64> volume,
                  std::optional<int> deadline_hours, double gas_threshold,
                  const std::string& out_dir, std::ostream& out, std::ostream& err);
int cmd_simulate(const std::string& scenario_path, std::uint64_t seed, int hours,
                 int blocks_per_hour, bool emit_panel, const std::string& out_dir,
                 std::ostream& out, std::ostream& err);
int cmd_report(const std::string& artifacts_dir, const std::string& report_dir,
               std::ostream& out, std::ostream& err);

// Full argv entry point used by the binary and the tests.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gascope::cli
