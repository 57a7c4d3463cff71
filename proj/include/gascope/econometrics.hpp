#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gascope/types.hpp"

namespace gascope::econ {

// Which block-level congestion regressor Model 2 uses. The fullness proxy is
// the default; the speculative share is available as an alternative.
enum class CongestionRegressor { FULLNESS_PROXY, SPECULATIVE_SHARE };

struct ModelSpec {
    std::string dependent = "fee_usd";
    int baseline_hour = 23;
    bool include_fullness = false;  // Model 2 switch
    CongestionRegressor regressor = CongestionRegressor::FULLNESS_PROXY;
    bool fe_firm = false;
    bool fe_week = false;
};

struct Design {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<std::string> terms;    // column names; terms[0] == "intercept"
    std::vector<std::string> dropped;  // all-zero columns removed with a warning
};

struct OlsSolution {
    Eigen::VectorXd beta;
    Eigen::VectorXd residuals;
    Eigen::VectorXd hat_diag;
};

struct FitResult {
    std::map<std::string, double> coef;
    std::map<std::string, double> se_hc3;
    std::map<std::string, double> t;
    std::optional<double> adj_r2;
    i64 n = 0;
    ModelSpec spec;
    std::vector<std::string> dropped_terms;

    bool has_term(const std::string& term) const { return coef.count(term) != 0; }
};

struct WelchResult {
    double mean_a = 0, mean_b = 0;
    double t = 0;
    double df = 0;  // Welch-Satterthwaite
    i64 n_a = 0, n_b = 0;
};

struct PermutationNull {
    std::string statistic_name;
    double observed = 0;
    std::vector<double> null_draws;
    double p95 = 0;      // nearest-rank 95th percentile of the draws
    double p_value = 1;  // (#{draws >= observed} + 1) / (replications + 1)
    std::uint64_t seed = 0;
    std::string rng_algorithm;
};

// Design matrix: intercept, 23 hour dummies (baseline omitted), optional
// congestion column, optional firm/week fixed-effect dummies (one level
// omitted per group). Hours with zero rows are dropped and reported.
Design build_design(const Panel& panel, const ModelSpec& spec,
                    const std::string& firm_filter = "");

// Least squares through a column-pivoted QR; hat diagonals come from the
// thin Q factor. Rank deficiency is an error naming the collinear terms.
OlsSolution ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    const std::vector<std::string>& terms);

// HC3 sandwich: (X'X)^-1 X' diag(e_i^2/(1-h_ii)^2) X (X'X)^-1.
Eigen::VectorXd hc3_se(const Eigen::MatrixXd& X, const Eigen::VectorXd& residuals,
                       const Eigen::VectorXd& hat_diag);

// 1 - (SSR/(n-k-1)) / (SST/(n-1)); k excludes the intercept. nullopt when the
// dependent variable has no variance.
std::optional<double> adj_r2(const Eigen::VectorXd& residuals, const Eigen::VectorXd& y,
                             int k);

FitResult fit_model(const Panel& panel, const ModelSpec& spec,
                    const std::string& firm_filter = "");

WelchResult welch_t(std::span<const double> a, std::span<const double> b);

// Reassigns every record an independent uniform hour in each replication and
// recomputes the statistic. Replication r draws from derive_seed(seed, r), so
// any parallel schedule reproduces the serial stream.
PermutationNull permutation_null(const std::vector<int>& observed_hours,
                                 const std::function<double(std::span<const int>)>& statistic,
                                 int replications, std::uint64_t seed,
                                 const std::string& statistic_name);

// Significance stars at p < 0.05 / 0.01 / 0.001 (two-sided normal).
const char* stars(double t_stat);

// Table-shaped coefficient export: term, estimate, t, stars.
void write_coefficient_table(std::ostream& out, const FitResult& fit, char delimiter = ',');

void fit_to_json_stream(const FitResult& fit, std::ostream& out);
FitResult fit_from_json_stream(std::istream& in);

void permutation_to_json_stream(const PermutationNull& null, std::ostream& out);
PermutationNull permutation_from_json_stream(std::istream& in);

}  // namespace gascope::econ
