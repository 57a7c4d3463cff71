#include "gascope/econometrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gascope/csv.hpp"
#include "gascope/errors.hpp"
#include "gascope/rng.hpp"

using nlohmann::json;

namespace gascope::econ {

namespace {

// Monday-aligned week index for the week fixed effects.
i64 week_index(i64 timestamp_utc) {
    i64 days = timestamp_utc / 86400;
    if (timestamp_utc % 86400 < 0) --days;
    return (days + 3) / 7;
}

}  // namespace

Design build_design(const Panel& panel, const ModelSpec& spec,
                    const std::string& firm_filter) {
    if (spec.baseline_hour < 0 || spec.baseline_hour > 23)
        throw ConfigError("baseline hour must be in 0..23");

    std::vector<const TxRecord*> rows;
    for (const auto& r : panel.records)
        if (firm_filter.empty() || r.firm_id == firm_filter) rows.push_back(&r);
    if (rows.empty()) throw EstimationError("design has no rows");

    // Column plan before degenerate-column drops.
    struct Column {
        std::string term;
        std::function<double(const TxRecord&)> value;
    };
    std::vector<Column> cols;
    cols.push_back({"intercept", [](const TxRecord&) { return 1.0; }});
    for (int h = 0; h < 24; ++h) {
        if (h == spec.baseline_hour) continue;
        cols.push_back({"h" + std::to_string(h),
                        [h](const TxRecord& r) { return r.hour_utc == h ? 1.0 : 0.0; }});
    }
    if (spec.include_fullness) {
        for (const auto* r : rows) {
            auto it = panel.blocks.find(r->block_number);
            if (it == panel.blocks.end() || !it->second.enriched())
                throw EstimationError("fullness regressor requires congestion-enriched blocks");
        }
        if (spec.regressor == CongestionRegressor::FULLNESS_PROXY) {
            cols.push_back({"phi_br", [&panel](const TxRecord& r) {
                                return panel.blocks.at(r.block_number).fullness_proxy();
                            }});
        } else {
            cols.push_back({"phi_s", [&panel](const TxRecord& r) {
                                const auto& b = panel.blocks.at(r.block_number);
                                return static_cast<double>(b.share_s_nano) / FRAC_SCALE;
                            }});
        }
    }
    if (spec.fe_firm) {
        std::set<std::string> firms;
        for (const auto* r : rows) firms.insert(r->firm_id);
        bool first = true;  // one level omitted
        for (const auto& f : firms) {
            if (first) {
                first = false;
                continue;
            }
            cols.push_back({"firm:" + f,
                            [f](const TxRecord& r) { return r.firm_id == f ? 1.0 : 0.0; }});
        }
    }
    if (spec.fe_week) {
        std::set<i64> weeks;
        for (const auto* r : rows) weeks.insert(week_index(r->timestamp_utc));
        bool first = true;
        for (const auto w : weeks) {
            if (first) {
                first = false;
                continue;
            }
            cols.push_back({"week:" + std::to_string(w), [w](const TxRecord& r) {
                                return week_index(r.timestamp_utc) == w ? 1.0 : 0.0;
                            }});
        }
    }

    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd full(n, static_cast<Eigen::Index>(cols.size()));
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const TxRecord& r = *rows[static_cast<std::size_t>(i)];
        y(i) = r.fee_usd();
        for (std::size_t c = 0; c < cols.size(); ++c)
            full(i, static_cast<Eigen::Index>(c)) = cols[c].value(r);
    }

    Design d;
    d.y = std::move(y);
    std::vector<Eigen::Index> keep;
    for (std::size_t c = 0; c < cols.size(); ++c) {
        const auto col = full.col(static_cast<Eigen::Index>(c));
        if (c > 0 && col.cwiseAbs().maxCoeff() == 0.0) {
            d.dropped.push_back(cols[c].term);  // inestimable: no rows in this cell
        } else {
            keep.push_back(static_cast<Eigen::Index>(c));
            d.terms.push_back(cols[c].term);
        }
    }
    d.X.resize(n, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k)
        d.X.col(static_cast<Eigen::Index>(k)) = full.col(keep[k]);
    return d;
}

OlsSolution ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    const std::vector<std::string>& terms) {
    const Eigen::Index n = X.rows(), k = X.cols();
    if (n < k) throw EstimationError("more regressors than rows");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < k) {
        // The pivot order puts dependent columns last; name them.
        const auto perm = qr.colsPermutation().indices();
        std::string names;
        for (Eigen::Index j = qr.rank(); j < k; ++j) {
            if (!names.empty()) names += ", ";
            const auto c = static_cast<std::size_t>(perm(j));
            names += c < terms.size() ? terms[c] : ("col" + std::to_string(perm(j)));
        }
        throw EstimationError("design is rank deficient; collinear terms: " + names);
    }

    OlsSolution s;
    s.beta = qr.solve(y);
    s.residuals = y - X * s.beta;
    const Eigen::MatrixXd thin_q =
        qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
    s.hat_diag = thin_q.rowwise().squaredNorm();
    return s;
}

Eigen::VectorXd hc3_se(const Eigen::MatrixXd& X, const Eigen::VectorXd& residuals,
                       const Eigen::VectorXd& hat_diag) {
    const Eigen::Index n = X.rows(), k = X.cols();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (hat_diag(i) >= 1.0 - 1e-12)
            throw EstimationError("perfect-leverage row " + std::to_string(i) +
                                  " makes HC3 undefined");
    }
    Eigen::VectorXd d(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double u = 1.0 - hat_diag(i);
        d(i) = residuals(i) * residuals(i) / (u * u);
    }
    const Eigen::MatrixXd xtx = X.transpose() * X;
    const Eigen::MatrixXd xtx_inv = xtx.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    const Eigen::MatrixXd meat = X.transpose() * d.asDiagonal() * X;
    const Eigen::MatrixXd cov = xtx_inv * meat * xtx_inv;
    return cov.diagonal().array().max(0.0).sqrt();
}

std::optional<double> adj_r2(const Eigen::VectorXd& residuals, const Eigen::VectorXd& y,
                             int k) {
    const auto n = static_cast<double>(y.size());
    if (n <= k + 1) throw EstimationError("adjusted R^2 needs n > k + 1");
    const double mean = y.mean();
    const double sst = (y.array() - mean).square().sum();
    if (sst == 0.0) return std::nullopt;
    const double ssr = residuals.squaredNorm();
    return 1.0 - (ssr / (n - k - 1)) / (sst / (n - 1));
}

FitResult fit_model(const Panel& panel, const ModelSpec& spec,
                    const std::string& firm_filter) {
    Design d = build_design(panel, spec, firm_filter);
    OlsSolution s = ols_fit(d.X, d.y, d.terms);
    Eigen::VectorXd se = hc3_se(d.X, s.residuals, s.hat_diag);

    FitResult fit;
    fit.spec = spec;
    fit.n = d.y.size();
    fit.dropped_terms = d.dropped;
    for (std::size_t c = 0; c < d.terms.size(); ++c) {
        const auto ci = static_cast<Eigen::Index>(c);
        fit.coef[d.terms[c]] = s.beta(ci);
        fit.se_hc3[d.terms[c]] = se(ci);
        fit.t[d.terms[c]] = se(ci) > 0 ? s.beta(ci) / se(ci) : 0.0;
    }
    fit.adj_r2 = adj_r2(s.residuals, d.y, static_cast<int>(d.terms.size()) - 1);
    return fit;
}

WelchResult welch_t(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2)
        throw EstimationError("Welch test needs at least two observations per sample");

    auto mean_var = [](std::span<const double> xs) {
        double m = 0;
        for (double x : xs) m += x;
        m /= static_cast<double>(xs.size());
        double v = 0;
        for (double x : xs) v += (x - m) * (x - m);
        v /= static_cast<double>(xs.size() - 1);
        return std::pair{m, v};
    };
    const auto [ma, va] = mean_var(a);
    const auto [mb, vb] = mean_var(b);
    if (va == 0.0 && vb == 0.0) {
        if (ma == mb) {
            WelchResult r;  // identical constant samples: no difference to test
            r.mean_a = ma;
            r.mean_b = mb;
            r.n_a = static_cast<i64>(a.size());
            r.n_b = static_cast<i64>(b.size());
            r.df = static_cast<double>(a.size() + b.size() - 2);
            return r;
        }
        throw EstimationError("both samples are degenerate (zero variance)");
    }

    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double sa = va / na, sb = vb / nb;
    WelchResult r;
    r.mean_a = ma;
    r.mean_b = mb;
    r.n_a = static_cast<i64>(a.size());
    r.n_b = static_cast<i64>(b.size());
    r.t = (ma - mb) / std::sqrt(sa + sb);
    r.df = (sa + sb) * (sa + sb) /
           (sa * sa / (na - 1) + sb * sb / (nb - 1));
    return r;
}

PermutationNull permutation_null(const std::vector<int>& observed_hours,
                                 const std::function<double(std::span<const int>)>& statistic,
                                 int replications, std::uint64_t seed,
                                 const std::string& statistic_name) {
    if (replications < 1) throw ConfigError("replications must be >= 1");
    if (observed_hours.empty()) throw EstimationError("permutation over an empty record set");

    PermutationNull out;
    out.statistic_name = statistic_name;
    out.seed = seed;
    out.rng_algorithm = RNG_ALGORITHM;
    out.observed = statistic(observed_hours);
    out.null_draws.resize(static_cast<std::size_t>(replications));

    std::vector<int> hours(observed_hours.size());
    for (int rep = 0; rep < replications; ++rep) {
        Xoshiro256ss rng(derive_seed(seed, static_cast<std::uint64_t>(rep)));
        for (auto& h : hours) h = rng.uniform_hour();
        out.null_draws[static_cast<std::size_t>(rep)] = statistic(hours);
    }

    std::vector<double> sorted = out.null_draws;
    std::sort(sorted.begin(), sorted.end());
    auto rank = static_cast<std::size_t>(
        std::ceil(0.95 * static_cast<double>(sorted.size())));
    if (rank == 0) rank = 1;
    out.p95 = sorted[rank - 1];

    std::size_t ge = 0;
    for (double v : out.null_draws)
        if (v >= out.observed) ++ge;
    out.p_value = static_cast<double>(ge + 1) / static_cast<double>(replications + 1);
    return out;
}

const char* stars(double t_stat) {
    const double a = std::fabs(t_stat);
    if (a >= 3.290526731) return "***";
    if (a >= 2.575829304) return "**";
    if (a >= 1.959963985) return "*";
    return "";
}

void write_coefficient_table(std::ostream& out, const FitResult& fit, char delimiter) {
    csv::write_row(out, {"term", "estimate", "t", "stars"}, delimiter);
    char est[32], tval[32];
    auto emit = [&](const std::string& term) {
        std::snprintf(est, sizeof(est), "%.6f", fit.coef.at(term));
        std::snprintf(tval, sizeof(tval), "%.3f", fit.t.at(term));
        csv::write_row(out, {term, est, tval, stars(fit.t.at(term))}, delimiter);
    };
    for (int h = 0; h < 24; ++h) {
        const std::string term = "h" + std::to_string(h);
        if (fit.has_term(term)) emit(term);
    }
    if (fit.has_term("phi_br")) emit("phi_br");
    if (fit.has_term("phi_s")) emit("phi_s");
    if (fit.has_term("intercept")) emit("intercept");
    for (const auto& [term, c] : fit.coef) {
        if (term.rfind("firm:", 0) == 0 || term.rfind("week:", 0) == 0) emit(term);
    }
}

void fit_to_json_stream(const FitResult& fit, std::ostream& out) {
    json j;
    j["n"] = fit.n;
    if (fit.adj_r2) j["adj_r2"] = *fit.adj_r2;
    j["coef"] = fit.coef;
    j["se_hc3"] = fit.se_hc3;
    j["t"] = fit.t;
    j["dropped_terms"] = fit.dropped_terms;
    j["spec"] = {{"dependent", fit.spec.dependent},
                 {"baseline_hour", fit.spec.baseline_hour},
                 {"include_fullness", fit.spec.include_fullness},
                 {"regressor", fit.spec.regressor == CongestionRegressor::FULLNESS_PROXY
                                   ? "phi_br"
                                   : "phi_s"},
                 {"fe_firm", fit.spec.fe_firm},
                 {"fe_week", fit.spec.fe_week}};
    out << j.dump(1, '\t') << "\n";
}

void permutation_to_json_stream(const PermutationNull& null, std::ostream& out) {
    json j;
    j["statistic"] = null.statistic_name;
    j["observed"] = null.observed;
    j["p95"] = null.p95;
    j["p_value"] = null.p_value;
    j["replications"] = null.null_draws.size();
    j["seed"] = null.seed;
    j["rng"] = null.rng_algorithm;
    j["null_draws"] = null.null_draws;
    out << j.dump(1, '\t') << "\n";
}

PermutationNull permutation_from_json_stream(std::istream& in) {
    json j = json::parse(in);
    PermutationNull null;
    null.statistic_name = j.at("statistic").get<std::string>();
    null.observed = j.at("observed").get<double>();
    null.p95 = j.at("p95").get<double>();
    null.p_value = j.at("p_value").get<double>();
    null.seed = j.at("seed").get<std::uint64_t>();
    null.rng_algorithm = j.at("rng").get<std::string>();
    null.null_draws = j.at("null_draws").get<std::vector<double>>();
    return null;
}

FitResult fit_from_json_stream(std::istream& in) {
    json j = json::parse(in);
    FitResult fit;
    fit.n = j.at("n").get<i64>();
    if (j.contains("adj_r2")) fit.adj_r2 = j["adj_r2"].get<double>();
    fit.coef = j.at("coef").get<std::map<std::string, double>>();
    fit.se_hc3 = j.at("se_hc3").get<std::map<std::string, double>>();
    fit.t = j.at("t").get<std::map<std::string, double>>();
    fit.dropped_terms = j.at("dropped_terms").get<std::vector<std::string>>();
    const auto& js = j.at("spec");
    fit.spec.dependent = js.at("dependent").get<std::string>();
    fit.spec.baseline_hour = js.at("baseline_hour").get<int>();
    fit.spec.include_fullness = js.at("include_fullness").get<bool>();
    fit.spec.regressor = js.at("regressor").get<std::string>() == "phi_s"
                             ? CongestionRegressor::SPECULATIVE_SHARE
                             : CongestionRegressor::FULLNESS_PROXY;
    fit.spec.fe_firm = js.at("fe_firm").get<bool>();
    fit.spec.fe_week = js.at("fe_week").get<bool>();
    return fit;
}

}  // namespace gascope::econ
