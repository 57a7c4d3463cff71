#include <doctest.h>

#include <cmath>

#include "gascope/econometrics.hpp"
#include "gascope/errors.hpp"
#include "gascope/rng.hpp"
#include "oracle.hpp"

using namespace gascope;
using namespace gascope::econ;

namespace {

// Panel with one record per (hour, fee) pair; block rewards chosen so the
// fullness proxy varies when enrichment is requested.
Panel panel_of(const std::vector<std::pair<int, double>>& hour_fee,
               bool enriched_blocks = false) {
    Panel p;
    p.firms.push_back(Firm{"f", "", "0x1", true, 0});
    i64 block = 1;
    for (const auto& [hour, fee] : hour_fee) {
        TxRecord r;
        r.tx_hash = "0x" + std::to_string(block);
        r.block_number = block;
        r.timestamp_utc = 1767225600 + static_cast<i64>(hour) * 3600;
        r.hour_utc = hour;
        r.weekday = weekday_of_timestamp(r.timestamp_utc);
        r.from_addr = "0xf";
        r.fee_usd_micro = static_cast<i64>(std::llround(fee * USD_SCALE));
        r.firm_id = "f";
        p.records.push_back(r);
        BlockStat bs{block, 100 + block};
        if (enriched_blocks) {
            bs.fullness_proxy_nano = (block % 10) * (FRAC_SCALE / 10);
            bs.share_s_nano = bs.fullness_proxy_nano / 2;
            bs.share_u_nano = bs.fullness_proxy_nano - bs.share_s_nano;
        }
        p.blocks.emplace(block, bs);
        ++block;
    }
    return p;
}

Eigen::MatrixXd to_eigen(const oracle::Mat& m) {
    Eigen::MatrixXd x(m.size(), m[0].size());
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m[0].size(); ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m[i][j];
    return x;
}

Eigen::VectorXd to_eigen(const oracle::Vec& v) {
    Eigen::VectorXd y(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) y(static_cast<Eigen::Index>(i)) = v[i];
    return y;
}

}  // namespace

TEST_CASE("three-point line: slope 3/2, intercept 5/6") {
    // closed form normal equations on y={1,2,4} at x={0,1,2}
    Eigen::MatrixXd x(3, 2);
    x << 1, 0, 1, 1, 1, 2;
    Eigen::VectorXd y(3);
    y << 1, 2, 4;
    auto s = ols_fit(x, y, {"intercept", "x"});
    CHECK(s.beta(0) == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
    CHECK(s.beta(1) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("intercept-only fit returns the mean") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(5, 1);
    Eigen::VectorXd y(5);
    y << 1, 2, 3, 4, 10;
    auto s = ols_fit(x, y, {"intercept"});
    CHECK(s.beta(0) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("noiseless linear data is recovered with zero residuals") {
    Xoshiro256ss rng(17);
    Eigen::MatrixXd x(50, 3);
    Eigen::VectorXd y(50);
    for (int i = 0; i < 50; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = rng.uniform01();
        x(i, 2) = rng.uniform01();
        y(i) = 2.0 + 3.0 * x(i, 1) - 0.5 * x(i, 2);
    }
    auto s = ols_fit(x, y, {"intercept", "a", "b"});
    CHECK(s.residuals.cwiseAbs().maxCoeff() < 1e-10);
    CHECK(s.beta(0) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(s.beta(1) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(s.beta(2) == doctest::Approx(-0.5).epsilon(1e-10));
}

TEST_CASE("rank deficiency names the collinear term") {
    Eigen::MatrixXd x(4, 3);
    for (int i = 0; i < 4; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = i;
        x(i, 2) = 2.0 * i;  // collinear with column 1
    }
    Eigen::VectorXd y = Eigen::VectorXd::Ones(4);
    try {
        ols_fit(x, y, {"intercept", "a", "twice_a"});
        FAIL("expected EstimationError");
    } catch (const EstimationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("collinear") != std::string::npos);
        CHECK((msg.find("twice_a") != std::string::npos || msg.find("a") != std::string::npos));
    }
}

TEST_CASE("hc3: all-zero residuals give all-zero standard errors") {
    Eigen::MatrixXd x(4, 2);
    x << 1, 0, 1, 1, 1, 2, 1, 3;
    Eigen::VectorXd y = 2.0 * x.col(1) + Eigen::VectorXd::Ones(4);
    auto s = ols_fit(x, y, {"intercept", "x"});
    auto se = hc3_se(x, s.residuals, s.hat_diag);
    CHECK(se.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("hc3: n=4 hand fixture matches the brute-force sandwich") {
    oracle::Mat x{{1, 0.5}, {1, 1.5}, {1, 2.0}, {1, 4.0}};
    oracle::Vec y{1.0, 2.2, 2.1, 5.0};
    auto expect = oracle::ols_hc3(x, y);

    auto s = ols_fit(to_eigen(x), to_eigen(y), {"intercept", "x"});
    auto se = hc3_se(to_eigen(x), s.residuals, s.hat_diag);
    for (int j = 0; j < 2; ++j) {
        CHECK(s.beta(j) == doctest::Approx(expect.beta[static_cast<std::size_t>(j)])
                               .epsilon(1e-10));
        CHECK(se(j) == doctest::Approx(expect.se_hc3[static_cast<std::size_t>(j)])
                           .epsilon(1e-10));
    }
    for (int i = 0; i < 4; ++i)
        CHECK(s.hat_diag(i) ==
              doctest::Approx(expect.hat_diag[static_cast<std::size_t>(i)]).epsilon(1e-10));
}

TEST_CASE("hc3 equals brute force on 200 seeded small designs") {
    int accepted = 0;
    std::uint64_t attempt = 0;
    while (accepted < 200) {
        Xoshiro256ss rng(derive_seed(2024, attempt++));
        const int k = 1 + static_cast<int>(rng.below(3));  // regressors besides intercept
        const int n = k + 3 + static_cast<int>(rng.below(static_cast<std::uint64_t>(8 - k)));
        oracle::Mat x(static_cast<std::size_t>(n),
                      oracle::Vec(static_cast<std::size_t>(k + 1)));
        oracle::Vec y(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            x[static_cast<std::size_t>(i)][0] = 1.0;
            for (int j = 1; j <= k; ++j)
                x[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                    rng.normal(0.0, 1.0);
            y[static_cast<std::size_t>(i)] = rng.normal(0.0, 1.0);
        }

        oracle::Fit expect;
        try {
            expect = oracle::ols_hc3(x, y);
        } catch (const std::exception&) {
            continue;  // singular draw; take another seed
        }
        bool high_leverage = false;
        for (double h : expect.hat_diag)
            if (h > 0.999) high_leverage = true;
        if (high_leverage) continue;

        auto s = ols_fit(to_eigen(x), to_eigen(y), {});
        auto se = hc3_se(to_eigen(x), s.residuals, s.hat_diag);
        for (int j = 0; j <= k; ++j) {
            REQUIRE(s.beta(j) ==
                    doctest::Approx(expect.beta[static_cast<std::size_t>(j)]).epsilon(1e-10));
            REQUIRE(se(j) == doctest::Approx(expect.se_hc3[static_cast<std::size_t>(j)])
                                 .epsilon(1e-10));
        }
        ++accepted;
    }
    CHECK(accepted == 200);
}

TEST_CASE("hc3 close to classical on a large homoskedastic sample") {
    Xoshiro256ss rng(31);
    const int n = 10'000;
    oracle::Mat x(static_cast<std::size_t>(n), oracle::Vec(2));
    oracle::Vec dummy(static_cast<std::size_t>(n));
    Eigen::MatrixXd xe(n, 2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        const double v = rng.uniform01();
        x[static_cast<std::size_t>(i)] = {1.0, v};
        xe(i, 0) = 1.0;
        xe(i, 1) = v;
        y(i) = 1.0 + 2.0 * v + rng.normal(0.0, 1.0);
    }
    auto s = ols_fit(xe, y, {"intercept", "x"});
    auto se = hc3_se(xe, s.residuals, s.hat_diag);
    oracle::Vec res(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) res[static_cast<std::size_t>(i)] = s.residuals(i);
    auto classical = oracle::classical_se(x, res);
    for (int j = 0; j < 2; ++j) {
        const double ratio = se(j) / classical[static_cast<std::size_t>(j)];
        CHECK(ratio > 0.85);
        CHECK(ratio < 1.15);
    }
}

TEST_CASE("perfect-leverage row is an estimation error identifying the row") {
    // a dummy column with a single active row puts h_ii = 1 on that row
    Eigen::MatrixXd x(4, 2);
    x << 1, 0, 1, 0, 1, 0, 1, 1;
    Eigen::VectorXd y(4);
    y << 1, 2, 3, 4;
    auto s = ols_fit(x, y, {"intercept", "only_row_3"});
    try {
        hc3_se(x, s.residuals, s.hat_diag);
        FAIL("expected EstimationError");
    } catch (const EstimationError& e) {
        CHECK(std::string(e.what()).find("3") != std::string::npos);
    }
}

TEST_CASE("residual orthogonality and zero-sum with intercept") {
    Xoshiro256ss rng(47);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 20 + static_cast<int>(rng.below(50));
        Eigen::MatrixXd x(n, 3);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            x(i, 0) = 1.0;
            x(i, 1) = rng.normal(0.0, 2.0);
            x(i, 2) = rng.uniform01();
            y(i) = rng.normal(0.0, 1.0);
        }
        auto s = ols_fit(x, y, {});
        const Eigen::VectorXd xte = x.transpose() * s.residuals;
        const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
        CHECK(xte.cwiseAbs().maxCoeff() / scale < 1e-8);
        CHECK(std::fabs(s.residuals.sum()) / scale < 1e-8);
    }
}

TEST_CASE("scale equivariance: coefficients and SEs scale, t and adj R2 invariant") {
    Xoshiro256ss rng(53);
    const int n = 60;
    Eigen::MatrixXd x(n, 3);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = rng.normal(1.0, 1.0);
        x(i, 2) = rng.uniform01();
        y(i) = 0.5 + 0.1 * x(i, 1) + rng.normal(0.0, 0.3);
    }
    const double c = 3.0;
    auto s1 = ols_fit(x, y, {});
    auto s2 = ols_fit(x, (c * y).eval(), {});
    auto se1 = hc3_se(x, s1.residuals, s1.hat_diag);
    auto se2 = hc3_se(x, s2.residuals, s2.hat_diag);
    for (int j = 0; j < 3; ++j) {
        CHECK(s2.beta(j) == doctest::Approx(c * s1.beta(j)).epsilon(1e-10));
        CHECK(se2(j) == doctest::Approx(c * se1(j)).epsilon(1e-10));
        CHECK(s2.beta(j) / se2(j) == doctest::Approx(s1.beta(j) / se1(j)).epsilon(1e-10));
    }
    auto r1 = adj_r2(s1.residuals, y, 2);
    auto r2 = adj_r2(s2.residuals, (c * y).eval(), 2);
    CHECK(*r1 == doctest::Approx(*r2).epsilon(1e-10));
}

TEST_CASE("adjusted R^2: perfect fit 1, intercept-only 0, no variance undefined") {
    Eigen::VectorXd y(4);
    y << 1, 2, 3, 4;
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
    CHECK(*adj_r2(zero, y, 1) == doctest::Approx(1.0));

    Eigen::VectorXd centered = y.array() - y.mean();
    CHECK(*adj_r2(centered, y, 0) == doctest::Approx(0.0));

    Eigen::VectorXd flat = Eigen::VectorXd::Ones(4);
    CHECK(!adj_r2(zero, flat, 1).has_value());

    CHECK_THROWS_AS(adj_r2(zero, y, 5), EstimationError);
}

TEST_CASE("adjusted R^2 lands in the published magnitude band on noisy hour data") {
    // weak hour structure under heavy noise, like the pooled sample
    Xoshiro256ss rng(2718);
    std::vector<std::pair<int, double>> rows;
    for (int i = 0; i < 20'000; ++i) {
        const int h = rng.uniform_hour();
        const double premium = (h >= 11 && h <= 18) ? 0.05 : 0.0;
        double fee = 0.16 + premium + rng.normal(0.0, 0.2);
        if (fee < 0.001) fee = 0.001;
        rows.emplace_back(h, fee);
    }
    Panel p = panel_of(rows);
    auto fit = fit_model(p, ModelSpec{});
    REQUIRE(fit.adj_r2.has_value());
    CHECK(*fit.adj_r2 > 0.005);
    CHECK(*fit.adj_r2 < 0.05);
}

TEST_CASE("permutation JSON round trip keeps the draws and metadata") {
    std::vector<int> hours(50, 3);
    auto stat = [](std::span<const int> hs) {
        return static_cast<double>(hs.front()) / 24.0;
    };
    auto null = permutation_null(hours, stat, 64, 99, "first_hour_share");
    std::stringstream buf;
    permutation_to_json_stream(null, buf);
    auto back = permutation_from_json_stream(buf);
    CHECK(back.statistic_name == null.statistic_name);
    CHECK(back.null_draws == null.null_draws);
    CHECK(back.p95 == null.p95);
    CHECK(back.p_value == null.p_value);
    CHECK(back.seed == null.seed);
    CHECK(back.rng_algorithm == RNG_ALGORITHM);
}

TEST_CASE("build_design: one row per hour gives a full-rank 24x24 matrix") {
    std::vector<std::pair<int, double>> rows;
    for (int h = 0; h < 24; ++h) rows.emplace_back(h, 0.1 + 0.01 * h);
    Panel p = panel_of(rows);
    auto d = build_design(p, ModelSpec{});
    CHECK(d.X.rows() == 24);
    CHECK(d.X.cols() == 24);
    CHECK(d.dropped.empty());
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.X);
    CHECK(qr.rank() == 24);
}

TEST_CASE("build_design: all rows in the baseline hour leave only the intercept") {
    Panel p = panel_of({{23, 0.1}, {23, 0.2}, {23, 0.3}});
    auto d = build_design(p, ModelSpec{});
    CHECK(d.terms == std::vector<std::string>{"intercept"});
    CHECK(d.dropped.size() == 23);
}

TEST_CASE("build_design: fullness switch adds the phi_br term") {
    Panel p = panel_of({{0, 0.1}, {1, 0.2}, {2, 0.3}}, /*enriched=*/true);
    ModelSpec spec;
    spec.include_fullness = true;
    auto d = build_design(p, spec);
    CHECK(std::find(d.terms.begin(), d.terms.end(), "phi_br") != d.terms.end());

    spec.regressor = CongestionRegressor::SPECULATIVE_SHARE;
    auto d2 = build_design(p, spec);
    CHECK(std::find(d2.terms.begin(), d2.terms.end(), "phi_s") != d2.terms.end());

    Panel raw = panel_of({{0, 0.1}}, /*enriched=*/false);
    CHECK_THROWS_AS(build_design(raw, spec), EstimationError);
}

TEST_CASE("welch: identical samples give t = 0") {
    std::vector<double> a{1, 2, 3};
    auto r = welch_t(a, a);
    CHECK(r.t == doctest::Approx(0.0));
    CHECK(r.n_a == 3);
}

TEST_CASE("welch hand fixture: {1,2,3} vs {4,5,6} gives t = -3.674") {
    // means 2 and 5, both variances 1: t = -3 / sqrt(2/3) = -3 sqrt(3/2)
    std::vector<double> a{1, 2, 3}, b{4, 5, 6};
    auto r = welch_t(a, b);
    CHECK(r.t == doctest::Approx(-3.0 * std::sqrt(1.5)).epsilon(1e-9));
    CHECK(r.t == doctest::Approx(-3.674).epsilon(2e-4));
    CHECK(r.df == doctest::Approx(4.0).epsilon(1e-9));
    CHECK((r.t < 0) == (r.mean_a < r.mean_b));
}

TEST_CASE("welch sign follows the mean ordering (weekday premium direction)") {
    // weekday mean 0.020 vs weekend 0.010: positive t, as in the firm tables
    std::vector<double> weekday{0.018, 0.020, 0.022, 0.020};
    std::vector<double> weekend{0.009, 0.010, 0.011, 0.010};
    auto r = welch_t(weekday, weekend);
    CHECK(r.t > 0);
}

TEST_CASE("welch degenerate cases") {
    std::vector<double> one{1.0};
    std::vector<double> two{1.0, 2.0};
    CHECK_THROWS_AS(welch_t(one, two), EstimationError);
    std::vector<double> ca{2.0, 2.0}, cb{3.0, 3.0};
    CHECK_THROWS_AS(welch_t(ca, cb), EstimationError);
    auto r = welch_t(ca, ca);  // identical constants: zero difference
    CHECK(r.t == 0.0);
}

TEST_CASE("permutation: off-peak share under the uniform null centers on 16/24") {
    std::vector<int> hours(500, 12);  // observed values are irrelevant to the null
    auto stat = [](std::span<const int> hs) {
        i64 off = 0;
        for (int h : hs)
            if (h < 11 || h > 18) ++off;
        return static_cast<double>(off) / static_cast<double>(hs.size());
    };
    auto null = permutation_null(hours, stat, 2000, 77, "off_share");
    double mean = 0;
    for (double d : null.null_draws) mean += d;
    mean /= static_cast<double>(null.null_draws.size());
    const double p = 16.0 / 24.0;
    const double se = std::sqrt(p * (1 - p) / 500.0) / std::sqrt(2000.0);
    CHECK(std::fabs(mean - p) < 3.0 * se * std::sqrt(2000.0));  // 3 binomial SEs of one draw
    CHECK(null.rng_algorithm == RNG_ALGORITHM);
}

TEST_CASE("permutation: single replication, reproducibility, strong-signal p-value") {
    std::vector<int> hours(1000, 3);  // everything off-peak: PSS = +1/3
    auto stat = [](std::span<const int> hs) {
        i64 off = 0;
        for (int h : hs)
            if (h < 11 || h > 18) ++off;
        return static_cast<double>(off) / static_cast<double>(hs.size()) - 16.0 / 24.0;
    };
    auto single = permutation_null(hours, stat, 1, 5, "pss");
    CHECK(single.null_draws.size() == 1);

    auto a = permutation_null(hours, stat, 500, 5, "pss");
    auto b = permutation_null(hours, stat, 500, 5, "pss");
    CHECK(a.null_draws == b.null_draws);
    CHECK(a.p95 == b.p95);

    // observed PSS ~ +0.33 on 1000 records: binomial tail is astronomically small
    auto strong = permutation_null(hours, stat, 2000, 5, "pss");
    CHECK(strong.observed == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(strong.p_value < 0.001);
}

TEST_CASE("fit_model end to end on a designed panel recovers hour premia") {
    // 4 records per hour; fee = 0.10 + 0.05 for hours 11..18, no noise
    std::vector<std::pair<int, double>> rows;
    for (int h = 0; h < 24; ++h)
        for (int k = 0; k < 4; ++k)
            rows.emplace_back(h, 0.10 + ((h >= 11 && h <= 18) ? 0.05 : 0.0));
    Panel p = panel_of(rows);
    auto fit = fit_model(p, ModelSpec{});
    CHECK(fit.n == 96);
    CHECK(fit.coef.at("intercept") == doctest::Approx(0.10).epsilon(1e-8));
    CHECK(fit.coef.at("h12") == doctest::Approx(0.05).epsilon(1e-8));
    CHECK(fit.coef.at("h3") == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(*fit.adj_r2 == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("fit JSON round trip") {
    // two records per hour so no dummy row carries perfect leverage
    std::vector<std::pair<int, double>> rows;
    for (int h = 0; h < 24; ++h) {
        rows.emplace_back(h, 0.1 + 0.002 * h);
        rows.emplace_back(h, 0.12 + 0.002 * h);
    }
    Panel p = panel_of(rows);
    auto fit = fit_model(p, ModelSpec{});

    std::stringstream buf;
    fit_to_json_stream(fit, buf);
    auto back = fit_from_json_stream(buf);
    CHECK(back.n == fit.n);
    CHECK(back.coef.at("h5") == doctest::Approx(fit.coef.at("h5")).epsilon(1e-15));
    CHECK(back.spec.baseline_hour == 23);
}
