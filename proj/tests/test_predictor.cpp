#include "catch_amalgamated.hpp"

#include "flipbench/error.hpp"
#include "flipbench/generators.hpp"
#include "flipbench/predictor.hpp"

#include <Eigen/Dense>

#include <cmath>

using namespace flipbench;

namespace {

struct Problem {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
};

// Well-conditioned Gaussian design with a known linear signal.
Problem gaussian_problem(Eigen::Index m, Eigen::Index p, std::uint64_t seed)
{
    Xorshift64Star rng(seed);
    const auto normal = [&] {
        const double u1 = 1.0 - rng.uniform(), u2 = rng.uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    };
    Problem pr{Eigen::MatrixXd(m, p), Eigen::VectorXd(m)};
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < p; ++j) pr.X(i, j) = 3.0 * normal() + static_cast<double>(j);
    for (Eigen::Index i = 0; i < m; ++i) {
        double v = 0.7;
        for (Eigen::Index j = 0; j < p; ++j) v += (j % 2 ? -0.3 : 0.5) * pr.X(i, j);
        pr.y(i) = v + 0.5 * normal();
    }
    return pr;
}

CVConfig tight()
{
    CVConfig c;
    c.tolerance = 1e-13;
    c.max_sweeps = 100000;
    return c;
}

double objective(const LassoModel& m, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda)
{
    // Original-unit objective: standardized weights carry the penalty.
    double rss = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        double v = m.intercept;
        for (Eigen::Index j = 0; j < X.cols(); ++j) v += m.weights[static_cast<std::size_t>(j)] * X(i, j);
        rss += (y(i) - v) * (y(i) - v);
    }
    double l1 = 0.0;
    for (double w : m.standardized_weights) l1 += std::abs(w);
    return rss / (2.0 * static_cast<double>(X.rows())) + lambda * l1;
}

std::vector<Window> generated_windows(GeneratorSpec spec, std::size_t k = 8)
{
    return windows(generate(spec), k);
}

} // namespace

TEST_CASE("soft threshold", "[lasso]")
{
    CHECK(soft_threshold(3.0, 1.0) == 2.0);
    CHECK(soft_threshold(-3.0, 1.0) == -2.0);
    CHECK(soft_threshold(0.5, 1.0) == 0.0);
    CHECK(soft_threshold(-1.0, 1.0) == 0.0);
}

TEST_CASE("lambda zero matches the normal equations", "[lasso][oracle]")
{
    const auto pr = gaussian_problem(300, 6, 17);
    Eigen::MatrixXd A(pr.X.rows(), pr.X.cols() + 1);
    A.col(0).setOnes();
    A.rightCols(pr.X.cols()) = pr.X;
    const Eigen::VectorXd beta = (A.transpose() * A).ldlt().solve(A.transpose() * pr.y);

    const auto model = fit_lasso(pr.X, pr.y, 0.0, tight());
    CHECK(model.converged);
    CHECK(model.intercept == Catch::Approx(beta(0)).margin(1e-6));
    for (Eigen::Index j = 0; j < pr.X.cols(); ++j)
        CHECK(model.weights[static_cast<std::size_t>(j)] == Catch::Approx(beta(j + 1)).margin(1e-6));
}

TEST_CASE("single standardized feature has a closed form", "[lasso][oracle]")
{
    const auto pr = gaussian_problem(200, 1, 3);
    const double m = static_cast<double>(pr.X.rows());
    const double xm = pr.X.col(0).mean(), ym = pr.y.mean();
    const double sd = std::sqrt((pr.X.col(0).array() - xm).square().sum() / m);
    const double c = ((pr.X.col(0).array() - xm) / sd * (pr.y.array() - ym)).sum() / m;
    for (double lambda : {0.0, 0.1, 0.5, std::abs(c) * 0.9}) {
        const auto model = fit_lasso(pr.X, pr.y, lambda, tight());
        CHECK(model.standardized_weights[0] == Catch::Approx(soft_threshold(c, lambda)).margin(1e-10));
    }
}

TEST_CASE("lambda at or above lambda_max zeroes every weight", "[lasso]")
{
    const auto pr = gaussian_problem(150, 5, 5);
    const double lmax = lambda_max(pr.X, pr.y);
    for (double lambda : {lmax, 2.0 * lmax}) {
        const auto model = fit_lasso(pr.X, pr.y, lambda, tight());
        for (double w : model.weights) CHECK(w == 0.0);
        CHECK(model.intercept == Catch::Approx(pr.y.mean()).epsilon(1e-14));
    }
    // Just below lambda_max something enters.
    const auto model = fit_lasso(pr.X, pr.y, 0.99 * lmax, tight());
    CHECK(std::any_of(model.weights.begin(), model.weights.end(), [](double w) { return w != 0.0; }));
}

TEST_CASE("objective never increases across sweeps", "[lasso][property]")
{
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const auto pr = gaussian_problem(120, 8, seed);
        const double lmax = lambda_max(pr.X, pr.y);
        for (double frac : {0.0, 0.01, 0.1, 0.5}) {
            const auto model = fit_lasso(pr.X, pr.y, frac * lmax, tight());
            CHECK(model.objective_monotone);
            for (std::size_t i = 1; i < model.objective_history.size(); ++i)
                CHECK(model.objective_history[i] <= model.objective_history[i - 1] + 1e-12);
            CHECK(model.objective == Catch::Approx(objective(model, pr.X, pr.y, frac * lmax)).margin(1e-9));
        }
    }
}

TEST_CASE("warm-started path matches cold fits", "[lasso]")
{
    const auto pr = gaussian_problem(200, 6, 9);
    const auto grid = default_lambda_grid(lambda_max(pr.X, pr.y), 10, 1e-3);
    const auto path = fit_lasso_path(pr.X, pr.y, grid, tight());
    REQUIRE(path.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto cold = fit_lasso(pr.X, pr.y, grid[i], tight());
        for (std::size_t j = 0; j < cold.weights.size(); ++j)
            CHECK(path[i].weights[j] == Catch::Approx(cold.weights[j]).margin(1e-7));
    }
}

TEST_CASE("constant features are ignored", "[lasso]")
{
    auto pr = gaussian_problem(100, 3, 2);
    pr.X.col(1).setConstant(4.0);
    const auto model = fit_lasso(pr.X, pr.y, 0.0, tight());
    CHECK(model.weights[1] == 0.0);
    CHECK(std::isfinite(model.intercept));
}

TEST_CASE("lasso input validation", "[lasso]")
{
    const CVConfig c;
    CHECK_THROWS_AS(fit_lasso(Eigen::MatrixXd(0, 3), Eigen::VectorXd(0), 0.1, c), InvalidArgument);
    CHECK_THROWS_AS(fit_lasso(Eigen::MatrixXd::Ones(1, 3), Eigen::VectorXd::Ones(1), 0.1, c), InvalidArgument);
    CHECK_THROWS_AS(fit_lasso(Eigen::MatrixXd::Ones(4, 3), Eigen::VectorXd::Ones(3), 0.1, c), InvalidArgument);
    Eigen::MatrixXd bad = Eigen::MatrixXd::Ones(4, 2);
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(fit_lasso(bad, Eigen::VectorXd::Ones(4), 0.1, c), InvalidArgument);
    CHECK_THROWS_AS(fit_lasso(Eigen::MatrixXd::Random(4, 2), Eigen::VectorXd::Ones(4), -1.0, c), InvalidArgument);
}

TEST_CASE("default lambda grid", "[lasso]")
{
    const auto g = default_lambda_grid(2.0, 50, 1e-3);
    REQUIRE(g.size() == 50);
    CHECK(g.front() == 2.0);
    CHECK(g.back() == Catch::Approx(2e-3));
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] < g[i - 1]);
    CHECK(default_lambda_grid(0.0, 50, 1e-3) == std::vector<double>{0.0});
}

TEST_CASE("feature extraction", "[predictor]")
{
    const auto fv = extract_features(from_compact("HTHHTTT"));
    const std::vector<double> expected{1, 0, 1, 1, 0, 0, 0, 3, 3, 2, 1, 1, 0, 0, 0, 0, 3};
    CHECK(fv.values == expected);
    CHECK(FeatureVector::names(7).size() == 17);
    CHECK(FeatureVector::names(7).back() == "terminal_run");
    CHECK_THROWS_AS(extract_features(from_compact("HTH")), InvalidArgument);
}

TEST_CASE("feature invariants on random prefixes", "[predictor][property]")
{
    GeneratorSpec spec;
    spec.length = 7;
    spec.count = 500;
    spec.seed = 44;
    for (const auto& s : generate(spec)) {
        const auto v = extract_features(s.flips).values;
        double runs = 0.0, covered = 0.0;
        for (std::size_t L = 1; L <= 7; ++L) {
            runs += v[8 + L];
            covered += static_cast<double>(L) * v[8 + L];
        }
        CHECK(v[8] == runs - 1.0); // alternations
        CHECK(covered == 7.0);
        for (double x : v) CHECK(std::isfinite(x));
    }
}

TEST_CASE("design rows predict the final flip of each window", "[predictor]")
{
    std::vector<Window> ws{{from_compact("HTHTHTHT"), 0, 3}, {from_compact("HHHHHHHH"), 0, 5}};
    const auto d = build_design(ws);
    CHECK(d.X.rows() == 2);
    CHECK(d.X.cols() == 17);
    CHECK(d.y(0) == 0.0);
    CHECK(d.y(1) == 1.0);
    CHECK(d.groups == std::vector<std::size_t>{3, 5});
}

TEST_CASE("cross-validation on fair data sits at the 0.25 bound", "[predictor]")
{
    GeneratorSpec spec;
    spec.length = 8;
    spec.count = 4000;
    spec.seed = 2;
    const auto ws = generated_windows(spec);
    const CVConfig cfg;
    const auto r = cross_validated_mse(ws, cfg);
    CHECK(r.fold_mses.size() == 5);
    CHECK(r.grid.size() == 50);
    CHECK(r.mean_mse == Catch::Approx(0.25).margin(0.01));
    CHECK(r.model.objective_monotone);

    // Pure function of inputs and seed.
    const auto again = cross_validated_mse(ws, cfg);
    CHECK(again.mean_mse == r.mean_mse);
    CHECK(again.best_lambda == r.best_lambda);
}

TEST_CASE("cross-validation detects a predictable source", "[predictor]")
{
    GeneratorSpec spec;
    spec.kind = GeneratorKind::MarkovAlternation;
    spec.p_alternate = 0.9;
    spec.length = 20;
    spec.count = 300;
    spec.seed = 8;
    const auto r = cross_validated_mse(generated_windows(spec), CVConfig{});
    CHECK(r.mean_mse == Catch::Approx(0.09).margin(0.02));
}

TEST_CASE("folds keep parent sequences together", "[predictor]")
{
    // Each parent yields only one distinct window shape, so a leaked parent
    // would let held-out error collapse to zero; grouped folds cannot.
    std::vector<Window> ws;
    Xorshift64Star rng(1);
    for (std::size_t parent = 0; parent < 20; ++parent) {
        std::vector<Flip> f(8);
        for (auto& x : f) x = rng.bernoulli(0.5) ? Flip::Heads : Flip::Tails;
        for (int copy = 0; copy < 10; ++copy) ws.push_back({f, 0, parent});
    }
    CVConfig cfg;
    cfg.folds = 4;
    const auto r = cross_validated_mse(ws, cfg);
    CHECK(r.groups == 20);
    CHECK(r.mean_mse > 0.05);
}

TEST_CASE("cross-validation data requirements", "[predictor]")
{
    std::vector<Window> few(9, Window{from_compact("HTHTHTHT"), 0, 0});
    CHECK_THROWS_AS(cross_validated_mse(few, CVConfig{}), InsufficientData);
    std::vector<Window> one_parent(50, Window{from_compact("HTHTHTHT"), 0, 0});
    CHECK_THROWS_AS(cross_validated_mse(one_parent, CVConfig{}), InsufficientData);
    CVConfig bad;
    bad.folds = 1;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = {};
    bad.lambda_grid = {0.1, 0.2};
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("gap ratio", "[predictor]")
{
    CHECK(gap_ratio(0.22, 0.24, 0.25) == 2.0);
    CHECK(gap_ratio(0.24, 0.24, 0.25) == 0.0);
    CHECK(gap_ratio(0.25, 0.24, 0.25) == -1.0);
    CHECK_THROWS_AS(gap_ratio(0.2, 0.25, 0.25), InvalidArgument);
}
