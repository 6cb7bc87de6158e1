#include "flipbench/predictor.hpp"

#include "flipbench/error.hpp"
#include "flipbench/generators.hpp"
#include "flipbench/stats.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

namespace flipbench {

std::vector<std::string> FeatureVector::names(std::size_t m)
{
    std::vector<std::string> out;
    for (std::size_t i = 1; i <= m; ++i) out.push_back("f" + std::to_string(i));
    out.emplace_back("heads_count");
    out.emplace_back("alternations");
    for (std::size_t L = 1; L <= m; ++L) out.push_back("runs_len" + std::to_string(L));
    out.emplace_back("terminal_run");
    return out;
}

FeatureVector extract_features(std::span<const Flip> prefix, std::size_t expected_length)
{
    if (prefix.size() != expected_length)
        throw InvalidArgument("feature prefix must have " + std::to_string(expected_length) + " flips, got " +
                              std::to_string(prefix.size()));
    const std::size_t m = prefix.size();
    FeatureVector fv;
    fv.values.reserve(FeatureVector::size_for(m));

    double heads = 0.0;
    for (Flip f : prefix) {
        const double v = f == Flip::Heads ? 1.0 : 0.0;
        fv.values.push_back(v);
        heads += v;
    }
    fv.values.push_back(heads);

    double alternations = 0.0;
    for (std::size_t i = 1; i < m; ++i)
        if (prefix[i] != prefix[i - 1]) alternations += 1.0;
    fv.values.push_back(alternations);

    const auto runs = count_maximal_runs(prefix);
    for (std::size_t L = 1; L <= m; ++L) {
        auto it = runs.find(static_cast<int>(L));
        fv.values.push_back(it == runs.end() ? 0.0 : static_cast<double>(it->second));
    }

    std::size_t terminal = m == 0 ? 0 : 1;
    while (terminal < m && prefix[m - 1 - terminal] == prefix[m - 1]) ++terminal;
    fv.values.push_back(static_cast<double>(terminal));
    return fv;
}

void CVConfig::validate() const
{
    if (folds < 2) throw InvalidArgument("cross-validation requires at least 2 folds");
    if (!(tolerance > 0.0)) throw InvalidArgument("tolerance must be positive");
    if (max_sweeps < 1) throw InvalidArgument("max_sweeps must be >= 1");
    if (lambda_grid.empty()) {
        if (grid_size < 1) throw InvalidArgument("grid_size must be >= 1");
        if (!(grid_ratio > 0.0 && grid_ratio <= 1.0)) throw InvalidArgument("grid_ratio must lie in (0, 1]");
    } else {
        for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
            if (!(lambda_grid[i] > 0.0)) throw InvalidArgument("lambda grid values must be positive");
            if (i && !(lambda_grid[i] < lambda_grid[i - 1]))
                throw InvalidArgument("lambda grid must be strictly descending");
        }
    }
}

double LassoModel::predict(std::span<const double> x) const
{
    double v = intercept;
    for (std::size_t j = 0; j < weights.size(); ++j) v += weights[j] * x[j];
    return std::clamp(v, 0.0, 1.0);
}

double LassoModel::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const
{
    double v = intercept;
    for (std::size_t j = 0; j < weights.size(); ++j) v += weights[j] * x(static_cast<Eigen::Index>(j));
    return std::clamp(v, 0.0, 1.0);
}

namespace {

void check_inputs(const Eigen::MatrixXd& X, const Eigen::VectorXd& y)
{
    if (X.rows() == 0) throw InvalidArgument("fit_lasso: zero rows");
    if (X.rows() < 2) throw InvalidArgument("fit_lasso: at least 2 rows required");
    if (X.rows() != y.size()) throw InvalidArgument("fit_lasso: X and y row counts differ");
    if (!X.allFinite() || !y.allFinite()) throw InvalidArgument("fit_lasso: non-finite input");
}

// Standardized problem in covariance form: with Z the standardized design and
// r = y - mean(y), coordinate descent only needs G = Z'Z/m, c = Z'r/m and
// r'r/m, so each sweep costs O(p^2) regardless of the row count.
struct Standardized {
    Eigen::MatrixXd gram;
    Eigen::VectorXd corr;
    double yy = 0.0;
    std::vector<double> means;
    std::vector<double> scales;
    std::vector<bool> constant;
    double y_mean = 0.0;
};

Standardized standardize(const Eigen::MatrixXd& X, const Eigen::VectorXd& y)
{
    Standardized s;
    const auto m = static_cast<double>(X.rows());
    const auto p = static_cast<std::size_t>(X.cols());
    Eigen::MatrixXd Z = X;
    s.means.resize(p);
    s.scales.resize(p);
    s.constant.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
        auto col = Z.col(static_cast<Eigen::Index>(j));
        const double mean = col.sum() / m;
        col.array() -= mean;
        const double var = col.squaredNorm() / m;
        const double scale = var > 0.0 ? std::sqrt(var) : 1.0;
        col /= scale;
        s.means[j] = mean;
        s.scales[j] = scale;
        s.constant[j] = !(var > 0.0);
        if (s.constant[j]) col.setZero();
    }
    s.y_mean = y.sum() / m;
    const Eigen::VectorXd centered = y.array() - s.y_mean;
    s.gram = (Z.transpose() * Z) / m;
    s.corr = (Z.transpose() * centered) / m;
    s.yy = centered.squaredNorm() / m;
    return s;
}

// (1/2m)||r - Z b||^2 + lambda ||b||_1, expanded through the Gram matrix.
double objective(const Standardized& s, const Eigen::VectorXd& beta, double lambda)
{
    const double rss = s.yy - 2.0 * beta.dot(s.corr) + beta.dot(s.gram * beta);
    return 0.5 * std::max(rss, 0.0) + lambda * beta.lpNorm<1>();
}

// Coordinate descent from a given standardized starting point.
LassoModel descend(const Standardized& s, double lambda, const CVConfig& config, const std::vector<double>& start)
{
    const auto p = static_cast<Eigen::Index>(s.gram.rows());
    Eigen::VectorXd beta = Eigen::Map<const Eigen::VectorXd>(start.data(), p);

    // grad(j) = z_j'(r - Z beta)/m
    Eigen::VectorXd grad = s.corr - s.gram * beta;

    LassoModel model;
    model.lambda = lambda;
    double previous = objective(s, beta, lambda);

    for (int sweep = 1; sweep <= config.max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (s.constant[static_cast<std::size_t>(j)]) continue;
            // Standardized columns have unit diagonal in the Gram matrix.
            const double z = grad(j) + beta(j);
            const double updated = soft_threshold(z, lambda);
            const double delta = updated - beta(j);
            if (delta != 0.0) {
                grad -= delta * s.gram.col(j);
                beta(j) = updated;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        const double current = objective(s, beta, lambda);
        model.objective_history.push_back(current);
        if (current > previous + 1e-12 * (1.0 + std::abs(previous))) model.objective_monotone = false;
        assert(model.objective_monotone && "coordinate descent objective increased");
        previous = current;
        model.sweeps = sweep;
        if (max_change < config.tolerance) {
            model.converged = true;
            break;
        }
    }

    const auto pu = static_cast<std::size_t>(p);
    model.objective = previous;
    model.standardized_weights.assign(beta.data(), beta.data() + p);
    model.feature_means = s.means;
    model.feature_scales = s.scales;
    model.weights.resize(pu);
    double intercept = s.y_mean;
    for (std::size_t j = 0; j < pu; ++j) {
        model.weights[j] = model.standardized_weights[j] / s.scales[j];
        intercept -= model.weights[j] * s.means[j];
    }
    model.intercept = intercept;
    return model;
}

double lambda_max_standardized(const Standardized& s)
{
    return s.corr.size() ? s.corr.cwiseAbs().maxCoeff() : 0.0;
}

} // namespace

double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y)
{
    check_inputs(X, y);
    return lambda_max_standardized(standardize(X, y));
}

LassoModel fit_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda, const CVConfig& config)
{
    check_inputs(X, y);
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("fit_lasso: lambda must be >= 0");
    const Standardized s = standardize(X, y);
    return descend(s, lambda, config, std::vector<double>(static_cast<std::size_t>(X.cols()), 0.0));
}

std::vector<LassoModel> fit_lasso_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                       std::span<const double> grid, const CVConfig& config)
{
    check_inputs(X, y);
    const Standardized s = standardize(X, y);
    std::vector<LassoModel> path;
    path.reserve(grid.size());
    std::vector<double> beta(static_cast<std::size_t>(X.cols()), 0.0);
    for (double lambda : grid) {
        path.push_back(descend(s, lambda, config, beta));
        beta = path.back().standardized_weights;
    }
    return path;
}

std::vector<double> default_lambda_grid(double lmax, int size, double ratio)
{
    if (!(lmax > 0.0)) return {0.0};
    if (size == 1) return {lmax};
    std::vector<double> grid(static_cast<std::size_t>(size));
    const double log_hi = std::log(lmax);
    const double log_lo = std::log(lmax * ratio);
    for (int i = 0; i < size; ++i)
        grid[static_cast<std::size_t>(i)] =
            std::exp(log_hi + (log_lo - log_hi) * static_cast<double>(i) / static_cast<double>(size - 1));
    grid.front() = lmax;
    return grid;
}

double mean_squared_error(const LassoModel& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y)
{
    double sum = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double d = y(i) - model.predict(X.row(i));
        sum += d * d;
    }
    return sum / static_cast<double>(X.rows());
}

DesignMatrix build_design(std::span<const Window> windows)
{
    if (windows.empty()) throw InsufficientData("no windows for the predictor");
    const std::size_t k = windows.front().size();
    if (k < 2) throw InvalidArgument("predictor windows must have length >= 2");
    const std::size_t m = k - 1;
    DesignMatrix d;
    d.feature_names = FeatureVector::names(m);
    d.X.resize(static_cast<Eigen::Index>(windows.size()), static_cast<Eigen::Index>(FeatureVector::size_for(m)));
    d.y.resize(static_cast<Eigen::Index>(windows.size()));
    d.groups.resize(windows.size());
    for (std::size_t r = 0; r < windows.size(); ++r) {
        const auto& w = windows[r];
        if (w.size() != k) throw MixedLengthError("predictor windows of mixed length");
        const auto fv = extract_features(std::span<const Flip>(w.flips).first(m), m);
        for (std::size_t c = 0; c < fv.values.size(); ++c)
            d.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = fv.values[c];
        d.y(static_cast<Eigen::Index>(r)) = w.flips.back() == Flip::Heads ? 1.0 : 0.0;
        d.groups[r] = w.parent;
    }
    return d;
}

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, const std::vector<Eigen::Index>& rows)
{
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
    return out;
}

Eigen::VectorXd take_rows(const Eigen::VectorXd& y, const std::vector<Eigen::Index>& rows)
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(rows[i]);
    return out;
}

} // namespace

CVResult cross_validated_mse(std::span<const Window> windows, const CVConfig& config)
{
    config.validate();
    const auto folds = static_cast<std::size_t>(config.folds);
    if (windows.size() < 2 * folds)
        throw InsufficientData("cross-validation needs at least " + std::to_string(2 * folds) + " windows, got " +
                               std::to_string(windows.size()));

    const DesignMatrix d = build_design(windows);

    // Seeded Fisher-Yates over the distinct parents, then round-robin.
    std::vector<std::size_t> parents(d.groups);
    std::sort(parents.begin(), parents.end());
    parents.erase(std::unique(parents.begin(), parents.end()), parents.end());
    if (parents.size() < folds)
        throw InsufficientData("cross-validation needs at least " + std::to_string(folds) +
                               " parent sequences, got " + std::to_string(parents.size()));
    Xorshift64Star rng(config.seed);
    for (std::size_t i = parents.size() - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng() % (i + 1));
        std::swap(parents[i], parents[j]);
    }
    std::map<std::size_t, std::size_t> fold_of;
    for (std::size_t i = 0; i < parents.size(); ++i) fold_of[parents[i]] = i % folds;

    std::vector<std::vector<Eigen::Index>> train(folds);
    std::vector<std::vector<Eigen::Index>> test(folds);
    for (std::size_t r = 0; r < d.groups.size(); ++r) {
        const std::size_t f = fold_of.at(d.groups[r]);
        for (std::size_t g = 0; g < folds; ++g) (g == f ? test : train)[g].push_back(static_cast<Eigen::Index>(r));
    }

    std::vector<double> grid = config.lambda_grid;
    if (grid.empty()) grid = default_lambda_grid(lambda_max(d.X, d.y), config.grid_size, config.grid_ratio);

    // fold_mse[f][l]
    std::vector<std::vector<double>> fold_mse(folds, std::vector<double>(grid.size(), 0.0));
    const auto nfolds = static_cast<std::int64_t>(folds);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t fi = 0; fi < nfolds; ++fi) {
        const auto f = static_cast<std::size_t>(fi);
        const Eigen::MatrixXd Xtr = take_rows(d.X, train[f]);
        const Eigen::VectorXd ytr = take_rows(d.y, train[f]);
        const Eigen::MatrixXd Xte = take_rows(d.X, test[f]);
        const Eigen::VectorXd yte = take_rows(d.y, test[f]);
        const auto path = fit_lasso_path(Xtr, ytr, grid, config);
        for (std::size_t l = 0; l < grid.size(); ++l) fold_mse[f][l] = mean_squared_error(path[l], Xte, yte);
    }

    CVResult result;
    result.grid = grid;
    result.windows = windows.size();
    result.groups = parents.size();
    result.feature_names = d.feature_names;
    result.mean_mse_by_lambda.resize(grid.size());
    std::size_t best = 0;
    for (std::size_t l = 0; l < grid.size(); ++l) {
        double sum = 0.0;
        for (std::size_t f = 0; f < folds; ++f) sum += fold_mse[f][l];
        result.mean_mse_by_lambda[l] = sum / static_cast<double>(folds);
        // Grid is descending, so a strict comparison keeps the larger lambda on ties.
        if (result.mean_mse_by_lambda[l] < result.mean_mse_by_lambda[best]) best = l;
    }
    result.best_lambda = grid[best];
    result.mean_mse = result.mean_mse_by_lambda[best];
    for (std::size_t f = 0; f < folds; ++f) result.fold_mses.push_back(fold_mse[f][best]);
    result.model = fit_lasso(d.X, d.y, result.best_lambda, config);
    return result;
}

double gap_ratio(double mse_subject, double mse_human, double mse_random)
{
    for (double v : {mse_subject, mse_human, mse_random})
        if (!(std::abs(v) <= 1e6)) throw InvalidArgument("gap_ratio: MSE values must be finite");
    // Differences are taken on 12-decimal fixed point so that decimal inputs
    // such as 0.22, 0.24, 0.25 give exact ratios.
    const auto fixed = [](double v) { return std::llround(v * 1e12); };
    const long long subject = fixed(mse_subject), human = fixed(mse_human), random = fixed(mse_random);
    if (!(random > human)) throw InvalidArgument("gap_ratio: random-source MSE must exceed the human MSE");
    return static_cast<double>(human - subject) / static_cast<double>(random - human);
}

nlohmann::ordered_json to_json(const LassoModel& model, const std::vector<std::string>& names)
{
    nlohmann::ordered_json j;
    j["lambda"] = model.lambda;
    j["intercept"] = model.intercept;
    nlohmann::ordered_json w = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < model.weights.size(); ++i)
        w[i < names.size() ? names[i] : "x" + std::to_string(i)] = model.weights[i];
    j["weights"] = w;
    j["sweeps"] = model.sweeps;
    j["converged"] = model.converged;
    j["objective"] = model.objective;
    j["objective_monotone"] = model.objective_monotone;
    return j;
}

nlohmann::ordered_json to_json(const CVResult& r)
{
    nlohmann::ordered_json j;
    j["feature_set_version"] = kFeatureSetVersion;
    j["windows"] = r.windows;
    j["groups"] = r.groups;
    j["folds"] = r.fold_mses.size();
    j["lambda"] = r.best_lambda;
    j["mse"] = r.mean_mse;
    j["fold_mses"] = r.fold_mses;
    j["model"] = to_json(r.model, r.feature_names);
    return j;
}

} // namespace flipbench
