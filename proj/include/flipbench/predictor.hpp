#pragma once

#include "flipbench/sequence.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace flipbench {

/// Feature layout for a prefix of m flips (m = 7 for 8-flip windows):
///   f1..fm          raw flips, Heads = 1
///   heads_count
///   alternations
///   runs_len1..m    maximal-run counts by length
///   terminal_run    length of the run ending at the last flip
/// The order is fixed; bump kFeatureSetVersion whenever it changes.
inline constexpr int kFeatureSetVersion = 1;

struct FeatureVector {
    std::vector<double> values;

    static std::vector<std::string> names(std::size_t prefix_length);
    static std::size_t size_for(std::size_t prefix_length) { return 2 * prefix_length + 3; }
};

/// Throws InvalidArgument when prefix.size() != expected_length.
FeatureVector extract_features(std::span<const Flip> prefix, std::size_t expected_length = 7);

inline double soft_threshold(double z, double gamma)
{
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

struct CVConfig {
    int folds = 5;
    // Strictly descending. Empty: grid_size log-spaced values from
    // lambda_max down to lambda_max * grid_ratio, computed on the full data.
    std::vector<double> lambda_grid;
    int grid_size = 50;
    double grid_ratio = 1e-3;
    std::uint64_t seed = 0;
    double tolerance = 1e-7;
    int max_sweeps = 10000;

    void validate() const;
};

struct LassoModel {
    std::vector<double> weights; // original feature units
    double intercept = 0.0;
    double lambda = 0.0;
    std::vector<double> feature_means;
    std::vector<double> feature_scales; // population sd; 1 for constant features
    std::vector<double> standardized_weights;
    int sweeps = 0;
    bool converged = false;
    double objective = 0.0;
    std::vector<double> objective_history; // after each full sweep
    bool objective_monotone = true;

    /// Linear prediction clamped to [0, 1].
    double predict(std::span<const double> x) const;
    double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

/// max_j |<x_j, y - mean(y)>| / m over standardized columns: the smallest
/// penalty at which every weight is zero.
double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Minimizes (1/2m)||y - b0 - X b||^2 + lambda ||b||_1 by cyclic coordinate
/// descent on standardized columns, starting from zero. Stops when the
/// largest coordinate change in a sweep falls below config.tolerance or
/// after config.max_sweeps sweeps.
LassoModel fit_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda, const CVConfig& config);

/// One fit per grid value, each warm-started from the previous solution.
std::vector<LassoModel> fit_lasso_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                       std::span<const double> grid, const CVConfig& config);

std::vector<double> default_lambda_grid(double lambda_max, int size, double ratio);

/// Mean squared error of clamped predictions.
double mean_squared_error(const LassoModel& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

struct DesignMatrix {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<std::size_t> groups; // parent sequence of each row
    std::vector<std::string> feature_names;
};

/// Row per window: features of the first k-1 flips, target the last flip.
DesignMatrix build_design(std::span<const Window> windows);

struct CVResult {
    double best_lambda = 0.0;
    double mean_mse = 0.0;
    std::vector<double> fold_mses; // at best_lambda
    std::vector<double> grid;
    std::vector<double> mean_mse_by_lambda;
    std::size_t windows = 0;
    std::size_t groups = 0;
    LassoModel model; // refit on all windows at best_lambda
    std::vector<std::string> feature_names;
};

/// Grouped k-fold cross-validation: windows sharing a parent sequence land
/// in the same fold, folds are assigned by a seeded shuffle of the parents.
/// Ties in mean held-out MSE resolve to the larger penalty. Throws
/// InsufficientData with fewer than 2 * folds windows or fewer parents than
/// folds.
CVResult cross_validated_mse(std::span<const Window> windows, const CVConfig& config);

/// (human - subject) / (random - human), computed on the inputs rounded to
/// 12 decimal places. Throws InvalidArgument unless random > human.
double gap_ratio(double mse_subject, double mse_human, double mse_random);

nlohmann::ordered_json to_json(const LassoModel& model, const std::vector<std::string>& names);
nlohmann::ordered_json to_json(const CVResult& result);

} // namespace flipbench
