#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <span>
#include <vector>

namespace skillgp {

/// Upper bound on the state dimension of a state-space model. Small matrices
/// use Eigen's fixed-capacity storage so the filter never touches the heap.
inline constexpr int kMaxStateOrder = 16;

using StateVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxStateOrder, 1>;
using StateMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxStateOrder, kMaxStateOrder>;

enum class KernelType {
    Constant,
    PiecewiseConstant,
    Wiener,
    Matern12,
    Matern32,
    Linear,
    Sum,
    Product,
};

/*
 * Covariance function of a score process, k(t, t'), with times in years.
 *
 *   Constant            var
 *   PiecewiseConstant   var if t, t' fall in the same half-open interval
 *                       [b_i, b_{i+1}) of the boundaries, 0 otherwise
 *   Wiener              var * min(t, t'), pinned at 0 for times before 0
 *   Matern12            var * exp(-|t - t'| / lscale)
 *   Matern32            var * (1 + sqrt(3)|t - t'| / lscale) exp(-sqrt(3)|t - t'| / lscale)
 *   Linear              var * t * t'
 *   Sum / Product       sum / product of the children
 *
 * Non-stationary kernels measure time from 0; callers shift timestamps so
 * that 0 is the epoch. Kernels are immutable values.
 */
class Kernel {
public:
    static Kernel constant(double var);
    static Kernel piecewise_constant(double var, std::vector<double> boundaries);
    static Kernel wiener(double var);
    static Kernel matern12(double var, double lscale);
    static Kernel matern32(double var, double lscale);
    static Kernel linear(double var);
    static Kernel sum(std::vector<Kernel> children);
    /// Representable and evaluable, but has no state-space form here.
    static Kernel product(std::vector<Kernel> children);

    KernelType type() const { return type_; }
    double var() const { return var_; }
    double lscale() const { return lscale_; }
    const std::vector<double>& boundaries() const { return boundaries_; }
    const std::vector<Kernel>& children() const { return children_; }

    bool is_composite() const { return type_ == KernelType::Sum || type_ == KernelType::Product; }
    /// Sum of leaf variances (Product: product of child totals).
    double total_variance() const;

    friend bool operator==(const Kernel&, const Kernel&) = default;

private:
    Kernel() = default;

    KernelType type_ = KernelType::Constant;
    double var_ = 0.0;
    double lscale_ = 0.0;
    std::vector<double> boundaries_;
    std::vector<Kernel> children_;
};

double evaluate(const Kernel& kernel, double t, double u);

/// Dense covariance matrix [k(t_i, t_j)].
Eigen::MatrixXd gram(const Kernel& kernel, std::span<const double> times);

/*
 * Linear-Gaussian Markov representation of a kernel:
 *
 *   x(t') = A(t, t') x(t) + e,   e ~ N(0, Q(t, t')),   s(t) = h' x(t)
 *
 * with x(t_first) ~ N(0, initial_cov(t_first)). Sums are block-diagonal
 * concatenations of their children. Transition and noise take both end
 * points because piecewise-constant blocks reset when a boundary is crossed.
 * Times are raw model times; the epoch is subtracted internally.
 */
class StateSpaceSpec {
public:
    int order() const { return order_; }
    double epoch() const { return epoch_; }
    const StateVector& measurement() const { return measurement_; }

    StateMatrix transition(double from, double to) const;
    StateMatrix noise(double from, double to) const;
    /// Transition and noise in one pass.
    void link(double from, double to, StateMatrix& transition, StateMatrix& noise) const;

    StateVector initial_mean(double t) const;
    StateMatrix initial_cov(double t) const;
    /// Prior variance of s(t), h' initial_cov(t) h.
    double prior_variance(double t) const;

private:
    friend StateSpaceSpec to_state_space(const Kernel& kernel, double epoch);

    struct Block {
        KernelType type;
        double var;
        double lscale;
        std::vector<double> boundaries;
        int offset;
        int order;
    };

    std::vector<Block> blocks_;
    int order_ = 0;
    double epoch_ = 0.0;
    StateVector measurement_;
};

/// Throws ConfigError for product kernels or state dimensions above kMaxStateOrder.
StateSpaceSpec to_state_space(const Kernel& kernel, double epoch = 0.0);

// JSON form: {"type": ..., "var": x, "lscale": x, "boundaries": [...], "children": [...]}.
nlohmann::json kernel_to_json(const Kernel& kernel);
/// Throws ConfigError naming the offending field.
Kernel kernel_from_json(const nlohmann::json& j);

}  // namespace skillgp
