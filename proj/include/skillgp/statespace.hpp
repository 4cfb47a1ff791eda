#pragma once

#include "skillgp/kernels.hpp"

#include <Eigen/Dense>

#include <memory>
#include <span>
#include <vector>

namespace skillgp {

struct Marginal {
    double mean = 0.0;
    double var = 0.0;
};

struct SmoothResult {
    /// log N(mu~ | 0, K + Sigma~) over nodes with beta~ > 0.
    double log_evidence = 0.0;
    /// log of the integral of p(s) * prod_n exp(alpha~_n s_n - beta~_n s_n^2 / 2).
    double log_partition = 0.0;
};

/*
 * Posterior over one feature's score process, sampled at the times of the
 * observations that touch it.
 *
 * Each node carries a Gaussian pseudo-observation in natural parameters
 * (alpha~, beta~) = (mu~ / sigma~^2, 1 / sigma~^2); beta~ = 0 is the vacuous
 * factor. smooth() runs a Kalman filter over the nodes followed by an RTS
 * backward pass in O(N K^3). Duplicate times are separate nodes joined by
 * identity links.
 *
 * Appending a node keeps the chain smoothed: a vacuous node at the end adds
 * no information, so the earlier marginals do not move. Writing pseudo
 * parameters invalidates the marginals until the next smooth().
 */
class FeatureChain {
public:
    FeatureChain() = default;
    /// Throws std::invalid_argument if times are not nondecreasing.
    FeatureChain(std::shared_ptr<const StateSpaceSpec> spec, std::span<const double> times);

    const StateSpaceSpec& spec() const { return *spec_; }
    std::size_t size() const { return times_.size(); }
    bool empty() const { return times_.empty(); }
    int order() const { return order_; }

    double time(std::size_t n) const { return times_[n]; }
    const std::vector<double>& times() const { return times_; }

    /// Appends a vacuous node; t must not precede the last node.
    std::size_t push_back(double t);

    double alpha(std::size_t n) const { return alpha_[n]; }
    double beta(std::size_t n) const { return beta_[n]; }
    void set_pseudo(std::size_t n, double alpha, double beta) {
        alpha_[n] = alpha;
        beta_[n] = beta;
    }
    /// Resets every node to the vacuous factor (the marginals are stale afterwards).
    void clear_pseudo();

    /// Smoothed marginal of s(t_n) = h' x(t_n).
    Marginal marginal(std::size_t n) const { return {mean_[n], var_[n]}; }

    /// Throws NumericalError on a non-finite covariance.
    SmoothResult smooth();
    const SmoothResult& last_smooth() const { return last_; }

    /// Posterior marginal of s(t) at an arbitrary time in O(log N + K^3).
    Marginal posterior_at(double t) const;

    StateVector smoothed_state_mean(std::size_t n) const;
    StateMatrix smoothed_state_cov(std::size_t n) const;

    /// Covariance update in Joseph form instead of the short form.
    void set_joseph_form(bool on) { joseph_ = on; }

private:
    using MatMap = Eigen::Map<Eigen::MatrixXd>;
    using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
    using VecMap = Eigen::Map<Eigen::VectorXd>;
    using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

    std::size_t kk() const { return static_cast<std::size_t>(order_) * order_; }
    StateVector load_vec(const std::vector<double>& v, std::size_t n) const;
    StateMatrix load_mat(const std::vector<double>& v, std::size_t n) const;
    void store_vec(std::vector<double>& v, std::size_t n, const StateVector& x);
    void store_mat(std::vector<double>& v, std::size_t n, const StateMatrix& x);
    void set_marginal_from_state(std::size_t n);

    std::shared_ptr<const StateSpaceSpec> spec_;
    int order_ = 0;
    bool joseph_ = false;

    std::vector<double> times_;
    std::vector<double> alpha_;
    std::vector<double> beta_;
    // Link into node n (A_n, Q_n); node 0 stores the identity and the initial covariance.
    std::vector<double> trans_;
    std::vector<double> noise_;
    std::vector<double> pred_mean_;
    std::vector<double> pred_cov_;
    std::vector<double> filt_mean_;
    std::vector<double> filt_cov_;
    std::vector<double> smooth_mean_;
    std::vector<double> smooth_cov_;
    std::vector<double> mean_;
    std::vector<double> var_;
    SmoothResult last_;
};

FeatureChain build_chain(std::shared_ptr<const StateSpaceSpec> spec, std::span<const double> times);

struct BatchPosterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

/*
 * Dense O(N^3) posterior of N(0, K) times Gaussian pseudo-observations in
 * natural parameters. Evaluated as
 *
 *   Sigma = K - K B^{1/2} (I + B^{1/2} K B^{1/2})^{-1} B^{1/2} K,  mu = Sigma alpha
 *
 * with B = diag(beta), which equals (K^{-1} + B)^{-1} without inverting K.
 * Reference path for checking the chain smoother.
 */
BatchPosterior batch_posterior(const Eigen::MatrixXd& gram, std::span<const double> alpha,
                               std::span<const double> beta);

}  // namespace skillgp
