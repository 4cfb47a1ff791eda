#include "skillgp/statespace.hpp"

#include "skillgp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace skillgp {

namespace {

// cross * pred^+, where pred is a (possibly singular) predicted covariance.
StateMatrix smoother_gain(const StateMatrix& cross, const StateMatrix& pred) {
    const auto k = pred.rows();
    if (k == 1) {
        const double p = pred(0, 0);
        StateMatrix g(1, 1);
        g(0, 0) = p > 0.0 ? cross(0, 0) / p : 0.0;
        return g;
    }
    Eigen::LLT<StateMatrix> llt(pred);
    if (llt.info() == Eigen::Success) {
        const auto diag = llt.matrixL().toDenseMatrix().diagonal();
        const double lo = diag.minCoeff();
        const double hi = diag.maxCoeff();
        if (lo > 0.0 && lo * lo > 1e-12 * hi * hi) {
            return llt.solve(cross.transpose()).transpose();
        }
    }
    // Rank-deficient prediction (linear trends, pinned Wiener, zero gaps).
    Eigen::SelfAdjointEigenSolver<StateMatrix> eig(pred);
    const auto& values = eig.eigenvalues();
    const double cutoff = 1e-12 * std::max(values.cwiseAbs().maxCoeff(), 1e-300);
    StateVector inv = StateVector::Zero(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        if (values(i) > cutoff) inv(i) = 1.0 / values(i);
    }
    const StateMatrix& v = eig.eigenvectors();
    return cross * v * inv.asDiagonal() * v.transpose();
}

void symmetrize(StateMatrix& p) { p = (0.5 * (p + p.transpose())).eval(); }

}  // namespace

FeatureChain::FeatureChain(std::shared_ptr<const StateSpaceSpec> spec,
                           std::span<const double> times)
    : spec_(std::move(spec)), order_(spec_->order()) {
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] >= times[i - 1])) {
            throw std::invalid_argument("chain times must be sorted in nondecreasing order");
        }
    }
    const auto n = times.size();
    times_.reserve(n);
    alpha_.reserve(n);
    beta_.reserve(n);
    for (double t : times) push_back(t);
}

FeatureChain build_chain(std::shared_ptr<const StateSpaceSpec> spec, std::span<const double> times) {
    return FeatureChain(std::move(spec), times);
}

StateVector FeatureChain::load_vec(const std::vector<double>& v, std::size_t n) const {
    return ConstVecMap(v.data() + n * order_, order_);
}

StateMatrix FeatureChain::load_mat(const std::vector<double>& v, std::size_t n) const {
    return ConstMatMap(v.data() + n * kk(), order_, order_);
}

void FeatureChain::store_vec(std::vector<double>& v, std::size_t n, const StateVector& x) {
    VecMap(v.data() + n * order_, order_) = x;
}

void FeatureChain::store_mat(std::vector<double>& v, std::size_t n, const StateMatrix& x) {
    MatMap(v.data() + n * kk(), order_, order_) = x;
}

void FeatureChain::set_marginal_from_state(std::size_t n) {
    const StateVector& h = spec_->measurement();
    mean_[n] = h.dot(load_vec(smooth_mean_, n));
    var_[n] = std::max(h.dot(load_mat(smooth_cov_, n) * h), 0.0);
}

std::size_t FeatureChain::push_back(double t) {
    if (!std::isfinite(t)) {
        throw std::invalid_argument("chain time must be finite");
    }
    if (!times_.empty() && t < times_.back()) {
        throw std::invalid_argument("chain times must be sorted in nondecreasing order");
    }
    const std::size_t n = times_.size();
    times_.push_back(t);
    alpha_.push_back(0.0);
    beta_.push_back(0.0);
    for (auto* v : {&pred_mean_, &filt_mean_, &smooth_mean_}) v->resize((n + 1) * order_);
    for (auto* v : {&trans_, &noise_, &pred_cov_, &filt_cov_, &smooth_cov_}) v->resize((n + 1) * kk());
    mean_.push_back(0.0);
    var_.push_back(0.0);

    if (n == 0) {
        const StateMatrix p0 = spec_->initial_cov(t);
        const StateVector m0 = spec_->initial_mean(t);
        store_mat(trans_, 0, StateMatrix::Identity(order_, order_));
        store_mat(noise_, 0, p0);
        for (auto* v : {&pred_mean_, &filt_mean_, &smooth_mean_}) store_vec(*v, 0, m0);
        for (auto* v : {&pred_cov_, &filt_cov_, &smooth_cov_}) store_mat(*v, 0, p0);
    } else {
        StateMatrix a, q;
        spec_->link(times_[n - 1], t, a, q);
        store_mat(trans_, n, a);
        store_mat(noise_, n, q);
        const StateVector m = a * load_vec(filt_mean_, n - 1);
        StateMatrix p = a * load_mat(filt_cov_, n - 1) * a.transpose() + q;
        symmetrize(p);
        store_vec(pred_mean_, n, m);
        store_mat(pred_cov_, n, p);
        store_vec(filt_mean_, n, m);
        store_mat(filt_cov_, n, p);
        const StateVector ms = a * load_vec(smooth_mean_, n - 1);
        StateMatrix ps = a * load_mat(smooth_cov_, n - 1) * a.transpose() + q;
        symmetrize(ps);
        store_vec(smooth_mean_, n, ms);
        store_mat(smooth_cov_, n, ps);
    }
    set_marginal_from_state(n);
    return n;
}

void FeatureChain::clear_pseudo() {
    std::fill(alpha_.begin(), alpha_.end(), 0.0);
    std::fill(beta_.begin(), beta_.end(), 0.0);
}

SmoothResult FeatureChain::smooth() {
    SmoothResult result;
    const std::size_t n_nodes = size();
    if (n_nodes == 0) {
        last_ = result;
        return result;
    }
    const StateVector& h = spec_->measurement();

    // Forward filter.
    StateVector m;
    StateMatrix p;
    for (std::size_t n = 0; n < n_nodes; ++n) {
        if (n == 0) {
            m = spec_->initial_mean(times_[0]);
            p = load_mat(noise_, 0);
        } else {
            const StateMatrix a = load_mat(trans_, n);
            m = a * m;
            p = a * p * a.transpose() + load_mat(noise_, n);
            symmetrize(p);
        }
        store_vec(pred_mean_, n, m);
        store_mat(pred_cov_, n, p);

        const double alpha = alpha_[n];
        const double beta = beta_[n];
        if (alpha != 0.0 || beta != 0.0) {
            const StateVector k = p * h;
            const double s = std::max(h.dot(k), 0.0);
            const double mu = h.dot(m);
            const double denom = 1.0 + beta * s;
            const double term =
                -0.5 * std::log(denom) + (alpha * mu - 0.5 * beta * mu * mu + 0.5 * alpha * alpha * s) / denom;
            result.log_partition += term;
            result.log_evidence += beta > 0.0
                                       ? term - 0.5 * std::log(2.0 * std::numbers::pi / beta) -
                                             0.5 * alpha * alpha / beta
                                       : term;

            m += k * ((alpha - beta * mu) / denom);
            if (joseph_ && beta > 0.0) {
                const StateVector g = k * (beta / denom);
                const StateMatrix i_gh =
                    StateMatrix::Identity(order_, order_) - g * h.transpose();
                p = i_gh * p * i_gh.transpose() + g * (1.0 / beta) * g.transpose();
            } else {
                p -= (beta / denom) * (k * k.transpose());
            }
            symmetrize(p);
        }
        if (!p.allFinite() || !m.allFinite()) {
            throw NumericalError("non-finite filter covariance; hyperparameters may be divergent");
        }
        store_vec(filt_mean_, n, m);
        store_mat(filt_cov_, n, p);
    }

    // Backward RTS pass.
    store_vec(smooth_mean_, n_nodes - 1, m);
    store_mat(smooth_cov_, n_nodes - 1, p);
    set_marginal_from_state(n_nodes - 1);
    StateVector ms = m;
    StateMatrix ps = p;
    for (std::size_t n = n_nodes - 1; n-- > 0;) {
        const StateMatrix a = load_mat(trans_, n + 1);
        const StateMatrix pf = load_mat(filt_cov_, n);
        const StateMatrix pp = load_mat(pred_cov_, n + 1);
        const StateMatrix g = smoother_gain(pf * a.transpose(), pp);
        ms = load_vec(filt_mean_, n) + g * (ms - load_vec(pred_mean_, n + 1));
        ps = pf + g * (ps - pp) * g.transpose();
        symmetrize(ps);
        store_vec(smooth_mean_, n, ms);
        store_mat(smooth_cov_, n, ps);
        set_marginal_from_state(n);
    }
    if (!std::isfinite(result.log_partition)) {
        throw NumericalError("non-finite chain log-partition");
    }
    last_ = result;
    return result;
}

StateVector FeatureChain::smoothed_state_mean(std::size_t n) const { return load_vec(smooth_mean_, n); }

StateMatrix FeatureChain::smoothed_state_cov(std::size_t n) const { return load_mat(smooth_cov_, n); }

Marginal FeatureChain::posterior_at(double t) const {
    const StateVector& h = spec_->measurement();
    if (empty()) {
        return {0.0, spec_->prior_variance(t)};
    }
    const auto idx = static_cast<std::size_t>(
        std::upper_bound(times_.begin(), times_.end(), t) - times_.begin());
    if (idx > 0 && times_[idx - 1] == t) {
        return marginal(idx - 1);
    }

    StateMatrix a, q;
    if (idx == size()) {
        spec_->link(times_.back(), t, a, q);
        const StateVector m = a * load_vec(smooth_mean_, idx - 1);
        const StateMatrix p = a * load_mat(smooth_cov_, idx - 1) * a.transpose() + q;
        return {h.dot(m), std::max(h.dot(p * h), 0.0)};
    }

    // Prediction at t from the left (filtered state, or the prior before the
    // first node), then one RTS step against the smoothed right neighbour.
    StateVector m;
    StateMatrix p;
    if (idx == 0) {
        m = spec_->initial_mean(t);
        p = spec_->initial_cov(t);
    } else {
        spec_->link(times_[idx - 1], t, a, q);
        m = a * load_vec(filt_mean_, idx - 1);
        p = a * load_mat(filt_cov_, idx - 1) * a.transpose() + q;
    }
    spec_->link(t, times_[idx], a, q);
    const StateVector m_next = a * m;
    StateMatrix p_next = a * p * a.transpose() + q;
    symmetrize(p_next);
    const StateMatrix g = smoother_gain(p * a.transpose(), p_next);
    const StateVector ms = m + g * (load_vec(smooth_mean_, idx) - m_next);
    const StateMatrix ps = p + g * (load_mat(smooth_cov_, idx) - p_next) * g.transpose();
    return {h.dot(ms), std::max(h.dot(ps * h), 0.0)};
}

BatchPosterior batch_posterior(const Eigen::MatrixXd& gram, std::span<const double> alpha,
                               std::span<const double> beta) {
    const auto n = gram.rows();
    if (gram.cols() != n || static_cast<Eigen::Index>(alpha.size()) != n ||
        static_cast<Eigen::Index>(beta.size()) != n) {
        throw std::invalid_argument("batch_posterior: dimension mismatch");
    }
    Eigen::VectorXd sqrt_beta(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (beta[i] < 0.0) throw std::invalid_argument("batch_posterior: negative precision");
        sqrt_beta(i) = std::sqrt(beta[i]);
    }
    const Eigen::MatrixXd kb = gram * sqrt_beta.asDiagonal();
    Eigen::MatrixXd system = sqrt_beta.asDiagonal() * kb;
    system.diagonal().array() += 1.0;
    Eigen::LLT<Eigen::MatrixXd> llt(system);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("batch_posterior: singular system");
    }
    BatchPosterior out;
    out.cov = gram - kb * llt.solve(kb.transpose());
    out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
    out.mean = out.cov * Eigen::Map<const Eigen::VectorXd>(alpha.data(), n);
    return out;
}

}  // namespace skillgp
