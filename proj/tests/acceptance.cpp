// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include "helpers.hpp"
#include "likelihood_oracles.hpp"
#include "oracles.hpp"

#include "skillgp/evaldata.hpp"
#include "skillgp/model.hpp"
#include "skillgp/search.hpp"
#include "skillgp/statespace.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>

using namespace skillgp;
using testing_helpers::uniform;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, value);
    return buf;
}

int failures = 0;

void report(int criterion, const std::string& title, bool pass, const std::string& detail) {
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << criterion << " (" << title << "): " << detail
              << std::endl;
    if (!pass) ++failures;
}

// Convergence of every fit made for criteria 2, 3 and 7.
struct ConvergenceLog {
    int fits = 0;
    int worst = 0;
    int failed = 0;

    void add(int iterations, bool converged) {
        ++fits;
        worst = std::max(worst, iterations);
        if (!converged || iterations > 100) ++failed;
    }
    void add(const FitReport& r) { add(r.iterations, r.converged); }
    void add(const EvalResult& r) {
        fits += r.fits;
        worst = std::max(worst, r.max_fit_iterations);
        if (!r.all_converged || r.max_fit_iterations > 100) ++failed;
    }
};

ConvergenceLog convergence;

FitConfig standard_fit(Objective objective = Objective::EP) {
    FitConfig c;
    c.objective = objective;
    c.tolerance = 1e-3;
    c.max_iterations = 500;
    c.threads = 0;
    return c;
}

MatchRecord game(std::int64_t day, int i, int j, int outcome) {
    MatchRecord r;
    r.day = day;
    r.time = static_cast<double>(day) / kDaysPerYear;
    r.comp_i = "p" + std::to_string(i);
    r.comp_j = "p" + std::to_string(j);
    r.outcome = outcome;
    return r;
}

// ---------------------------------------------------------------------------
// 1. Chain smoother against the dense posterior.

void criterion_1() {
    const auto start = Clock::now();
    std::mt19937_64 rng(101);
    std::vector<Kernel> kernels;
    for (int kind = 0; kind < testing_helpers::kLeafKinds; ++kind) kernels.push_back(testing_helpers::random_leaf(rng, kind));
    for (int k = 0; k < 12; ++k) {
        const int n = std::uniform_int_distribution<int>(2, 3)(rng);
        std::vector<Kernel> children;
        for (int c = 0; c < n; ++c) {
            children.push_back(testing_helpers::random_leaf(
                rng, std::uniform_int_distribution<int>(0, testing_helpers::kLeafKinds - 1)(rng)));
        }
        kernels.push_back(Kernel::sum(children));
    }
    double worst = 0.0;
    int problems = 0;
    for (const Kernel& k : kernels) {
        for (int n : {5, 50, 200}) {
            for (int rep = 0; rep < 3; ++rep) {
                const auto times = testing_helpers::random_times(rng, n, 0.0, 5.0);
                std::vector<double> alpha(n), beta(n);
                for (int i = 0; i < n; ++i) {
                    const bool vacuous = uniform(rng, 0.0, 1.0) < 0.1;
                    beta[i] = vacuous ? 0.0 : uniform(rng, 0.1, 10.0);
                    alpha[i] = vacuous ? 0.0 : uniform(rng, -3.0, 3.0);
                }
                FeatureChain chain(std::make_shared<const StateSpaceSpec>(to_state_space(k)), times);
                for (int i = 0; i < n; ++i) chain.set_pseudo(i, alpha[i], beta[i]);
                chain.smooth();
                const auto dense = oracle::dense_posterior(gram(k, times), alpha, beta);
                for (int i = 0; i < n; ++i) {
                    worst = std::max(worst, std::abs(chain.marginal(i).mean - dense.mean(i)));
                    worst = std::max(worst, std::abs(chain.marginal(i).var - dense.cov(i, i)));
                }
                ++problems;
            }
        }
    }
    const double elapsed = seconds_since(start);
    report(1, "state-space vs batch posterior", worst <= 1e-6 && elapsed < 10.0,
           std::to_string(problems) + " problems over " + std::to_string(kernels.size()) +
               " kernels, N in {5,50,200}; max abs error " + fmt("%.2e", worst) + " (limit 1e-6); " +
               fmt("%.2f", elapsed) + " s (limit 10 s)");
}

// ---------------------------------------------------------------------------
// Synthetic data sets.

struct GaussianLeague {
    std::vector<MatchRecord> records;
    double var_dyn = 9.0, ell = 1.0, var_cst = 16.0, noise = 144.0;
    int players = 32;
};

// OU + constant scores, point differences with Gaussian noise, ~6 games a day.
GaussianLeague gaussian_league() {
    GaussianLeague g;
    std::mt19937_64 rng(202);
    std::normal_distribution<double> normal;
    std::vector<double> cst(g.players), dyn(g.players);
    for (int p = 0; p < g.players; ++p) {
        cst[p] = std::sqrt(g.var_cst) * normal(rng);
        dyn[p] = std::sqrt(g.var_dyn) * normal(rng);
    }
    const double a = std::exp(-1.0 / kDaysPerYear / g.ell);
    std::int64_t day = 0;
    while (g.records.size() < 6000) {
        ++day;
        for (double& s : dyn) s = a * s + std::sqrt(g.var_dyn * (1.0 - a * a)) * normal(rng);
        if (day % 7 == 0) continue;  // rest day
        std::vector<int> order(g.players);
        for (int p = 0; p < g.players; ++p) order[p] = p;
        std::shuffle(order.begin(), order.end(), rng);
        for (int m = 0; m < 6 && g.records.size() < 6000; ++m) {
            const int i = order[2 * m], j = order[2 * m + 1];
            const double raw = cst[i] + dyn[i] - cst[j] - dyn[j] + std::sqrt(g.noise) * normal(rng);
            auto diff = static_cast<std::int64_t>(std::llround(raw));
            if (diff == 0) diff = raw >= 0.0 ? 1 : -1;
            MatchRecord r = game(day, i, j, diff > 0 ? 1 : -1);
            r.points = std::array<std::int64_t, 2>{100 + diff, 100};
            g.records.push_back(r);
        }
    }
    return g;
}

struct ProbitLeague {
    std::vector<MatchRecord> records;
    int players = 20;
    double var = 1.0, ell = 2.0;
    std::vector<std::vector<double>> truth;  // truth[day][player]
};

// Pure OU scores with probit outcomes over five years.
ProbitLeague probit_league() {
    ProbitLeague g;
    std::mt19937_64 rng(303);
    std::normal_distribution<double> normal;
    const int days = 1826;
    std::vector<double> s(g.players);
    for (double& x : s) x = std::sqrt(g.var) * normal(rng);
    const double a = std::exp(-1.0 / kDaysPerYear / g.ell);
    const int n = 10000;
    for (int day = 0; day < days; ++day) {
        if (day > 0) {
            for (double& x : s) x = a * x + std::sqrt(g.var * (1.0 - a * a)) * normal(rng);
        }
        g.truth.push_back(s);
        const int today = n * (day + 1) / days - n * day / days;
        for (int m = 0; m < today; ++m) {
            const int i = std::uniform_int_distribution<int>(0, g.players - 1)(rng);
            const int j = (i + std::uniform_int_distribution<int>(1, g.players - 1)(rng)) % g.players;
            g.records.push_back(game(day, i, j, s[i] - s[j] + normal(rng) > 0.0 ? 1 : -1));
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// 2. Mean-field rolling evaluation against the exact joint posterior.

void criterion_2(const GaussianLeague& g) {
    const auto start = Clock::now();
    ModelSpec spec;
    spec.likelihood = Likelihood::gaussian(g.noise);
    spec.default_kernel = Kernel::sum({Kernel::matern12(g.var_dyn, g.ell), Kernel::constant(g.var_cst)});
    DatasetSchema schema;
    schema.outcome = OutcomeSchema::Points;
    const MatchEncoder encoder(spec, schema);
    EvalOptions opt;
    opt.fit = standard_fit();
    const EvalResult mf = rolling_evaluate(encoder, g.records, opt);
    convergence.add(mf);

    // Exact pipeline: joint Kalman filter over all players, one day at a time.
    oracle::JointFilter filter(g.players, g.var_dyn, g.ell, g.var_cst, g.noise);
    const std::size_t first_test = split_index(g.records.size(), opt.train_fraction);
    double loss = 0.0, acc = 0.0;
    std::size_t count = 0;
    const auto index = [](const std::string& id) { return std::stoi(id.substr(1)); };
    for (std::size_t k = 0; k < g.records.size();) {
        std::size_t end = k;
        while (end < g.records.size() && g.records[end].day == g.records[k].day) ++end;
        filter.advance(g.records[k].time);
        for (std::size_t r = std::max(k, first_test); r < end; ++r) {
            const auto [mean, var] = filter.difference(index(g.records[r].comp_i), index(g.records[r].comp_j));
            const double p_win = oracle::Phi(mean / std::sqrt(var + g.noise));
            const MatchProbs p{1.0 - p_win, 0.0, p_win};
            loss += record_log_loss(p, g.records[r].outcome);
            acc += record_accuracy(p, g.records[r].outcome);
            ++count;
        }
        for (std::size_t r = k; r < end; ++r) {
            const auto& pts = *g.records[r].points;
            filter.update(index(g.records[r].comp_i), index(g.records[r].comp_j), static_cast<double>(pts[0] - pts[1]));
        }
        k = end;
    }
    loss /= static_cast<double>(count);
    acc /= static_cast<double>(count);
    const double elapsed = seconds_since(start);
    const double gap = std::abs(mf.log_loss - loss);
    report(2, "mean-field vs exact posterior", gap <= 1e-3 && elapsed < 300.0 && count == mf.predictions.size(),
           "M=32, N=" + std::to_string(g.records.size()) + ", " + std::to_string(count) +
               " rolling predictions; log loss mean-field " + fmt("%.5f", mf.log_loss) + " vs exact " +
               fmt("%.5f", loss) + " (gap " + fmt("%.2e", gap) + ", limit 1e-3); accuracy " + fmt("%.4f", mf.accuracy) +
               " vs " + fmt("%.4f", acc) + "; " + fmt("%.1f", elapsed) + " s (limit 300 s)");
}

// ---------------------------------------------------------------------------
// 3. EP and reverse-KL test metrics.

struct SplitScore {
    double log_loss = 0.0;
    double accuracy = 0.0;
};

SplitScore fit_and_test(const MatchEncoder& encoder, const std::vector<MatchRecord>& records, Objective objective) {
    const std::size_t first_test = split_index(records.size(), 0.7);
    Model m = encoder.make_model(default_epoch(records));
    for (std::size_t k = 0; k < first_test; ++k) encoder.observe(m, records[k]);
    convergence.add(m.fit(standard_fit(objective)));
    const EvalResult r = evaluate_model(encoder, m, records, first_test);
    return {r.log_loss, r.accuracy};
}

void criterion_3(const GaussianLeague& gl, const ProbitLeague& pl) {
    std::ostringstream detail;
    bool pass = true;
    const auto compare = [&](const char* name, const MatchEncoder& enc, const std::vector<MatchRecord>& records) {
        const SplitScore ep = fit_and_test(enc, records, Objective::EP);
        const SplitScore kl = fit_and_test(enc, records, Objective::ReverseKL);
        const double dl = std::abs(ep.log_loss - kl.log_loss);
        const double da = std::abs(ep.accuracy - kl.accuracy);
        pass = pass && dl < 5e-4 && da < 5e-4;
        detail << name << ": log loss EP " << fmt("%.5f", ep.log_loss) << " / KL " << fmt("%.5f", kl.log_loss)
               << ", accuracy EP " << fmt("%.5f", ep.accuracy) << " / KL " << fmt("%.5f", kl.accuracy) << "; ";
    };
    ModelSpec probit;
    probit.likelihood = Likelihood::probit();
    probit.default_kernel = Kernel::matern12(pl.var, pl.ell);
    compare("probit OU", MatchEncoder(probit, {}), pl.records);
    ModelSpec gauss;
    gauss.likelihood = Likelihood::gaussian(gl.noise);
    gauss.default_kernel = Kernel::sum({Kernel::matern12(gl.var_dyn, gl.ell), Kernel::constant(gl.var_cst)});
    DatasetSchema points;
    points.outcome = OutcomeSchema::Points;
    compare("gaussian OU+constant", MatchEncoder(gauss, points), gl.records);
    detail << "agreement required: |difference| < 5e-4";
    report(3, "EP vs reverse-KL parity", pass, detail.str());
}

// ---------------------------------------------------------------------------
// 4. Uniform predictor.

void criterion_4(const GaussianLeague& gl, const ProbitLeague& pl) {
    std::vector<MatchRecord> ternary = gl.records;
    for (std::size_t k = 0; k < ternary.size(); k += 3) ternary[k].outcome = 0;
    const double rounded[] = {
        std::round(random_baseline(pl.records, false, split_index(pl.records.size(), 0.7)).log_loss * 1e4) / 1e4,
        std::round(random_baseline(gl.records, false).log_loss * 1e4) / 1e4,
        std::round(random_baseline(ternary, true, split_index(ternary.size(), 0.7)).log_loss * 1e4) / 1e4};
    const bool pass = rounded[0] == 0.6931 && rounded[1] == 0.6931 && rounded[2] == 1.0986;
    report(4, "random baseline", pass,
           "binary " + fmt("%.4f", rounded[0]) + " and " + fmt("%.4f", rounded[1]) + " (expect 0.6931), ternary " +
               fmt("%.4f", rounded[2]) + " (expect 1.0986)");
}

// ---------------------------------------------------------------------------
// 5. Likelihood derivatives.

void criterion_5() {
    const auto start = Clock::now();
    const auto close = [](double a, double b) { return std::abs(a - b) <= 1e-5 * (std::abs(b) + 1e-3); };
    std::mt19937_64 rng(505);
    const std::vector<Likelihood> liks{Likelihood::probit(), Likelihood::logit(), Likelihood::ordinal_probit(0.4),
                                       Likelihood::poisson_exp(), Likelihood::gaussian(0.7)};
    int checks = 0, bad = 0;
    double worst = 0.0;
    const double h = 1e-3;
    for (const Likelihood& lik : liks) {
        for (int trial = 0; trial < 1000; ++trial) {
            double y = 0.0;
            switch (lik.outcome_space()) {
                case OutcomeSpace::Binary: y = uniform(rng, 0, 1) < 0.5 ? 1.0 : -1.0; break;
                case OutcomeSpace::Ternary: y = std::floor(uniform(rng, -1.0, 2.0)); break;
                case OutcomeSpace::Count: y = std::floor(uniform(rng, 0.0, 8.0)); break;
                case OutcomeSpace::Real: y = uniform(rng, -3.0, 3.0); break;
            }
            const double mean = uniform(rng, -3.0, 3.0);
            const double var = uniform(rng, 0.01, 3.0);
            for (const bool ep : {true, false}) {
                const Derivatives d = ep ? ep_derivatives(lik, y, mean, var) : kl_derivatives(lik, y, mean, var);
                const auto f = [&](double m) {
                    return ep ? oracle::oracle_log_z(lik, y, m, var) : oracle::oracle_expected_log(lik, y, m, var);
                };
                const double fd1 = oracle::diff1(f, mean, h);
                const double fd2 = oracle::diff2(f, mean, h);
                worst = std::max(worst, std::abs(d.d1 - fd1) / (std::abs(fd1) + 1e-3));
                worst = std::max(worst, std::abs(d.d2 - fd2) / (std::abs(fd2) + 1e-3));
                checks += 2;
                bad += close(d.d1, fd1) ? 0 : 1;
                bad += close(d.d2, fd2) ? 0 : 1;
            }
        }
    }
    // Probit closed form against a 64-node rule.
    const GaussHermite rule(64);
    double worst_probit = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const double y = uniform(rng, 0, 1) < 0.5 ? 1.0 : -1.0;
        const double mean = uniform(rng, -3.0, 3.0);
        const double var = uniform(rng, 0.01, 3.0);
        double z = 0.0, z1 = 0.0, z2 = 0.0;
        for (int i = 0; i < rule.size(); ++i) {
            const double u = y * (mean + std::sqrt(var) * rule.nodes()[i]);
            z += rule.weights()[i] * oracle::Phi(u);
            z1 += rule.weights()[i] * y * oracle::phi(u);
            z2 += rule.weights()[i] * -u * oracle::phi(u);
        }
        const Derivatives d = ep_derivatives(Likelihood::probit(), y, mean, var);
        const double q1 = z1 / z;
        const double q2 = z2 / z - q1 * q1;
        worst_probit = std::max({worst_probit, std::abs(d.value - std::log(z)) / std::max(1.0, std::abs(std::log(z))),
                                 std::abs(d.d1 - q1) / std::max(1.0, std::abs(q1)),
                                 std::abs(d.d2 - q2) / std::max(1.0, std::abs(q2))});
    }
    report(5, "likelihood derivatives", bad == 0 && worst_probit <= 1e-8,
           std::to_string(checks) + " derivative checks (5 likelihoods x 1000 draws x EP/KL), " + std::to_string(bad) +
               " outside 1e-5 relative (worst " + fmt("%.2e", worst) + "); probit closed form vs 64-node rule " +
               fmt("%.2e", worst_probit) + " (limit 1e-8); " + fmt("%.1f", seconds_since(start)) + " s");
}

// ---------------------------------------------------------------------------
// 6. Scaling and parallel determinism.

Model scaling_model(std::size_t n, int features) {
    std::mt19937_64 rng(606);
    Model m(Likelihood::probit());
    const Kernel k = Kernel::sum({Kernel::matern12(1.0, 1.0), Kernel::constant(0.5)});
    std::vector<std::string> ids;
    for (int f = 0; f < features; ++f) {
        ids.push_back("f" + std::to_string(f));
        m.add_feature(ids.back(), k);
    }
    for (std::size_t k2 = 0; k2 < n; ++k2) {
        const int i = std::uniform_int_distribution<int>(0, features - 1)(rng);
        const int j = (i + std::uniform_int_distribution<int>(1, features - 1)(rng)) % features;
        m.observe({{ids[i], 1.0}, {ids[j], -1.0}}, 10.0 * static_cast<double>(k2) / static_cast<double>(n),
                  uniform(rng, 0.0, 1.0) < 0.5 ? 1.0 : -1.0);
    }
    return m;
}

// Mean wall time of iterations 2..iterations (the first includes setup).
double per_iteration(Model& m, int threads, int iterations, std::vector<double>* log_marginals = nullptr) {
    FitConfig c;
    c.threads = threads;
    c.max_iterations = iterations;
    c.tolerance = 1e-300;
    std::vector<double> stamps;
    c.progress = [&](const IterationRecord& r) { stamps.push_back(r.elapsed_s); };
    const FitReport r = m.fit(c);
    if (log_marginals) *log_marginals = r.log_marginals;
    return (stamps.back() - stamps.front()) / static_cast<double>(stamps.size() - 1);
}

std::vector<double> chain_state(const Model& m) {
    std::vector<double> out;
    for (const auto& id : m.feature_ids()) {
        const FeatureChain& c = m.chain(id);
        for (std::size_t n = 0; n < c.size(); ++n) {
            out.push_back(c.alpha(n));
            out.push_back(c.beta(n));
            out.push_back(c.marginal(n).mean);
            out.push_back(c.marginal(n).var);
        }
    }
    return out;
}

void criterion_6() {
    const auto start = Clock::now();
    double best[2] = {1e300, 1e300};
    const std::size_t sizes[2] = {100000, 200000};
    Model models[2] = {scaling_model(sizes[0], 500), scaling_model(sizes[1], 500)};
    // Interleaved repeats so that load drift on the machine hits both sizes alike.
    for (int rep = 0; rep < 6; ++rep) {
        for (int s = 0; s < 2; ++s) best[s] = std::min(best[s], per_iteration(models[s], 1, 8));
    }
    const double ratio = best[1] / best[0];

    std::vector<double> lm1, lm8;
    Model one = scaling_model(1000000, 2000);
    const double t1 = per_iteration(one, 1, 4, &lm1);
    const auto state1 = chain_state(one);
    Model eight = scaling_model(1000000, 2000);
    const double t8 = per_iteration(eight, 8, 4, &lm8);
    const auto state8 = chain_state(eight);
    const bool identical = state1.size() == state8.size() && lm1.size() == lm8.size() &&
                           std::memcmp(state1.data(), state8.data(), state1.size() * sizeof(double)) == 0 &&
                           std::memcmp(lm1.data(), lm8.data(), lm1.size() * sizeof(double)) == 0;
    const double speedup = t1 / t8;
    const bool pass = ratio >= 1.6 && ratio <= 2.4 && speedup >= 3.0 && identical;
    report(6, "linear scaling and threads", pass,
           "per-iteration " + fmt("%.3f", best[0]) + " s (N=1e5) vs " + fmt("%.3f", best[1]) + " s (N=2e5), ratio " +
               fmt("%.2f", ratio) + " (limit [1.6, 2.4]); N=1e6: 1 thread " + fmt("%.3f", t1) + " s, 8 threads " +
               fmt("%.3f", t8) + " s, speedup " + fmt("%.2f", speedup) + " (limit >= 3; " +
               std::to_string(std::thread::hardware_concurrency()) + " hardware threads available); results " +
               (identical ? "byte-identical" : "DIFFER") + " across thread counts; " +
               fmt("%.1f", seconds_since(start)) + " s");
}

// ---------------------------------------------------------------------------
// 7. Recovery of known OU scores.

void criterion_7(const ProbitLeague& g) {
    const auto start = Clock::now();
    ModelSpec spec;
    spec.likelihood = Likelihood::probit();
    spec.default_kernel = Kernel::matern12(g.var, g.ell);
    const MatchEncoder encoder(spec, {});
    Model m = encoder.make_model(default_epoch(g.records));
    for (const auto& r : g.records) encoder.observe(m, r);
    convergence.add(m.fit(standard_fit()));

    double worst_tau = 1.0;
    std::ostringstream taus;
    const auto days = static_cast<int>(g.truth.size());
    for (int probe = 0; probe < 10; ++probe) {
        const int day = days * (2 * probe + 1) / 20;
        const double t = static_cast<double>(day) / kDaysPerYear;
        std::vector<double> fitted;
        for (int p = 0; p < g.players; ++p) {
            const std::vector<double> grid{t};
            fitted.push_back(m.trajectory("p" + std::to_string(p), grid)[0].mean);
        }
        const double tau = oracle::kendall_tau(fitted, g.truth[day]);
        worst_tau = std::min(worst_tau, tau);
        taus << (probe ? " " : "") << fmt("%.3f", tau);
    }

    const auto space = nlohmann::json::parse(R"({
        "likelihood": {"likelihood": "probit"},
        "default_kernel": {"choice": [
            {"type": "matern12", "var": {"log_uniform": [0.1, 10]}, "lscale": {"log_uniform": [0.1, 10]}},
            {"type": "constant", "var": {"log_uniform": [0.1, 10]}}
        ]}
    })");
    SearchOptions opt;
    opt.n = 16;
    opt.seed = 7;
    opt.fit = standard_fit();
    const Split split = chronological_split(g.records, 0.7);
    const auto ranked = random_search(space, {}, split.train, opt);
    std::optional<double> best_ou, best_constant;
    for (const auto& c : ranked) {
        convergence.add(c.iterations, c.converged && c.score.has_value());
        if (!c.score) continue;
        const bool ou = c.config.at("default_kernel").at("type") == "matern12";
        auto& slot = ou ? best_ou : best_constant;
        if (!slot) slot = *c.score;
    }
    const bool top_is_ou = !ranked.empty() && ranked[0].score &&
                           ranked[0].config.at("default_kernel").at("type") == "matern12";
    const bool ranking = top_is_ou && best_ou && best_constant && *best_ou > *best_constant;
    report(7, "synthetic recovery", worst_tau >= 0.8 && ranking,
           "M=20, N=" + std::to_string(g.records.size()) + "; Kendall tau at 10 probe times [" + taus.str() +
               "], min " + fmt("%.3f", worst_tau) + " (limit 0.8); search (16 configs): best Matern-1/2 log-marginal " +
               (best_ou ? fmt("%.2f", *best_ou) : std::string("none")) + ", best Constant " +
               (best_constant ? fmt("%.2f", *best_constant) : std::string("none")) + ", top-ranked family " +
               (top_is_ou ? "matern12" : "other") + "; " + fmt("%.1f", seconds_since(start)) + " s");
}

}  // namespace

int main() {
    criterion_1();
    const GaussianLeague gaussian = gaussian_league();
    const ProbitLeague probit = probit_league();
    criterion_2(gaussian);
    criterion_3(gaussian, probit);
    criterion_4(gaussian, probit);
    criterion_5();
    criterion_6();
    criterion_7(probit);
    report(8, "convergence", convergence.failed == 0,
           std::to_string(convergence.fits) + " fits from criteria 2, 3 and 7 at tolerance 1e-3; " +
               std::to_string(convergence.failed) + " not converged within 100 iterations; most iterations " +
               std::to_string(convergence.worst));
    std::cout << "SKIP criterion 9 (ATP tennis, external data): built only with -DSKILLGP_EXTENDED_TESTS=ON"
              << std::endl;
    return failures == 0 ? 0 : 1;
}
