#include "helpers.hpp"
#include "oracles.hpp"

#include "skillgp/errors.hpp"
#include "skillgp/model.hpp"

#include <doctest.h>

#include <chrono>
#include <cstring>

using namespace skillgp;
using testing_helpers::uniform;

namespace {

Model small_league(const Likelihood& lik, std::uint64_t seed, int matches = 60) {
    std::mt19937_64 rng(seed);
    Model m(lik, 0.5);
    const Kernel k = Kernel::sum({Kernel::matern12(0.8, 1.2), Kernel::constant(0.5)});
    for (const char* id : {"ann", "bob", "cat", "dan"}) m.add_feature(id, k);
    m.add_feature(kAdvantageFeature, Kernel::constant(0.3));
    const std::vector<std::string> ids{"ann", "bob", "cat", "dan"};
    double t = 0.0;
    for (int n = 0; n < matches; ++n) {
        t += uniform(rng, 0.0, 0.1);
        const int a = std::uniform_int_distribution<int>(0, 3)(rng);
        const int b = (a + std::uniform_int_distribution<int>(1, 3)(rng)) % 4;
        Coefficients x{{ids[a], 1.0}, {ids[b], -1.0}};
        if (n % 3 == 0) x.emplace_back(kAdvantageFeature, 1.0);
        double y = 0.0;
        switch (lik.outcome_space()) {
            case OutcomeSpace::Binary: y = uniform(rng, 0, 1) < 0.5 + 0.1 * (a - b) ? 1.0 : -1.0; break;
            case OutcomeSpace::Ternary: y = std::floor(uniform(rng, -1.0, 2.0)); break;
            case OutcomeSpace::Count: y = std::floor(uniform(rng, 0.0, 5.0)); break;
            case OutcomeSpace::Real: y = uniform(rng, -2.0, 2.0) + 0.3 * (a - b); break;
        }
        m.observe(x, t, y);
    }
    FitConfig c;
    c.threads = 1;
    m.fit(c);
    return m;
}

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("coefficient canonicalization and interaction ids") {
    const Coefficients x = canonical({{"b", 1.0}, {"a", -1.0}, {"b", 0.5}, {"c", 1.0}, {"c", -1.0}});
    REQUIRE(x.size() == 2);
    CHECK(x[0] == std::pair<std::string, double>{"a", -1.0});
    CHECK(x[1] == std::pair<std::string, double>{"b", 1.5});
    CHECK(interaction_feature("x", "y") == std::pair<std::string, double>{"x|y", 1.0});
    CHECK(interaction_feature("y", "x") == std::pair<std::string, double>{"x|y", -1.0});
}

TEST_CASE("features and observations") {
    Model m(Likelihood::probit());
    m.add_feature("teamA", Kernel::constant(1.0));
    m.add_feature("teamB", Kernel::wiener(1.0));
    CHECK_THROWS_AS(m.add_feature("teamA", Kernel::constant(1.0)), ConfigError);
    m.observe({{"teamA", 1.0}, {"teamB", -1.0}}, 1.0, 1.0);
    CHECK(m.chain("teamA").size() == 1);
    CHECK(m.chain("teamB").size() == 1);
    CHECK_THROWS_AS(m.observe({{"teamC", 1.0}}, 2.0, 1.0), DataError);
    CHECK_THROWS_AS(m.observe({{"teamA", 1.0}}, 0.5, 1.0), DataError);
    CHECK_THROWS_AS(m.observe({{"teamA", 1.0}}, 2.0, 0.0), DataError);
    CHECK_THROWS_AS(m.observe({{"teamA", 1.0}, {"teamA", -1.0}}, 2.0, 1.0), DataError);
    CHECK_THROWS_AS(m.log_marginal(), std::logic_error);
    CHECK(m.num_observations() == 1);

    // Home advantage: d = s_home + s_adv - s_away touches three chains.
    m.add_feature(kAdvantageFeature, Kernel::constant(0.5));
    m.observe({{"teamA", 1.0}, {kAdvantageFeature, 1.0}, {"teamB", -1.0}}, 2.0, -1.0);
    CHECK(m.chain(kAdvantageFeature).size() == 1);
    CHECK(m.chain("teamA").size() == 2);
    CHECK(m.graph().terms(1).size() == 3);
    CHECK_FALSE(m.fitted());
    m.fit({});
    CHECK(m.fitted());
    CHECK(std::isfinite(m.log_marginal()));
}

TEST_CASE("bulk construction sorts observations by time") {
    std::vector<Model::Input> inputs{{{{"a", 1.0}}, 3.0, 1.0}, {{{"a", 1.0}}, 1.0, -1.0}, {{{"a", 1.0}}, 2.0, 1.0}};
    const Model m = Model::from_observations(Likelihood::probit(), 0.0, {{"a", Kernel::wiener(1.0)}}, inputs);
    CHECK(m.observation_time(0) == 1.0);
    CHECK(m.observation_time(2) == 3.0);
    CHECK(m.graph().outcome(0) == -1.0);
}

TEST_CASE("predictions") {
    Model prior(Likelihood::probit());
    prior.add_feature("i", Kernel::matern12(1.0, 1.0));
    prior.add_feature("j", Kernel::matern12(1.0, 1.0));
    CHECK(prior.predict({{"i", 1.0}, {"j", -1.0}}, 3.0).prob(1.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(prior.predict({{"k", 1.0}}, 3.0), DataError);

    const Model m = small_league(Likelihood::probit(), 41);
    const auto same = m.predict({{"ann", 1.0}, {"ann", -1.0}}, 2.0);
    CHECK(same.prob(1.0) == doctest::Approx(same.prob(-1.0)));

    // A feature shared by both sides cancels.
    const auto plain = m.predict({{"ann", 1.0}, {"bob", -1.0}}, 2.0);
    const auto shared = m.predict({{"ann", 1.0}, {kAdvantageFeature, 1.0}, {"bob", -1.0}, {kAdvantageFeature, -1.0}}, 2.0);
    CHECK(plain.prob(1.0) == shared.prob(1.0));

    const double a = 0.372;
    const auto tie = predictive(Likelihood::ordinal_probit(a), 0.0, 0.0);
    CHECK(tie.prob(0.0) == doctest::Approx(1.0 - 2.0 * oracle::Phi(-a)).epsilon(1e-12));

    for (const Likelihood& lik : {Likelihood::probit(), Likelihood::logit(), Likelihood::ordinal_probit(0.5),
                                  Likelihood::poisson_exp(), Likelihood::gaussian(1.0)}) {
        const Model fitted = small_league(lik, 42);
        for (double t : {-1.0, 1.0, 3.0, 10.0}) {
            const auto dist = fitted.predict({{"cat", 1.0}, {"dan", -1.0}, {kAdvantageFeature, 1.0}}, t);
            if (dist.space == OutcomeSpace::Real) continue;
            double total = 0.0;
            for (double p : dist.probs) {
                CHECK(p >= 0.0);
                CHECK(p <= 1.0);
                total += p;
            }
            CHECK(std::abs(total - 1.0) <= 1e-8);
        }
    }
}

TEST_CASE("trajectories") {
    const Model m = small_league(Likelihood::logit(), 43);
    const FeatureChain& c = m.chain("bob");
    std::vector<double> grid;
    for (std::size_t n = 0; n < c.size(); ++n) grid.push_back(c.time(n));
    const auto traj = m.trajectory("bob", grid);
    for (std::size_t n = 0; n < c.size(); ++n) {
        CHECK(traj[n].mean == doctest::Approx(c.marginal(n).mean));
        CHECK(traj[n].std == doctest::Approx(std::sqrt(c.marginal(n).var)));
    }

    // Continuity across node times.
    for (std::size_t n = 1; n + 1 < c.size(); n += 5) {
        const double t = c.time(n);
        const std::vector<double> pair{t - 1e-6, t + 1e-6};
        const auto p = m.trajectory("bob", pair);
        CHECK(std::abs(p[0].mean - p[1].mean) <= 1e-3);
        CHECK(std::abs(p[0].std - p[1].std) <= 1e-3);
    }

    // Far beyond the data an OU score returns to its prior.
    Model ou(Likelihood::probit());
    const double var = 1.7;
    ou.add_feature("x", Kernel::matern12(var, 0.5));
    ou.add_feature("y", Kernel::matern12(var, 0.5));
    ou.add_feature("idle", Kernel::matern32(2.0, 1.0));
    for (int n = 0; n < 20; ++n) ou.observe({{"x", 1.0}, {"y", -1.0}}, 0.1 * n, 1.0);
    ou.fit({});
    const std::vector<double> far{2.0, 5.0, 30.0};
    const auto tail = ou.trajectory("x", far);
    CHECK(tail[0].mean > tail[1].mean);
    CHECK(tail[2].mean == doctest::Approx(0.0).scale(1.0));
    CHECK(tail[2].std == doctest::Approx(std::sqrt(var)).epsilon(1e-9));
    const auto idle = ou.trajectory("idle", far);
    CHECK(idle[1].mean == 0.0);
    CHECK(idle[1].std == doctest::Approx(std::sqrt(2.0)));
    CHECK_THROWS_AS(ou.trajectory("nobody", far), DataError);
}

TEST_CASE("snapshots round-trip exactly") {
    for (const Likelihood& lik : {Likelihood::probit(), Likelihood::ordinal_probit(0.3), Likelihood::poisson_exp()}) {
        const Model m = small_league(lik, 44);
        const std::string text = m.to_json().dump();
        const Model back = Model::from_json(nlohmann::json::parse(text));
        CHECK(back.to_json().dump() == text);
        CHECK(back.fitted());
        CHECK(back.log_marginal() == m.log_marginal());
        for (double t : {0.5, 2.0, 8.0}) {
            const auto a = m.predict({{"ann", 1.0}, {"dan", -1.0}}, t);
            const auto b = back.predict({{"ann", 1.0}, {"dan", -1.0}}, t);
            REQUIRE(a.probs.size() == b.probs.size());
            CHECK(std::memcmp(a.probs.data(), b.probs.data(), a.probs.size() * sizeof(double)) == 0);
        }
    }
    const Model m = small_league(Likelihood::probit(), 45, 10);
    nlohmann::json j = m.to_json();
    j["format_version"] = 99;
    CHECK_THROWS_AS(Model::from_json(j), ConfigError);
    j = m.to_json();
    j["features"][0]["alpha"].erase(0);
    CHECK_THROWS_AS(Model::from_json(j), ConfigError);
    CHECK_THROWS_AS(Model::from_json(nlohmann::json::parse("[1, 2]")), ConfigError);
}

TEST_CASE("model specification files") {
    const auto spec = model_spec_from_json(nlohmann::json::parse(R"({
        "likelihood": {"likelihood": "ordinal_probit", "draw_margin": 0.4},
        "features": [{"id": "a", "kernel": {"type": "wiener", "var": 0.5}}],
        "default_kernel": {"type": "constant", "var": 2.0},
        "epoch": 3.0
    })"));
    CHECK(spec.likelihood.type() == LikelihoodType::OrdinalProbit);
    CHECK(spec.kernel_for("a") == Kernel::wiener(0.5));
    CHECK(spec.kernel_for("zzz") == Kernel::constant(2.0));
    CHECK(*spec.epoch == 3.0);
    const Model m = make_model(spec, 3.0);
    CHECK(m.has_feature("a"));
    CHECK(m.num_features() == 1);
    CHECK(model_spec_from_json(nlohmann::json::parse(model_spec_to_json(spec).dump())).kernel_for("a") ==
          Kernel::wiener(0.5));

    const auto error = [](const char* text) {
        return message_of([&] { model_spec_from_json(nlohmann::json::parse(text)); });
    };
    CHECK(error(R"({"likelihood": {"likelihood": "probit"}, "feature": []})").find("feature") != std::string::npos);
    CHECK(error(R"({"likelihood": {"likelihood": "probit"},
                    "features": [{"id": "a", "kernel": {"type": "matern12", "var": 1}}]})")
              .find("lscale") != std::string::npos);
    CHECK(error(R"({"likelihood": {"likelihood": "probit"},
                    "features": [{"id": "a", "kernel": {"type": "constant", "var": 1}},
                                 {"id": "a", "kernel": {"type": "constant", "var": 1}}]})")
              .find("'a'") != std::string::npos);
    CHECK_THROWS_AS(model_spec_from_json(nlohmann::json::parse(R"({"features": []})")), ConfigError);
}

TEST_CASE("feature registration is amortized constant time") {
    const auto register_many = [](int n) {
        Model m(Likelihood::probit());
        const Kernel k = Kernel::matern12(1.0, 1.0);
        const auto start = std::chrono::steady_clock::now();
        for (int i = 0; i < n; ++i) m.add_feature("f" + std::to_string(i), k);
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    register_many(20000);
    const double small = register_many(50000);
    const double large = register_many(100000);
    INFO("5e4: ", small, " s, 1e5: ", large, " s");
    CHECK(large / small < 3.0);
}

TEST_CASE("joint Kalman oracle agrees with a dense Gaussian process") {
    // Validates the exact reference used by the acceptance suite.
    std::mt19937_64 rng(46);
    const int features = 4;
    const double var_dyn = 0.7, ell = 0.8, var_cst = 0.5, noise = 0.9;
    oracle::JointFilter filter(features, var_dyn, ell, var_cst, noise);
    std::vector<int> fi, fj;
    std::vector<double> times, ys;
    double t = 0.0;
    for (int n = 0; n < 30; ++n) {
        t += uniform(rng, 0.0, 0.5);
        const int a = std::uniform_int_distribution<int>(0, features - 1)(rng);
        const int b = (a + std::uniform_int_distribution<int>(1, features - 1)(rng)) % features;
        fi.push_back(a);
        fj.push_back(b);
        times.push_back(t);
        ys.push_back(uniform(rng, -2.0, 2.0));
    }
    const auto cov = [&](int f, double s, int g, double u) {
        return f == g ? oracle::k_matern12(var_dyn, ell, s, u) + var_cst : 0.0;
    };
    for (int n = 0; n < 30; ++n) {
        filter.advance(times[n]);
        const auto [fmean, fvar] = filter.difference(fi[n], fj[n]);
        // Dense prediction of s_i(t_n) - s_j(t_n) from observations 0..n-1.
        const auto diff_cov = [&](int a, int b) {
            return cov(fi[a], times[a], fi[b], times[b]) - cov(fi[a], times[a], fj[b], times[b]) -
                   cov(fj[a], times[a], fi[b], times[b]) + cov(fj[a], times[a], fj[b], times[b]);
        };
        double mean = 0.0;
        double var = diff_cov(n, n);
        if (n > 0) {
            Eigen::MatrixXd S(n, n);
            Eigen::VectorXd k(n), y(n);
            for (int a = 0; a < n; ++a) {
                for (int b = 0; b < n; ++b) S(a, b) = diff_cov(a, b);
                S(a, a) += noise;
                k(a) = diff_cov(n, a);
                y(a) = ys[a];
            }
            const Eigen::LLT<Eigen::MatrixXd> llt(S);
            mean = k.dot(llt.solve(y));
            var -= k.dot(llt.solve(k));
        }
        CHECK(fmean == doctest::Approx(mean).epsilon(1e-9).scale(1.0));
        CHECK(fvar == doctest::Approx(var).epsilon(1e-9));
        filter.update(fi[n], fj[n], ys[n]);
    }
}
