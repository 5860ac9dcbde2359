// Shared model fixtures and a randomized valid-model generator.
#ifndef REGIME_MV_TESTS_TEST_MODELS_HPP
#define REGIME_MV_TESTS_TEST_MODELS_HPP

#include <random>

#include "regime_mv/market_model.hpp"

namespace regime_mv::testing {

// ell=1, m=1, n1=1 model with constant coefficients and no jumps/shocks
inline MarketModel scalar_model(double r, double mu, double sigma, double horizon = 1.0) {
    MarketModel model;
    model.ell = 1;
    model.m = 1;
    model.n1 = 1;
    model.horizon = horizon;
    model.generator = Eigen::MatrixXd::Zero(1, 1);
    model.resize_tables();
    model.rate[0] = PiecewiseConstant<double>(r);
    model.drift[0] = PiecewiseConstant<Eigen::VectorXd>(Eigen::VectorXd::Constant(1, mu));
    model.vol[0] = PiecewiseConstant<Eigen::MatrixXd>(Eigen::MatrixXd::Constant(1, 1, sigma));
    return model;
}

// Two regimes, two stocks, regime-independent rate, switch shocks in both
// directions and one small jump atom; feasible in both constraint modes.
inline MarketModel two_regime_shock_model() {
    MarketModel model;
    model.ell = 2;
    model.m = 2;
    model.n1 = 2;
    model.horizon = 1.0;
    model.generator = Eigen::MatrixXd(2, 2);
    model.generator << -1.0, 1.0, 0.8, -0.8;
    model.resize_tables();
    for (int i = 0; i < 2; ++i) model.rate[i] = PiecewiseConstant<double>(0.02);

    Eigen::VectorXd mu1(2), mu2(2);
    mu1 << 0.09, 0.06;
    mu2 << 0.05, 0.08;
    model.drift[0] = PiecewiseConstant<Eigen::VectorXd>(mu1);
    model.drift[1] = PiecewiseConstant<Eigen::VectorXd>(mu2);

    Eigen::MatrixXd s1(2, 2), s2(2, 2);
    s1 << 0.18, 0.0, 0.04, 0.16;
    s2 << 0.22, 0.0, 0.06, 0.20;
    model.vol[0] = PiecewiseConstant<Eigen::MatrixXd>(s1);
    model.vol[1] = PiecewiseConstant<Eigen::MatrixXd>(s2);

    JumpAtom atom;
    atom.weight = 1.0;
    Eigen::VectorXd b1(2), b2(2);
    b1 << 0.02, -0.01;
    b2 << -0.015, 0.02;
    atom.loading.push_back(PiecewiseConstant<Eigen::VectorXd>(b1));
    atom.loading.push_back(PiecewiseConstant<Eigen::VectorXd>(b2));
    model.jump_components.push_back(JumpComponent{{atom}});

    Eigen::VectorXd g12(2), g21(2);
    g12 << -0.1, -0.05;
    g21 << 0.08, 0.03;
    model.set_shock(0, 1, PiecewiseConstant<Eigen::VectorXd>(g12));
    model.set_shock(1, 0, PiecewiseConstant<Eigen::VectorXd>(g21));
    return model;
}

struct RandomModelOptions {
    int ell_min = 2, ell_max = 3;
    int m_min = 1, m_max = 2;
    bool regime_independent_rate = false;
    bool with_jumps = true;
    bool with_shocks = true;
    bool time_dependent = true; // allow a second coefficient segment
};

inline MarketModel random_model(std::uint64_t seed, const RandomModelOptions& opt = {}) {
    std::mt19937_64 gen(seed);
    auto unif = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(gen);
    };
    auto unif_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); };

    MarketModel model;
    model.ell = unif_int(opt.ell_min, opt.ell_max);
    model.m = unif_int(opt.m_min, opt.m_max);
    model.n1 = model.m;
    model.horizon = 1.0;

    model.generator = Eigen::MatrixXd::Zero(model.ell, model.ell);
    for (int i = 0; i < model.ell; ++i) {
        double row = 0.0;
        for (int j = 0; j < model.ell; ++j)
            if (j != i) {
                model.generator(i, j) = unif(0.2, 1.2);
                row += model.generator(i, j);
            }
        model.generator(i, i) = -row;
    }
    model.resize_tables();

    auto segment_times = [&]() {
        std::vector<double> t{0.0};
        if (opt.time_dependent && unif(0.0, 1.0) < 0.5) t.push_back(unif(0.3, 0.7));
        return t;
    };
    auto random_vector = [&](double lo, double hi) {
        Eigen::VectorXd v(model.m);
        for (int k = 0; k < model.m; ++k) v[k] = unif(lo, hi);
        return v;
    };

    std::vector<double> shared_rate_times = segment_times();
    std::vector<double> shared_rate_values;
    for (std::size_t s = 0; s < shared_rate_times.size(); ++s)
        shared_rate_values.push_back(unif(0.0, 0.05));

    for (int i = 0; i < model.ell; ++i) {
        if (opt.regime_independent_rate) {
            model.rate[i] = PiecewiseConstant<double>(shared_rate_times, shared_rate_values);
        } else {
            auto times = segment_times();
            std::vector<double> values;
            for (std::size_t s = 0; s < times.size(); ++s) values.push_back(unif(0.0, 0.05));
            model.rate[i] = PiecewiseConstant<double>(times, values);
        }
        {
            auto times = segment_times();
            std::vector<Eigen::VectorXd> values;
            for (std::size_t s = 0; s < times.size(); ++s) values.push_back(random_vector(-0.05, 0.15));
            model.drift[i] = PiecewiseConstant<Eigen::VectorXd>(times, values);
        }
        {
            auto times = segment_times();
            std::vector<Eigen::MatrixXd> values;
            for (std::size_t s = 0; s < times.size(); ++s) {
                Eigen::MatrixXd sig = Eigen::MatrixXd::Zero(model.m, model.n1);
                for (int r = 0; r < model.m; ++r) {
                    sig(r, r) = unif(0.15, 0.3);
                    for (int c = 0; c < r; ++c) sig(r, c) = unif(-0.05, 0.05);
                }
                values.push_back(sig);
            }
            model.vol[i] = PiecewiseConstant<Eigen::MatrixXd>(times, values);
        }
    }

    if (opt.with_jumps && unif(0.0, 1.0) < 0.8) {
        int n_comp = unif_int(1, 2);
        for (int c = 0; c < n_comp; ++c) {
            JumpComponent comp;
            int n_atoms = unif_int(1, 2);
            for (int a = 0; a < n_atoms; ++a) {
                JumpAtom atom;
                atom.weight = unif(0.2, 2.0);
                for (int i = 0; i < model.ell; ++i)
                    atom.loading.push_back(PiecewiseConstant<Eigen::VectorXd>(random_vector(-0.08, 0.08)));
                comp.atoms.push_back(std::move(atom));
            }
            model.jump_components.push_back(std::move(comp));
        }
    }

    if (opt.with_shocks)
        for (int i = 0; i < model.ell; ++i)
            for (int j = 0; j < model.ell; ++j) {
                if (i == j || unif(0.0, 1.0) > 0.8) continue;
                auto times = segment_times();
                std::vector<Eigen::VectorXd> values;
                for (std::size_t s = 0; s < times.size(); ++s) values.push_back(random_vector(-0.15, 0.15));
                model.set_shock(i, j, PiecewiseConstant<Eigen::VectorXd>(times, values));
            }

    return model;
}

} // namespace regime_mv::testing

#endif
