#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dfl/gbrbm.hpp"
#include "support/oracles.hpp"

using namespace dfl;

namespace {

GbRbm random_binary_rbm(std::size_t d, std::size_t k, RngStream& rng, double scale = 1.0) {
    GbRbm m = make_gbrbm(d, k, VisibleMode::binary, rng);
    for (double& w : m.weights.data) {
        w = sample_gaussian(0.0, scale * scale, rng);
    }
    for (double& b : m.hidden_bias) {
        b = sample_gaussian(0.0, scale * scale, rng);
    }
    for (double& c : m.visible_bias) {
        c = sample_gaussian(0.0, scale * scale, rng);
    }
    return m;
}

}  // namespace

TEST_CASE("binary energy hand cases") {
    RngStream rng(1);
    GbRbm m = make_gbrbm(1, 1, VisibleMode::binary, rng);
    m.weights(0, 0) = 2.0;
    m.hidden_bias[0] = 0.5;
    m.visible_bias[0] = -1.0;

    CHECK(energy_binary(m, std::vector<double>{0.0}, std::vector<double>{0.0}) == 0.0);
    CHECK(energy_binary(m, std::vector<double>{1.0}, std::vector<double>{1.0}) ==
          doctest::Approx(-1.5).epsilon(1e-15));

    GbRbm m3 = random_binary_rbm(3, 2, rng);
    const std::vector<double> v{1.0, 0.0, 1.0}, h0{0.0, 0.0};
    CHECK(energy_binary(m3, v, h0) ==
          doctest::Approx(-(m3.visible_bias[0] + m3.visible_bias[2])).epsilon(1e-12));
    CHECK_THROWS_AS(energy_binary(m3, std::vector<double>{1.0}, h0),
                    std::invalid_argument);
}

TEST_CASE("gaussian energy hand cases") {
    RngStream rng(2);
    GbRbm m = make_gbrbm(1, 1, VisibleMode::gaussian, rng);
    m.weights(0, 0) = 1.0;
    m.hidden_bias[0] = 0.0;
    m.visible_bias[0] = 0.0;
    CHECK(energy_gaussian(m, std::vector<double>{0.0}, std::vector<double>{0.0}) == 0.0);
    CHECK(energy_gaussian(m, std::vector<double>{2.0}, std::vector<double>{1.0}) ==
          doctest::Approx(0.0).epsilon(1e-15));

    GbRbm m2 = make_gbrbm(3, 2, VisibleMode::gaussian, rng);
    for (double& c : m2.visible_bias) {
        c = 0.0;
    }
    const std::vector<double> v{1.0, -2.0, 0.5}, h0{0.0, 0.0};
    CHECK(energy_gaussian(m2, v, h0) ==
          doctest::Approx(0.5 * (1.0 + 4.0 + 0.25)).epsilon(1e-12));
}

TEST_CASE("hidden conditional fixed points") {
    RngStream rng(3);
    GbRbm zero = make_gbrbm(4, 3, VisibleMode::binary, rng);
    for (double& w : zero.weights.data) {
        w = 0.0;
    }
    const auto p = prob_h_given_v(zero, std::vector<double>{1.0, 0.0, 1.0, 1.0});
    for (double x : p) {
        CHECK(x == 0.5);
    }

    GbRbm one = make_gbrbm(1, 1, VisibleMode::binary, rng);
    one.weights(0, 0) = std::log(3.0);
    one.hidden_bias[0] = 0.0;
    CHECK(prob_h_given_v(one, std::vector<double>{1.0})[0] ==
          doctest::Approx(0.75).epsilon(1e-13));
}

TEST_CASE("visible conditional fixed points") {
    RngStream rng(4);
    GbRbm zero = make_gbrbm(2, 2, VisibleMode::binary, rng);
    for (double& w : zero.weights.data) {
        w = 0.0;
    }
    for (double x : prob_v_given_h(zero, std::vector<double>{0.0, 1.0})) {
        CHECK(x == 0.5);
    }

    GbRbm g = make_gbrbm(3, 2, VisibleMode::gaussian, rng);
    g.visible_bias = {0.5, -1.0, 2.0};
    const auto mean = prob_v_given_h(g, std::vector<double>{0.0, 0.0});
    CHECK(mean == g.visible_bias);
}

TEST_CASE("conditionals match the enumerated joint") {
    RngStream rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const GbRbm m = random_binary_rbm(3, 2, rng);
        const auto joint = joint_bruteforce(m);

        for (std::size_t v_bits = 0; v_bits < 8; ++v_bits) {
            std::vector<double> v(3);
            for (std::size_t i = 0; i < 3; ++i) {
                v[i] = static_cast<double>((v_bits >> i) & 1u);
            }
            const auto p = prob_h_given_v(m, v);
            for (std::size_t j = 0; j < 2; ++j) {
                const double oracle =
                    testing::hidden_conditional_from_joint(m, joint, v, j);
                CHECK(std::fabs(p[j] - oracle) < 1e-10);
            }
        }
        for (std::size_t h_bits = 0; h_bits < 4; ++h_bits) {
            std::vector<double> h(2);
            for (std::size_t j = 0; j < 2; ++j) {
                h[j] = static_cast<double>((h_bits >> j) & 1u);
            }
            const auto p = prob_v_given_h(m, h);
            for (std::size_t i = 0; i < 3; ++i) {
                const double oracle =
                    testing::visible_conditional_from_joint(m, joint, h, i);
                CHECK(std::fabs(p[i] - oracle) < 1e-10);
            }
        }
    }
}

TEST_CASE("energy difference identity") {
    RngStream rng(6);
    const GbRbm m = random_binary_rbm(4, 3, rng);
    const std::vector<double> v{1.0, 0.0, 1.0, 1.0};
    const auto p = prob_h_given_v(m, v);
    for (std::size_t j = 0; j < 3; ++j) {
        std::vector<double> h_on{1.0, 0.0, 1.0};  // arbitrary completion
        std::vector<double> h_off = h_on;
        h_on[j] = 1.0;
        h_off[j] = 0.0;
        const double log_odds = std::log(p[j]) - std::log(1.0 - p[j]);
        const double energy_gap =
            -(energy_binary(m, v, h_on) - energy_binary(m, v, h_off));
        CHECK(std::fabs(log_odds - energy_gap) < 1e-10);
    }
}

TEST_CASE("joint table is a distribution and reproduces uniform case") {
    RngStream rng(7);
    GbRbm m = make_gbrbm(1, 1, VisibleMode::binary, rng);
    m.weights(0, 0) = 0.0;
    const auto joint = joint_bruteforce(m);
    REQUIRE(joint.size() == 4);
    for (double p : joint) {
        CHECK(p == doctest::Approx(0.25).epsilon(1e-13));
    }

    const GbRbm big = random_binary_rbm(4, 4, rng);
    const auto table = joint_bruteforce(big);
    double sum = 0.0;
    for (double p : table) {
        CHECK(p >= 0.0);
        sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

    GbRbm huge = make_gbrbm(15, 6, VisibleMode::binary, rng);
    CHECK_THROWS_AS(joint_bruteforce(huge), std::invalid_argument);
}

TEST_CASE("cd_update zero learning rate and determinism") {
    RngStream rng(8);
    const GbRbm m = random_binary_rbm(4, 2, rng, 0.3);
    const std::vector<std::vector<double>> batch{{1.0, 0.0, 1.0, 0.0},
                                                 {0.0, 1.0, 1.0, 1.0}};
    RngStream r1(77);
    const GbRbmDeltas zero = cd_update(m, batch, 1, 0.0, r1);
    for (double w : zero.weights.data) {
        CHECK(w == 0.0);
    }
    for (double b : zero.hidden_bias) {
        CHECK(b == 0.0);
    }

    RngStream r2(77), r3(77);
    const GbRbmDeltas a = cd_update(m, batch, 2, 0.1, r2);
    const GbRbmDeltas b = cd_update(m, batch, 2, 0.1, r3);
    CHECK(a.weights.data == b.weights.data);
    CHECK(a.hidden_bias == b.hidden_bias);
    CHECK(a.visible_bias == b.visible_bias);
}

TEST_CASE("cd_update expected deltas vanish at equilibrium") {
    RngStream rng(9);
    const GbRbm m = random_binary_rbm(3, 2, rng, 0.7);
    const testing::RbmVisibleSampler sampler(m);

    const int n_batches = 10000;
    const std::size_t batch_size = 4;
    const std::size_t n_params = m.weights.data.size();
    std::vector<double> sum(n_params, 0.0), sumsq(n_params, 0.0);
    RngStream draw(1234);
    for (int bi = 0; bi < n_batches; ++bi) {
        std::vector<std::vector<double>> batch;
        for (std::size_t s = 0; s < batch_size; ++s) {
            batch.push_back(sampler.draw(draw));
        }
        const GbRbmDeltas d = cd_update(m, batch, 1, 1.0, draw);
        for (std::size_t i = 0; i < n_params; ++i) {
            sum[i] += d.weights.data[i];
            sumsq[i] += d.weights.data[i] * d.weights.data[i];
        }
    }
    for (std::size_t i = 0; i < n_params; ++i) {
        const double mean = sum[i] / n_batches;
        const double var = sumsq[i] / n_batches - mean * mean;
        const double stderr_mean = std::sqrt(var / n_batches);
        CHECK(std::fabs(mean) < 3.0 * std::max(stderr_mean, 1e-12));
    }
}

TEST_CASE("cd training reduces reconstruction error") {
    RngStream rng(10);
    GbRbm m = make_gbrbm(6, 4, VisibleMode::binary, rng);
    const std::vector<std::vector<double>> batch{
        {1.0, 1.0, 0.0, 0.0, 1.0, 0.0}, {1.0, 1.0, 0.0, 0.0, 1.0, 0.0},
        {1.0, 1.0, 0.0, 0.0, 1.0, 0.0}, {1.0, 1.0, 0.0, 0.0, 1.0, 0.0}};

    auto recon_error = [&](const GbRbm& model) {
        double err = 0.0;
        for (const auto& v : batch) {
            const auto ph = prob_h_given_v(model, v);
            const auto pv = prob_v_given_h(model, ph);
            for (std::size_t i = 0; i < v.size(); ++i) {
                err += (pv[i] - v[i]) * (pv[i] - v[i]);
            }
        }
        return err;
    };

    const double initial = recon_error(m);
    RngStream train(55);
    for (int step = 0; step < 200; ++step) {
        apply_deltas(m, cd_update(m, batch, 1, 0.2, train));
    }
    CHECK(recon_error(m) < 0.5 * initial);
}
