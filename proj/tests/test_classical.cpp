#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "qstruct/classical.hpp"

using namespace qstruct;

namespace {
const double kWorkedPointMI = 0.5 * std::log(9.0 / 8.0);  // -1/2 ln(1 - (1/3)^2)
}

TEST_CASE("product_density: single diagonal component") {
    const auto d = product_density({0.0, 1.0}, {0.0, 1.0});
    REQUIRE(d.weights.size() == 1);
    CHECK(d.weights[0] == 1.0);
    CHECK(d.components[0].cov(0, 0) == 1.0);
    CHECK(d.components[0].cov(1, 1) == 1.0);
    CHECK(d.components[0].cov(0, 1) == 0.0);
    CHECK(mutual_information(d) == 0.0);
    CHECK_THROWS_AS(product_density({0.0, -1.0}, {0.0, 1.0}), ValidationError);
}

TEST_CASE("transform_density: covariance propagation") {
    const auto map = cm_relative_map(1.0, 1.0);

    const auto sym = transform_density(product_density({0.0, 1.0}, {0.0, 1.0}), map);
    CHECK(sym.coordinate_label == "CM+R");
    CHECK(sym.components[0].cov(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(sym.components[0].cov(1, 1) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(std::abs(sym.components[0].cov(0, 1)) < 1e-15);
    CHECK(mutual_information(sym) == doctest::Approx(0.0).epsilon(1e-15));

    const auto asym = transform_density(product_density({0.0, 1.0}, {0.0, 2.0}), map);
    const auto& c = asym.components[0].cov;
    CHECK(c(0, 1) == doctest::Approx(-0.5).epsilon(1e-15));
    const double r = c(0, 1) / std::sqrt(c(0, 0) * c(1, 1));
    CHECK(r == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
    CHECK(mutual_information(asym) == doctest::Approx(kWorkedPointMI).epsilon(1e-12));

    // matches the covariance-propagation oracle entry by entry
    const Eigen::Matrix2d oracle = oracles::propagate_covariance(map.coord_matrix, 1.0, 2.0);
    CHECK((c - oracle).cwiseAbs().maxCoeff() < 1e-15);

    // round trip restores the covariance
    const auto back = transform_density(asym, invert(map));
    CHECK((back.components[0].cov - product_density({0.0, 1.0}, {0.0, 2.0}).components[0].cov)
              .cwiseAbs()
              .maxCoeff() < 1e-12);

    CHECK_THROWS_AS(transform_density(sym, identity_map(3)), DimensionMismatch);
}

TEST_CASE("mutual_information_quadrature agrees with the closed form") {
    const auto map = cm_relative_map(1.0, 1.0);
    const auto product = product_density({0.0, 1.0}, {0.0, 1.0});
    CHECK(std::abs(mutual_information_quadrature(product, 5e-7)) <= 1e-6);

    const auto corr = transform_density(product_density({0.0, 1.0}, {0.0, 2.0}), map);
    const double mi_quad = mutual_information_quadrature(corr, 5e-7);
    CHECK(std::abs(mi_quad - kWorkedPointMI) <= 1e-6);
}

TEST_CASE("mixture of well-separated product components carries label entropy ln 2") {
    MixtureDensity d;
    d.weights = {0.5, 0.5};
    GaussianComponent a, b;
    a.mean << -5.0, -5.0;
    b.mean << 5.0, 5.0;
    d.components = {a, b};
    const double mi = mutual_information(d);
    CHECK(std::abs(mi - std::numbers::ln2) <= 0.01);
}

TEST_CASE("factorization_gap: product, sheared product, rescaling invariance") {
    const auto product = product_density({0.0, 1.0}, {0.0, 1.0});
    CHECK(factorization_gap(product) <= 1e-6);

    const auto map = cm_relative_map(1.0, 1.0);
    const auto sheared = transform_density(product_density({0.0, 1.0}, {0.0, 2.0}), map);
    const double gap = factorization_gap(sheared);
    CHECK(gap > 0.01);

    // invariant under coordinate-wise rescaling
    Eigen::Matrix2d scale;
    scale << 2.0, 0.0, 0.0, 0.25;
    const auto rescaled = transform_density(sheared, make_map(scale));
    CHECK(std::abs(factorization_gap(rescaled) - gap) <= 1e-6);
}

TEST_CASE("correlation relativity: MI vanishes exactly on the m1 s1^2 = m2 s2^2 locus") {
    for (auto [m1, m2] : {std::pair{1.0, 1.0}, std::pair{1.0, 2.0}, std::pair{3.0, 2.0}}) {
        const auto map = cm_relative_map(m1, m2);
        const double sigma1_sq = 1.0;
        const double locus = m1 * sigma1_sq / m2;
        for (double s2 : {0.4, 0.8, locus, 1.5, 2.0}) {
            const auto d = transform_density(product_density({0.0, sigma1_sq}, {0.0, s2}), map);
            const double mi = mutual_information(d);
            if (s2 == locus)
                CHECK(mi <= 1e-15);
            else
                CHECK(mi > 1e-4);
        }
    }
}

TEST_CASE("converse: CM+R product pulled back to e+p is non-factorizable off the locus") {
    const auto map = cm_relative_map(1.0, 1.0);
    const auto g = product_density({0.0, 1.0}, {0.0, 2.0}, "CM+R");
    const auto ep = transform_density(g, invert(map));
    CHECK(ep.coordinate_label == "e+p");
    CHECK(mutual_information(ep) > 1e-3);
    CHECK(factorization_gap(ep) > 0.01);

    // symmetric case: separable in both structures
    const auto g_sym = product_density({0.0, 1.0}, {0.0, 4.0}, "CM+R");  // 4 = var of q1 - q2
    const auto ep_sym = transform_density(g_sym, invert(map));
    (void)ep_sym;
    const auto forward_sym = transform_density(product_density({0.0, 1.0}, {0.0, 1.0}), map);
    CHECK(mutual_information(forward_sym) <= 1e-15);
}

TEST_CASE("mixture MI bounded by max component MI plus weight entropy") {
    const auto map = cm_relative_map(1.0, 1.0);
    const auto comp = transform_density(product_density({0.0, 1.0}, {0.0, 2.0}), map);
    MixtureDensity d;
    d.weights = {0.3, 0.7};
    GaussianComponent a = comp.components[0], b = comp.components[0];
    a.mean << -1.0, 0.5;
    b.mean << 1.5, -0.5;
    d.components = {a, b};
    d.coordinate_label = comp.coordinate_label;

    const double mi = mutual_information(d);
    const double h_weights = -(0.3 * std::log(0.3) + 0.7 * std::log(0.7));
    CHECK(mi <= kWorkedPointMI + h_weights + 1e-4);
    CHECK(mi >= 0.0);
}

TEST_CASE("density JSON round trip and validation") {
    const auto map = cm_relative_map(1.0, 2.0);
    const auto d = transform_density(product_density({0.3, 1.0}, {-0.2, 2.0}), map);
    const auto back = density_from_json(density_to_json(d));
    CHECK(back.coordinate_label == d.coordinate_label);
    CHECK((back.components[0].cov - d.components[0].cov).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.components[0].mean - d.components[0].mean).cwiseAbs().maxCoeff() == 0.0);

    MixtureDensity bad;
    bad.weights = {0.5, 0.6};
    bad.components.resize(2);
    CHECK_THROWS_AS(bad.validate(), ValidationError);

    MixtureDensity neg;
    neg.weights = {1.0};
    GaussianComponent c;
    c.cov << 1.0, 2.0, 2.0, 1.0;  // indefinite
    neg.components = {c};
    CHECK_THROWS_AS(neg.validate(), ValidationError);
}

TEST_CASE("quadrature reports non-convergence on pathological scale mismatch") {
    // a 10^7-sigma support box around a unit-width needle exhausts the
    // refinement depth before the error estimate meets the tolerance
    MixtureDensity d;
    d.weights = {0.5, 0.5};
    GaussianComponent wide, needle;
    wide.cov << 1e14, 0.0, 0.0, 1e14;
    d.components = {wide, needle};
    CHECK_THROWS_AS(mutual_information_quadrature(d, 1e-7), QuadratureNotConverged);
}
