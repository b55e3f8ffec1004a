#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "qstruct/structure.hpp"

using namespace qstruct;

namespace {
Eigen::Matrix2d mat2(double a, double b, double c, double d) {
    Eigen::Matrix2d m;
    m << a, b, c, d;
    return m;
}
}  // namespace

TEST_CASE("make_map: identity") {
    const auto m = make_map(Eigen::MatrixXd::Identity(2, 2));
    CHECK((m.coord_matrix - Eigen::Matrix2d::Identity()).norm() == 0.0);
    CHECK((m.momentum_matrix - Eigen::Matrix2d::Identity()).norm() == 0.0);
}

TEST_CASE("make_map: momentum matrix is the inverse transpose") {
    const auto m = make_map(mat2(0.5, 0.5, 1.0, -1.0));
    const Eigen::Matrix2d expected = mat2(1.0, 1.0, 0.5, -0.5);
    CHECK((m.momentum_matrix - expected).cwiseAbs().maxCoeff() < 1e-14);

    // Canonical brackets via the finite-difference Poisson oracle.
    std::mt19937_64 eng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd q(2), p(2);
    for (int i = 0; i < 2; ++i) {
        q[i] = u(eng);
        p[i] = u(eng);
    }
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            auto xi = [&](const Eigen::VectorXd& qq, const Eigen::VectorXd&) {
                return m.coord_matrix.row(i).dot(qq);
            };
            auto pi = [&](const Eigen::VectorXd&, const Eigen::VectorXd& pp) {
                return m.momentum_matrix.row(j).dot(pp);
            };
            const double bracket = oracles::poisson_bracket_fd(xi, pi, q, p);
            CHECK(std::abs(bracket - (i == j ? 1.0 : 0.0)) < 1e-9);
        }
}

TEST_CASE("make_map: rank-deficient matrix rejected") {
    CHECK_THROWS_AS(make_map(mat2(1.0, 1.0, 2.0, 2.0)), SingularMatrix);
}

TEST_CASE("make_map: non-square and non-finite rejected") {
    Eigen::MatrixXd rect(2, 3);
    rect.setZero();
    CHECK_THROWS_AS(make_map(rect), DimensionMismatch);
    CHECK_THROWS_AS(make_map(mat2(1.0, 0.0, 0.0, std::nan(""))), ValidationError);
}

TEST_CASE("cm_relative_map: coefficients") {
    const auto equal = cm_relative_map(1.0, 1.0);
    CHECK((equal.coord_matrix - mat2(0.5, 0.5, 1.0, -1.0)).cwiseAbs().maxCoeff() == 0.0);

    const auto hydrogen = cm_relative_map(1.0, 1836.0);
    CHECK(hydrogen.coord_matrix(0, 0) == doctest::Approx(1.0 / 1837.0).epsilon(1e-15));
    CHECK(hydrogen.coord_matrix(0, 1) == doctest::Approx(1836.0 / 1837.0).epsilon(1e-15));
    CHECK(hydrogen.coord_matrix(1, 0) == 1.0);
    CHECK(hydrogen.coord_matrix(1, 1) == -1.0);
    CHECK(hydrogen.label_in_joined() == "e+p");
    CHECK(hydrogen.label_out_joined() == "CM+R");

    CHECK_THROWS_AS(cm_relative_map(1.0, -1.0), NonpositiveMass);
    CHECK_THROWS_AS(cm_relative_map(0.0, 1.0), NonpositiveMass);
}

TEST_CASE("compose and invert") {
    const auto m = make_map(mat2(0.5, 0.5, 1.0, -1.0));
    const auto id = compose(m, invert(m));
    CHECK((id.coord_matrix - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-14);

    const auto left_id = compose(identity_map(2), m);
    CHECK((left_id.coord_matrix - m.coord_matrix).cwiseAbs().maxCoeff() == 0.0);

    const auto swap = make_map(mat2(0.0, 1.0, 1.0, 0.0));
    const auto swapped = compose(cm_relative_map(1.0, 1.0), swap);
    CHECK((swapped.coord_matrix - mat2(0.5, 0.5, -1.0, 1.0)).cwiseAbs().maxCoeff() < 1e-15);

    CHECK_THROWS_AS(compose(m, identity_map(3)), DimensionMismatch);
}

TEST_CASE("jacobian_abs") {
    CHECK(jacobian_abs(identity_map(2)) == 1.0);
    CHECK(jacobian_abs(make_map(mat2(2.0, 0.0, 0.0, 3.0))) == doctest::Approx(6.0));
    std::mt19937_64 eng(3);
    std::uniform_real_distribution<double> mass(0.1, 2000.0);
    for (int i = 0; i < 50; ++i)
        CHECK(jacobian_abs(cm_relative_map(mass(eng), mass(eng))) ==
              doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("group laws and canonical invariant on random matrices") {
    std::mt19937_64 eng(12345);
    for (int dim : {2, 3}) {
        for (int rep = 0; rep < 500; ++rep) {
            const auto a = make_map(oracles::random_well_conditioned(dim, eng));
            const auto b = make_map(oracles::random_well_conditioned(dim, eng));
            const auto c = make_map(oracles::random_well_conditioned(dim, eng));

            // associativity
            const auto ab_c = compose(compose(a, b), c);
            const auto a_bc = compose(a, compose(b, c));
            REQUIRE((ab_c.coord_matrix - a_bc.coord_matrix).cwiseAbs().maxCoeff() < 1e-12);

            // identity is neutral
            const auto ia = compose(identity_map(dim), a);
            REQUIRE((ia.coord_matrix - a.coord_matrix).cwiseAbs().maxCoeff() == 0.0);

            // invert/compose consistency
            const auto inv_ab = invert(compose(a, b));
            const auto b_inv_a_inv = compose(invert(b), invert(a));
            REQUIRE((inv_ab.coord_matrix - b_inv_a_inv.coord_matrix).cwiseAbs().maxCoeff() <
                    1e-12);

            // canonical pairs preserved
            REQUIRE(((ab_c.coord_matrix * ab_c.momentum_matrix.transpose()) -
                     Eigen::MatrixXd::Identity(dim, dim))
                        .cwiseAbs()
                        .maxCoeff() < 1e-12);

            // double inversion round trip
            REQUIRE((invert(invert(a)).coord_matrix - a.coord_matrix).cwiseAbs().maxCoeff() <
                    1e-12);
        }
    }
}

TEST_CASE("json round trip") {
    const auto m = cm_relative_map(1.0, 1836.0);
    const auto back = map_from_json(map_to_json(m));
    CHECK((back.coord_matrix - m.coord_matrix).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.labels_in == m.labels_in);
    CHECK(back.labels_out == m.labels_out);
    CHECK_THROWS_AS(map_from_json("{not json"), ParseError);
}
