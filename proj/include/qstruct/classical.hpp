#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "qstruct/structure.hpp"

namespace qstruct {

struct Gaussian1D {
    double mean = 0.0;
    double var = 1.0;
};

struct GaussianComponent {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();

    void validate() const;
    double pdf(double x, double y) const;
    double marginal_pdf(int axis, double x) const;
};

// Finite mixture sum_i p_i N(mean_i, cov_i) over a 2-D configuration space.
// Closed under invertible linear coordinate changes, which keeps every
// factorizability statement in this family oracle-checkable.
struct MixtureDensity {
    std::vector<double> weights;
    std::vector<GaussianComponent> components;
    std::string coordinate_label = "e+p";

    void validate() const;
    double pdf(double x, double y) const;
    double marginal_pdf(int axis, double x) const;
};

MixtureDensity product_density(Gaussian1D f1, Gaussian1D f2, std::string label = "e+p");

// Pushforward: mean -> A mean, cov -> A cov A^T per component, weights kept.
MixtureDensity transform_density(const MixtureDensity& d, const LinearStructureMap& map);

// Mutual information between the two coordinates, in nats. Single Gaussian
// components use the closed form -1/2 ln(1 - r^2); mixtures fall back to
// deterministic adaptive quadrature.
double mutual_information(const MixtureDensity& d);

// Quadrature route, usable for any mixture (also the oracle check for the
// closed form). Absolute error <= abs_tol or QuadratureNotConverged.
double mutual_information_quadrature(const MixtureDensity& d, double abs_tol = 1e-5);

// L1 distance between the density and the product of its own marginals;
// zero exactly for factorizable densities.
double factorization_gap(const MixtureDensity& d, double abs_tol = 5e-7);

std::string density_to_json(const MixtureDensity& d);
MixtureDensity density_from_json(const std::string& text);

}  // namespace qstruct
