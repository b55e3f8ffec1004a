#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "qstruct/errors.hpp"

namespace qstruct {

// Invertible linear change of coordinates between two subsystem
// decompositions, xi = C * q. Conjugate momenta transform with the
// inverse-transpose, which is exactly the condition that keeps the
// canonical brackets {xi_i, pi_j} = delta_ij intact.
struct LinearStructureMap {
    Eigen::MatrixXd coord_matrix;
    Eigen::MatrixXd momentum_matrix;  // always inv(coord_matrix)^T
    std::vector<std::string> labels_in;
    std::vector<std::string> labels_out;

    int dim() const { return static_cast<int>(coord_matrix.rows()); }
    std::string label_in_joined() const;
    std::string label_out_joined() const;

    Eigen::VectorXd apply(const Eigen::VectorXd& q) const { return coord_matrix * q; }
};

LinearStructureMap make_map(const Eigen::MatrixXd& coord_matrix,
                            std::vector<std::string> labels_in = {},
                            std::vector<std::string> labels_out = {});

// Center-of-mass + relative coordinates for a two-body system (the e+p ->
// CM+R transition). Unit Jacobian for any positive mass pair.
LinearStructureMap cm_relative_map(double m1, double m2);

LinearStructureMap identity_map(int n);
LinearStructureMap invert(const LinearStructureMap& m);
LinearStructureMap compose(const LinearStructureMap& a, const LinearStructureMap& b);
double jacobian_abs(const LinearStructureMap& m);

std::string map_to_json(const LinearStructureMap& m);
LinearStructureMap map_from_json(const std::string& text);

}  // namespace qstruct
