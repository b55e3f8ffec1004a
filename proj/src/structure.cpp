#include "qstruct/structure.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

namespace qstruct {

namespace {

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += "+";
        out += parts[i];
    }
    return out;
}

std::vector<std::string> default_labels(int n, const char* stem) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back(std::string(stem) + std::to_string(i + 1));
    return out;
}

}  // namespace

std::string LinearStructureMap::label_in_joined() const { return join(labels_in); }
std::string LinearStructureMap::label_out_joined() const { return join(labels_out); }

LinearStructureMap make_map(const Eigen::MatrixXd& coord_matrix,
                            std::vector<std::string> labels_in,
                            std::vector<std::string> labels_out) {
    const int n = static_cast<int>(coord_matrix.rows());
    if (coord_matrix.cols() != n || n < 1)
        throw DimensionMismatch("make_map: coordinate matrix must be square");
    if (!coord_matrix.allFinite())
        throw ValidationError("make_map: coordinate matrix has non-finite entries");

    // Scale-relative singularity test: |det| compared against the matrix norm
    // raised to the dimension, so diag(1e-6, 1e-6) is fine but rank-deficient
    // matrices of any scale are rejected.
    const double scale = coord_matrix.norm() / std::sqrt(static_cast<double>(n));
    const double det = coord_matrix.determinant();
    if (std::abs(det) <= 1e-12 * std::max(1.0, std::pow(scale, n)))
        throw SingularMatrix("make_map: |det| = " + std::to_string(std::abs(det)) +
                             " below invertibility threshold");

    LinearStructureMap m;
    m.coord_matrix = coord_matrix;
    m.momentum_matrix = coord_matrix.inverse().transpose();
    m.labels_in = labels_in.empty() ? default_labels(n, "q") : std::move(labels_in);
    m.labels_out = labels_out.empty() ? default_labels(n, "xi") : std::move(labels_out);
    if (static_cast<int>(m.labels_in.size()) != n || static_cast<int>(m.labels_out.size()) != n)
        throw DimensionMismatch("make_map: label count does not match dimension");
    return m;
}

LinearStructureMap cm_relative_map(double m1, double m2) {
    if (!(m1 > 0.0) || !(m2 > 0.0))
        throw NonpositiveMass("cm_relative_map: masses must be positive");
    const double M = m1 + m2;
    Eigen::Matrix2d c;
    c << m1 / M, m2 / M, 1.0, -1.0;
    return make_map(c, {"e", "p"}, {"CM", "R"});
}

LinearStructureMap identity_map(int n) {
    return make_map(Eigen::MatrixXd::Identity(n, n));
}

LinearStructureMap invert(const LinearStructureMap& m) {
    LinearStructureMap out = make_map(m.coord_matrix.inverse().eval());
    out.labels_in = m.labels_out;
    out.labels_out = m.labels_in;
    return out;
}

LinearStructureMap compose(const LinearStructureMap& a, const LinearStructureMap& b) {
    if (a.dim() != b.dim())
        throw DimensionMismatch("compose: maps act on different dimensions");
    LinearStructureMap out = make_map((a.coord_matrix * b.coord_matrix).eval());
    out.labels_in = b.labels_in;
    out.labels_out = a.labels_out;
    return out;
}

double jacobian_abs(const LinearStructureMap& m) {
    return std::abs(m.coord_matrix.determinant());
}

std::string map_to_json(const LinearStructureMap& m) {
    nlohmann::ordered_json j;
    auto rows = nlohmann::json::array();
    for (int r = 0; r < m.dim(); ++r) {
        auto row = nlohmann::json::array();
        for (int c = 0; c < m.dim(); ++c) row.push_back(m.coord_matrix(r, c));
        rows.push_back(row);
    }
    j["coord_matrix"] = rows;
    j["labels_in"] = m.labels_in;
    j["labels_out"] = m.labels_out;
    return j.dump(2);
}

LinearStructureMap map_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("map_from_json: ") + e.what());
    }
    const auto& rows = j.at("coord_matrix");
    const int n = static_cast<int>(rows.size());
    Eigen::MatrixXd c(n, n);
    for (int r = 0; r < n; ++r) {
        if (static_cast<int>(rows[r].size()) != n)
            throw ParseError("map_from_json: ragged coord_matrix");
        for (int k = 0; k < n; ++k) c(r, k) = rows[r][k].get<double>();
    }
    return make_map(c, j.value("labels_in", std::vector<std::string>{}),
                    j.value("labels_out", std::vector<std::string>{}));
}

}  // namespace qstruct
