#include "qstruct/classical.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <nlohmann/json.hpp>
#include <numbers>

namespace qstruct {

void GaussianComponent::validate() const {
    if (std::abs(cov(0, 1) - cov(1, 0)) > 1e-12 * (1.0 + cov.cwiseAbs().maxCoeff()))
        throw ValidationError("GaussianComponent: covariance not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw ValidationError("GaussianComponent: covariance not positive definite");
}

double GaussianComponent::pdf(double x, double y) const {
    const double det = cov.determinant();
    const double dx = x - mean[0], dy = y - mean[1];
    const double q = (cov(1, 1) * dx * dx - 2.0 * cov(0, 1) * dx * dy + cov(0, 0) * dy * dy) / det;
    return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
}

double GaussianComponent::marginal_pdf(int axis, double x) const {
    const double v = cov(axis, axis);
    const double d = x - mean[axis];
    return std::exp(-0.5 * d * d / v) / std::sqrt(2.0 * std::numbers::pi * v);
}

void MixtureDensity::validate() const {
    if (weights.size() != components.size() || weights.empty())
        throw ValidationError("MixtureDensity: weights and components must match and be nonempty");
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw ValidationError("MixtureDensity: negative weight");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("MixtureDensity: weights must sum to 1");
    for (const auto& c : components) c.validate();
}

double MixtureDensity::pdf(double x, double y) const {
    double acc = 0.0;
    for (size_t i = 0; i < components.size(); ++i) acc += weights[i] * components[i].pdf(x, y);
    return acc;
}

double MixtureDensity::marginal_pdf(int axis, double x) const {
    double acc = 0.0;
    for (size_t i = 0; i < components.size(); ++i)
        acc += weights[i] * components[i].marginal_pdf(axis, x);
    return acc;
}

MixtureDensity product_density(Gaussian1D f1, Gaussian1D f2, std::string label) {
    if (!(f1.var > 0.0) || !(f2.var > 0.0))
        throw ValidationError("product_density: variances must be positive");
    MixtureDensity d;
    d.weights = {1.0};
    GaussianComponent c;
    c.mean << f1.mean, f2.mean;
    c.cov << f1.var, 0.0, 0.0, f2.var;
    d.components = {c};
    d.coordinate_label = std::move(label);
    return d;
}

MixtureDensity transform_density(const MixtureDensity& d, const LinearStructureMap& map) {
    if (map.dim() != 2) throw DimensionMismatch("transform_density: map must be 2x2");
    d.validate();
    MixtureDensity out = d;
    const Eigen::Matrix2d A = map.coord_matrix;
    for (auto& c : out.components) {
        c.mean = A * c.mean;
        c.cov = A * c.cov * A.transpose();
    }
    out.coordinate_label = map.label_out_joined();
    return out;
}

namespace {

double closed_form_mi(const GaussianComponent& c) {
    const double r2 = c.cov(0, 1) * c.cov(0, 1) / (c.cov(0, 0) * c.cov(1, 1));
    return -0.5 * std::log1p(-r2);
}

// Adaptive 2-D Simpson rule on rectangles: compare the 3x3 estimate against
// the four-quadrant refinement and recurse where the difference is large.
struct AdaptiveSimpson {
    const std::function<double(double, double)>& f;
    int max_depth;

    double patch(double x0, double x1, double y0, double y1) const {
        const double xs[3] = {x0, 0.5 * (x0 + x1), x1};
        const double ys[3] = {y0, 0.5 * (y0 + y1), y1};
        const double wx[3] = {1.0, 4.0, 1.0};
        double acc = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) acc += wx[i] * wx[j] * f(xs[i], ys[j]);
        return acc * (x1 - x0) * (y1 - y0) / 36.0;
    }

    double recurse(double x0, double x1, double y0, double y1, double whole, double tol,
                   int depth) {
        const double xm = 0.5 * (x0 + x1), ym = 0.5 * (y0 + y1);
        const double q1 = patch(x0, xm, y0, ym), q2 = patch(xm, x1, y0, ym),
                     q3 = patch(x0, xm, ym, y1), q4 = patch(xm, x1, ym, y1);
        const double refined = q1 + q2 + q3 + q4;
        const double err = (refined - whole) / 15.0;
        if (std::abs(err) <= tol) return refined + err;
        if (depth >= max_depth)
            throw QuadratureNotConverged("adaptive quadrature: depth limit reached, error " +
                                         std::to_string(std::abs(err)));
        const double t = tol / 4.0;
        return recurse(x0, xm, y0, ym, q1, t, depth + 1) +
               recurse(xm, x1, y0, ym, q2, t, depth + 1) +
               recurse(x0, xm, ym, y1, q3, t, depth + 1) +
               recurse(xm, x1, ym, y1, q4, t, depth + 1);
    }

    double integrate(double x0, double x1, double y0, double y1, double tol) {
        return recurse(x0, x1, y0, y1, patch(x0, x1, y0, y1), tol, 0);
    }
};

std::array<double, 4> support_box(const MixtureDensity& d, double nsigma) {
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& c : d.components) {
        const double sx = nsigma * std::sqrt(c.cov(0, 0));
        const double sy = nsigma * std::sqrt(c.cov(1, 1));
        x0 = std::min(x0, c.mean[0] - sx);
        x1 = std::max(x1, c.mean[0] + sx);
        y0 = std::min(y0, c.mean[1] - sy);
        y1 = std::max(y1, c.mean[1] + sy);
    }
    return {x0, x1, y0, y1};
}

double integrate_over_support(const MixtureDensity& d,
                              const std::function<double(double, double)>& f, double abs_tol) {
    const auto box = support_box(d, 8.5);
    AdaptiveSimpson quad{f, 24};
    return quad.integrate(box[0], box[1], box[2], box[3], abs_tol);
}

}  // namespace

double mutual_information_quadrature(const MixtureDensity& d, double abs_tol) {
    d.validate();
    const std::function<double(double, double)> integrand = [&d](double x, double y) {
        const double mu = d.pdf(x, y);
        if (mu < 1e-300) return 0.0;
        return mu * (std::log(mu) - std::log(d.marginal_pdf(0, x)) - std::log(d.marginal_pdf(1, y)));
    };
    return integrate_over_support(d, integrand, abs_tol);
}

double mutual_information(const MixtureDensity& d) {
    d.validate();
    if (d.components.size() == 1) return closed_form_mi(d.components[0]);
    return mutual_information_quadrature(d, 1e-5);
}

double factorization_gap(const MixtureDensity& d, double abs_tol) {
    d.validate();
    const std::function<double(double, double)> integrand = [&d](double x, double y) {
        return std::abs(d.pdf(x, y) - d.marginal_pdf(0, x) * d.marginal_pdf(1, y));
    };
    return integrate_over_support(d, integrand, abs_tol);
}

std::string density_to_json(const MixtureDensity& d) {
    nlohmann::ordered_json j;
    j["weights"] = d.weights;
    auto comps = nlohmann::ordered_json::array();
    for (const auto& c : d.components) {
        nlohmann::ordered_json cj;
        cj["mean"] = {c.mean[0], c.mean[1]};
        cj["cov"] = {{c.cov(0, 0), c.cov(0, 1)}, {c.cov(1, 0), c.cov(1, 1)}};
        comps.push_back(cj);
    }
    j["components"] = comps;
    j["coordinate_label"] = d.coordinate_label;
    return j.dump(2);
}

MixtureDensity density_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("density_from_json: ") + e.what());
    }
    MixtureDensity d;
    d.weights = j.at("weights").get<std::vector<double>>();
    for (const auto& cj : j.at("components")) {
        GaussianComponent c;
        c.mean << cj.at("mean")[0].get<double>(), cj.at("mean")[1].get<double>();
        c.cov << cj.at("cov")[0][0].get<double>(), cj.at("cov")[0][1].get<double>(),
            cj.at("cov")[1][0].get<double>(), cj.at("cov")[1][1].get<double>();
        d.components.push_back(c);
    }
    d.coordinate_label = j.value("coordinate_label", "e+p");
    d.validate();
    return d;
}

}  // namespace qstruct
