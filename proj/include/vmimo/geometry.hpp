// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace vmimo {

using Point = Eigen::Vector2d;

struct Field {
    double width = 100.0;  // m
    double height = 100.0; // m

    double area() const { return width * height; }
    bool contains(const Point &p) const {
        return p.x() >= 0.0 && p.x() <= width && p.y() >= 0.0 && p.y() <= height;
    }
};

struct Deployment {
    std::vector<Point> ue_positions;
    std::vector<Point> ap_positions;
    std::vector<Point> aggressor_positions;
    std::vector<Point> aggressor_ap_positions;
};

inline double distance(const Point &p, const Point &q) { return (p - q).norm(); }

/// Homogeneous Poisson point process on the rectangle: a Poisson count with
/// mean density * area, then i.i.d. uniform placement.
template <typename Rng>
std::vector<Point> sample_ppp(double density, const Field &field, Rng &rng) {
    if (!(density >= 0.0))
        throw std::invalid_argument("sample_ppp: density must be non-negative");
    if (!(field.width > 0.0 && field.height > 0.0))
        throw std::invalid_argument("sample_ppp: field must have positive extent");
    std::vector<Point> points;
    const double mean = density * field.area();
    if (mean == 0.0)
        return points;
    std::poisson_distribution<long> count(mean);
    const long n = count(rng);
    std::uniform_real_distribution<double> ux(0.0, field.width), uy(0.0, field.height);
    points.reserve(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        const double x = ux(rng);
        points.emplace_back(x, uy(rng));
    }
    return points;
}

/// Poisson point process on a disk of the given radius centred at `centre`.
template <typename Rng>
std::vector<Point> sample_ppp_disk(double density, const Point &centre, double radius, Rng &rng) {
    if (!(density >= 0.0) || !(radius >= 0.0))
        throw std::invalid_argument("sample_ppp_disk: density and radius must be non-negative");
    std::vector<Point> points;
    const double mean = density * 3.14159265358979323846 * radius * radius;
    if (mean == 0.0)
        return points;
    std::poisson_distribution<long> count(mean);
    const long n = count(rng);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    points.reserve(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        const double r = radius * std::sqrt(u01(rng));
        const double phi = 2.0 * 3.14159265358979323846 * u01(rng);
        points.emplace_back(centre.x() + r * std::cos(phi), centre.y() + r * std::sin(phi));
    }
    return points;
}

template <typename Rng>
std::vector<Point> sample_uniform(std::size_t count, const Field &field, Rng &rng) {
    std::uniform_real_distribution<double> ux(0.0, field.width), uy(0.0, field.height);
    std::vector<Point> points;
    points.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double x = ux(rng);
        points.emplace_back(x, uy(rng));
    }
    return points;
}

} // namespace vmimo
