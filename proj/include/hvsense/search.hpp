// 1D and 2D scalar minimization used by the orientation searches.
#ifndef HVSENSE_SEARCH_HPP
#define HVSENSE_SEARCH_HPP

#include <Eigen/Dense>
#include <functional>

namespace hvsense {

/// Golden-section minimizer over [a, b]; assumes a unimodal objective on the
/// bracket. Returns the midpoint of the final interval.
double golden_section_minimize(const std::function<double(double)>& f,
                               double a, double b, double tol = 1e-10,
                               int max_iter = 200);

/// Nelder-Mead on two variables, started from x0 with the given simplex edge.
Eigen::Vector2d nelder_mead_2d(
    const std::function<double(const Eigen::Vector2d&)>& f,
    const Eigen::Vector2d& x0, double edge, double tol = 1e-12,
    int max_iter = 400);

}  // namespace hvsense

#endif  // HVSENSE_SEARCH_HPP
