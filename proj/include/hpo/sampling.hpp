#ifndef HPO_SAMPLING_HPP
#define HPO_SAMPLING_HPP

#include <vector>

#include "hpo/problem.hpp"

namespace hpo {

/// Radical-inverse (van der Corput) value of index i in the given base.
double radical_inverse(int base, unsigned long long index);

/// Point of the Halton sequence in [0,1)^dim (prime bases 2, 3, 5, ...).
/// Deterministic; index 0 is the origin, callers usually start at 1.
Eigen::VectorXd halton_point(unsigned long long index, int dim);

/// Halton point mapped affinely into a box.
Eigen::VectorXd halton_in_box(unsigned long long index, const Eigen::VectorXd& lower,
                              const Eigen::VectorXd& upper);

/// n points from lo to hi inclusive, log or linear spacing, endpoints
/// pinned exactly to lo and hi.
std::vector<double> log_spaced(double lo, double hi, int n);
std::vector<double> linear_spaced(double lo, double hi, int n);

/// Grid over the domain box: the full 1-D grid for p = 1, the box
/// diagonal for p > 1 (one shared scale parameter per grid point).
std::vector<Eigen::VectorXd> domain_grid(const HyperparameterDomain& d, int n, bool log_scale);

}  // namespace hpo

#endif
