#include "hpo/sampling.hpp"

#include <cmath>

#include "hpo/errors.hpp"

namespace hpo {

namespace {
constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
}

double radical_inverse(int base, unsigned long long index) {
  double inv = 1.0 / base;
  double scale = inv;
  double value = 0.0;
  while (index > 0) {
    value += static_cast<double>(index % base) * scale;
    index /= base;
    scale *= inv;
  }
  return value;
}

Eigen::VectorXd halton_point(unsigned long long index, int dim) {
  if (dim < 1 || dim > static_cast<int>(std::size(kPrimes))) {
    throw ValidationError("halton dimension out of the supported range");
  }
  Eigen::VectorXd out(dim);
  for (int j = 0; j < dim; ++j) out(j) = radical_inverse(kPrimes[j], index);
  return out;
}

Eigen::VectorXd halton_in_box(unsigned long long index, const Eigen::VectorXd& lower,
                              const Eigen::VectorXd& upper) {
  const Eigen::VectorXd u = halton_point(index, static_cast<int>(lower.size()));
  return lower + u.cwiseProduct(upper - lower);
}

std::vector<double> log_spaced(double lo, double hi, int n) {
  if (n < 2) throw ValidationError("grids need at least 2 points");
  if (!(lo > 0.0 && hi > lo)) throw ValidationError("log grid needs 0 < lo < hi");
  std::vector<double> out(n);
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int k = 0; k < n; ++k) {
    out[k] = std::exp(llo + (lhi - llo) * static_cast<double>(k) / (n - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<double> linear_spaced(double lo, double hi, int n) {
  if (n < 2) throw ValidationError("grids need at least 2 points");
  if (!(hi > lo)) throw ValidationError("linear grid needs lo < hi");
  std::vector<double> out(n);
  for (int k = 0; k < n; ++k) {
    out[k] = lo + (hi - lo) * static_cast<double>(k) / (n - 1);
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<Eigen::VectorXd> domain_grid(const HyperparameterDomain& d, int n, bool log_scale) {
  std::vector<Eigen::VectorXd> grid;
  grid.reserve(n);
  if (d.dim() == 1) {
    const auto ticks = log_scale ? log_spaced(d.lower(0), d.upper(0), n)
                                 : linear_spaced(d.lower(0), d.upper(0), n);
    for (double t : ticks) grid.push_back(Eigen::VectorXd::Constant(1, t));
    return grid;
  }
  // Diagonal walk for p > 1: one shared scale parameter, mapped per
  // coordinate so endpoints land on the box corners exactly.
  const auto s = linear_spaced(0.0, 1.0, n);
  for (double t : s) {
    Eigen::VectorXd point(d.dim());
    for (Eigen::Index i = 0; i < d.dim(); ++i) {
      if (log_scale) {
        if (!(d.lower(i) > 0.0)) throw ValidationError("log grid needs positive lower bounds");
        point(i) = std::exp(std::log(d.lower(i)) + t * (std::log(d.upper(i)) - std::log(d.lower(i))));
      } else {
        point(i) = d.lower(i) + t * (d.upper(i) - d.lower(i));
      }
    }
    if (t == 0.0) point = d.lower;
    if (t == 1.0) point = d.upper;
    grid.push_back(point);
  }
  return grid;
}

}  // namespace hpo
