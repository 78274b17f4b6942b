#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "selectest/dataset.hpp"
#include "selectest/estimators.hpp"
#include "selectest/grid.hpp"
#include "selectest/kernels.hpp"
#include "selectest/rng.hpp"

namespace selectest::testing {

struct NaiveSup {
  std::vector<double> per_tau;
  double statistic = 0.0;
};

/// Triple loop over tau, boxes and propensity intervals [c_l, c_m), summing
/// the same fixed-point terms as the library.
NaiveSup naive_z1(const Dataset& data, std::span<const QuantileFit> fits,
                  std::span<const double> phat, const GridSpec& grid);

/// Triple loop for the mean statistic with closed intervals [c_l, c_m].
double naive_z1m(const Dataset& data, std::span<const double> mhat, std::span<const double> fhat,
                 std::span<const double> phat, const GridSpec& grid);

/// Direct kernel sums.
double naive_propensity(const Dataset& data, std::size_t i, std::span<const double> h_z,
                        std::span<const double> lambda, bool leave_one_out = false);
NwEstimate naive_nw(const Dataset& data, std::span<const double> x0, std::span<const double> h);
double naive_cond_cdf(const Dataset& data, std::span<const double> uhat,
                      std::span<const double> phat, double p, std::size_t i,
                      std::span<const double> h_x, double h_u);

/// Random selected sample with n rows, dx covariates and one continuous
/// instrument; y is observed where s = 1.
Dataset random_dataset(RngStream& rng, std::size_t n, std::size_t dx);

/// Random grid with k cutpoints per covariate and in p, spanning the data
/// (k >= 2). Cutpoints may coincide with data values.
GridSpec random_grid(RngStream& rng, const Dataset& data, std::span<const double> phat,
                     std::span<const double> tau_grid, std::size_t k);

/// Fits whose `below` entries mix 0, 1 and rank-score fractions.
std::vector<QuantileFit> random_fits(RngStream& rng, const Dataset& data,
                                     std::span<const double> tau_grid);

}  // namespace selectest::testing
