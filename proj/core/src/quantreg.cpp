#include "selectest/quantreg.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "selectest/errors.hpp"

namespace selectest {

double check_loss(double v, double tau) noexcept {
  return 2.0 * v * (tau - (v <= 0.0 ? 1.0 : 0.0));
}

namespace {

enum class VarStatus : unsigned char { Basic, AtLower, AtUpper };

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Bounded-variable revised simplex for
//   min cost'x  s.t.  A x = rhs,  lb <= x <= ub
// where the first m columns are the structural dual variables (column z_i,
// bounds [0, w_i]) and the last p columns are artificials (column sign_k e_k).
class DualQuantileSimplex {
 public:
  DualQuantileSimplex(std::span<const double> design, std::size_t p, std::span<const double> y,
                      std::span<const double> w, double tau)
      : z_(design), p_(p), m_(y.size()), y_(y), w_(w), tau_(tau) {}

  WeightedQuantileSolution solve();

 private:
  std::size_t total() const { return m_ + p_; }
  bool is_artificial(std::size_t j) const { return j >= m_; }

  // Column j written into `out`.
  void column(std::size_t j, Eigen::VectorXd& out) const {
    if (is_artificial(j)) {
      out.setZero();
      out[static_cast<Eigen::Index>(j - m_)] = sign_[j - m_];
    } else {
      for (std::size_t k = 0; k < p_; ++k) out[static_cast<Eigen::Index>(k)] = z_[j * p_ + k];
    }
  }
  double dot_column(std::size_t j, const Eigen::VectorXd& v) const {
    if (is_artificial(j)) return sign_[j - m_] * v[static_cast<Eigen::Index>(j - m_)];
    double acc = 0.0;
    const double* row = z_.data() + j * p_;
    for (std::size_t k = 0; k < p_; ++k) acc += row[k] * v[static_cast<Eigen::Index>(k)];
    return acc;
  }

  void initialise();
  void refactor();
  // Runs simplex iterations with the current costs; returns false on iteration limit.
  bool iterate(const std::vector<double>& cost, double reduced_tol);
  void drive_out_artificials();

  std::span<const double> z_;
  std::size_t p_;
  std::size_t m_;
  std::span<const double> y_;
  std::span<const double> w_;
  double tau_;

  std::vector<double> sign_;
  std::vector<double> lb_, ub_, x_;
  std::vector<VarStatus> status_;
  std::vector<std::size_t> basic_;  // basic_[k] = variable in basis position k
  Eigen::MatrixXd binv_;
  int iterations_ = 0;
  int pivots_since_refactor_ = 0;
};

void DualQuantileSimplex::initialise() {
  const std::size_t n_var = total();
  lb_.assign(n_var, 0.0);
  ub_.assign(n_var, std::numeric_limits<double>::infinity());
  x_.assign(n_var, 0.0);
  status_.assign(n_var, VarStatus::AtLower);
  for (std::size_t i = 0; i < m_; ++i) ub_[i] = w_[i];

  // Start the structural variables at the bound matching the residual sign
  // against the weighted tau-quantile of y, which keeps phase one short.
  std::vector<std::size_t> order(m_);
  for (std::size_t i = 0; i < m_; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return y_[a] < y_[b] || (y_[a] == y_[b] && a < b);
  });
  double total_w = 0.0;
  for (std::size_t i = 0; i < m_; ++i) total_w += w_[i];
  double acc = 0.0;
  double cut = y_[order.back()];
  for (auto i : order) {
    acc += w_[i];
    if (acc >= tau_ * total_w) {
      cut = y_[i];
      break;
    }
  }
  for (std::size_t i = 0; i < m_; ++i) {
    if (y_[i] > cut) {
      x_[i] = w_[i];
      status_[i] = VarStatus::AtUpper;
    }
  }

  // rhs = (1 - tau) Z'w; artificials absorb rhs - Z'a.
  Eigen::VectorXd resid = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p_));
  for (std::size_t i = 0; i < m_; ++i) {
    const double coef = (1.0 - tau_) * w_[i] - x_[i];
    if (coef == 0.0) continue;
    for (std::size_t k = 0; k < p_; ++k) resid[static_cast<Eigen::Index>(k)] += coef * z_[i * p_ + k];
  }
  sign_.assign(p_, 1.0);
  basic_.resize(p_);
  binv_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p_), static_cast<Eigen::Index>(p_));
  for (std::size_t k = 0; k < p_; ++k) {
    const double r = resid[static_cast<Eigen::Index>(k)];
    sign_[k] = r < 0.0 ? -1.0 : 1.0;
    const std::size_t var = m_ + k;
    basic_[k] = var;
    status_[var] = VarStatus::Basic;
    x_[var] = std::abs(r);
    binv_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = sign_[k];
  }
}

void DualQuantileSimplex::refactor() {
  const auto pp = static_cast<Eigen::Index>(p_);
  Eigen::MatrixXd basis(pp, pp);
  Eigen::VectorXd col(pp);
  for (std::size_t k = 0; k < p_; ++k) {
    column(basic_[k], col);
    basis.col(static_cast<Eigen::Index>(k)) = col;
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis);
  binv_ = lu.inverse();

  // Recompute basic values from the nonbasic ones: B x_B = rhs - N x_N.
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(pp);
  for (std::size_t i = 0; i < m_; ++i) {
    const double coef = (1.0 - tau_) * w_[i] - (status_[i] == VarStatus::Basic ? 0.0 : x_[i]);
    if (coef == 0.0) continue;
    for (std::size_t k = 0; k < p_; ++k) rhs[static_cast<Eigen::Index>(k)] += coef * z_[i * p_ + k];
  }
  for (std::size_t k = 0; k < p_; ++k) {
    const std::size_t var = m_ + k;
    if (status_[var] != VarStatus::Basic && x_[var] != 0.0) {
      rhs[static_cast<Eigen::Index>(k)] -= sign_[k] * x_[var];
    }
  }
  const Eigen::VectorXd xb = binv_ * rhs;
  for (std::size_t k = 0; k < p_; ++k) x_[basic_[k]] = xb[static_cast<Eigen::Index>(k)];
  pivots_since_refactor_ = 0;
}

bool DualQuantileSimplex::iterate(const std::vector<double>& cost, double reduced_tol) {
  const auto pp = static_cast<Eigen::Index>(p_);
  Eigen::VectorXd cb(pp), pi(pp), alpha(pp), col(pp);
  const int max_iter = static_cast<int>(50 * (m_ + p_) + 1000);
  int degenerate_run = 0;
  bool bland = false;
  const double piv_tol = 1e-11;

  for (;;) {
    if (iterations_ > max_iter) return false;
    for (std::size_t k = 0; k < p_; ++k) cb[static_cast<Eigen::Index>(k)] = cost[basic_[k]];
    pi.noalias() = binv_.transpose() * cb;

    // Pricing over nonbasic structural variables (artificials never re-enter).
    std::size_t entering = total();
    double best = 0.0;
    for (std::size_t j = 0; j < m_; ++j) {
      if (status_[j] == VarStatus::Basic) continue;
      const double d = cost[j] - dot_column(j, pi);
      double gain = 0.0;
      if (status_[j] == VarStatus::AtLower && d < -reduced_tol) gain = -d;
      if (status_[j] == VarStatus::AtUpper && d > reduced_tol) gain = d;
      if (gain <= 0.0) continue;
      if (bland) {
        entering = j;
        break;
      }
      if (gain > best) {
        best = gain;
        entering = j;
      }
    }
    if (entering == total()) return true;

    column(entering, col);
    alpha.noalias() = binv_ * col;
    const double dir = status_[entering] == VarStatus::AtLower ? 1.0 : -1.0;

    double theta = ub_[entering] - lb_[entering];
    std::size_t leave_pos = p_;  // p_ means bound flip
    bool leave_to_upper = false;
    for (std::size_t k = 0; k < p_; ++k) {
      const double delta = dir * alpha[static_cast<Eigen::Index>(k)];
      const std::size_t var = basic_[k];
      double limit;
      bool to_upper;
      if (delta > piv_tol) {
        limit = (x_[var] - lb_[var]) / delta;
        to_upper = false;
      } else if (delta < -piv_tol && std::isfinite(ub_[var])) {
        limit = (ub_[var] - x_[var]) / -delta;
        to_upper = true;
      } else {
        continue;
      }
      if (limit < 0.0) limit = 0.0;
      if (limit < theta || (limit == theta && leave_pos != p_ && var < basic_[leave_pos])) {
        theta = limit;
        leave_pos = k;
        leave_to_upper = to_upper;
      }
    }
    if (!std::isfinite(theta)) {
      throw DataError("quantile_solver", "unbounded direction in dual simplex");
    }

    ++iterations_;
    if (theta <= 1e-14) {
      if (++degenerate_run > static_cast<int>(2 * p_ + 10)) bland = true;
    } else {
      degenerate_run = 0;
    }

    x_[entering] += dir * theta;
    for (std::size_t k = 0; k < p_; ++k) {
      x_[basic_[k]] -= theta * dir * alpha[static_cast<Eigen::Index>(k)];
    }

    if (leave_pos == p_) {
      status_[entering] = status_[entering] == VarStatus::AtLower ? VarStatus::AtUpper
                                                                  : VarStatus::AtLower;
      x_[entering] = status_[entering] == VarStatus::AtUpper ? ub_[entering] : lb_[entering];
      continue;
    }

    const std::size_t leaving = basic_[leave_pos];
    status_[leaving] = leave_to_upper ? VarStatus::AtUpper : VarStatus::AtLower;
    x_[leaving] = leave_to_upper ? ub_[leaving] : lb_[leaving];
    status_[entering] = VarStatus::Basic;
    basic_[leave_pos] = entering;

    const auto r = static_cast<Eigen::Index>(leave_pos);
    const double pivot = alpha[r];
    binv_.row(r) /= pivot;
    for (Eigen::Index i = 0; i < pp; ++i) {
      if (i != r && alpha[i] != 0.0) binv_.row(i) -= alpha[i] * binv_.row(r);
    }
    if (++pivots_since_refactor_ >= 64) refactor();
  }
}

void DualQuantileSimplex::drive_out_artificials() {
  const auto pp = static_cast<Eigen::Index>(p_);
  Eigen::VectorXd col(pp), alpha(pp);
  for (std::size_t k = 0; k < p_; ++k) {
    if (!is_artificial(basic_[k])) continue;
    // Degenerate pivot: any structural column with a nonzero entry in row k.
    std::size_t chosen = m_;
    double best = 1e-9;
    for (std::size_t j = 0; j < m_; ++j) {
      if (status_[j] == VarStatus::Basic) continue;
      column(j, col);
      const double a = binv_.row(static_cast<Eigen::Index>(k)).dot(col);
      if (std::abs(a) > best) {
        best = std::abs(a);
        chosen = j;
      }
    }
    if (chosen == m_) {
      throw DataError("quantile_solver", "local design is rank deficient");
    }
    column(chosen, col);
    alpha.noalias() = binv_ * col;
    const std::size_t art = basic_[k];
    status_[art] = VarStatus::AtLower;
    x_[art] = 0.0;
    status_[chosen] = VarStatus::Basic;
    basic_[k] = chosen;
    const auto r = static_cast<Eigen::Index>(k);
    const double pivot = alpha[r];
    binv_.row(r) /= pivot;
    for (Eigen::Index i = 0; i < pp; ++i) {
      if (i != r && alpha[i] != 0.0) binv_.row(i) -= alpha[i] * binv_.row(r);
    }
  }
  refactor();
}

WeightedQuantileSolution DualQuantileSimplex::solve() {
  initialise();

  std::vector<double> cost(total(), 0.0);
  for (std::size_t k = 0; k < p_; ++k) cost[m_ + k] = 1.0;
  if (!iterate(cost, 1e-9)) {
    throw DataError("quantile_solver", "phase one did not converge");
  }
  double infeasibility = 0.0;
  double rhs_scale = 0.0;
  for (std::size_t k = 0; k < p_; ++k) infeasibility += x_[m_ + k];
  for (std::size_t i = 0; i < m_; ++i) rhs_scale += w_[i];
  if (infeasibility > 1e-8 * (1.0 + rhs_scale)) {
    throw DataError("quantile_solver", "local design is rank deficient (phase one infeasible)");
  }
  // Artificials are fixed at zero from here on.
  for (std::size_t k = 0; k < p_; ++k) {
    ub_[m_ + k] = 0.0;
    if (status_[m_ + k] != VarStatus::Basic) x_[m_ + k] = 0.0;
  }
  drive_out_artificials();

  double y_scale = 0.0;
  for (std::size_t i = 0; i < m_; ++i) {
    cost[i] = -y_[i];
    y_scale = std::max(y_scale, std::abs(y_[i]));
  }
  for (std::size_t k = 0; k < p_; ++k) cost[m_ + k] = 0.0;
  if (!iterate(cost, 1e-11 * (1.0 + y_scale))) {
    throw DataError("quantile_solver", "phase two did not converge");
  }

  // Coefficients interpolate the basis rows: Z_B b = y_B.
  const auto pp = static_cast<Eigen::Index>(p_);
  Eigen::MatrixXd zb(pp, pp);
  Eigen::VectorXd yb(pp);
  WeightedQuantileSolution sol;
  sol.basis = basic_;
  std::sort(sol.basis.begin(), sol.basis.end());
  for (std::size_t k = 0; k < p_; ++k) {
    const std::size_t row = sol.basis[k];
    for (std::size_t c = 0; c < p_; ++c) {
      zb(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = z_[row * p_ + c];
    }
    yb[static_cast<Eigen::Index>(k)] = y_[row];
  }
  const Eigen::VectorXd b = zb.fullPivLu().solve(yb);
  sol.coef.assign(b.data(), b.data() + p_);
  sol.residuals.resize(m_);
  std::vector<char> in_basis(m_, 0);
  for (auto row : sol.basis) in_basis[row] = 1;
  for (std::size_t i = 0; i < m_; ++i) {
    if (in_basis[i]) {
      sol.residuals[i] = 0.0;
      continue;
    }
    double fit = 0.0;
    for (std::size_t c = 0; c < p_; ++c) fit += z_[i * p_ + c] * sol.coef[c];
    sol.residuals[i] = y_[i] - fit;
  }
  for (std::size_t i = 0; i < m_; ++i) sol.objective += w_[i] * check_loss(sol.residuals[i], tau_);

  // Z_B' a_B = (1 - tau) Z'w - sum over rows at the upper bound of w_i z_i.
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(pp);
  sol.rank_scores.assign(m_, 0.0);
  for (std::size_t i = 0; i < m_; ++i) {
    double coef = (1.0 - tau_) * w_[i];
    if (!in_basis[i] && status_[i] == VarStatus::AtUpper) {
      coef -= w_[i];
      sol.rank_scores[i] = 1.0;
    }
    for (std::size_t c = 0; c < p_; ++c) rhs[static_cast<Eigen::Index>(c)] += coef * z_[i * p_ + c];
  }
  const Eigen::VectorXd ab = zb.transpose().fullPivLu().solve(rhs);
  for (std::size_t k = 0; k < p_; ++k) {
    const std::size_t row = sol.basis[k];
    sol.rank_scores[row] = std::clamp(ab[static_cast<Eigen::Index>(k)] / w_[row], 0.0, 1.0);
  }
  sol.iterations = iterations_;
  return sol;
}

}  // namespace

WeightedQuantileSolution solve_weighted_quantile(std::span<const double> design, std::size_t p,
                                                 std::span<const double> y,
                                                 std::span<const double> w, double tau) {
  const std::size_t m = y.size();
  if (p == 0) throw ConfigError("quantile_solver", "empty design");
  if (design.size() != m * p || w.size() != m) {
    throw ConfigError("quantile_solver", "design, outcome and weight sizes disagree");
  }
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("quantile_solver", "tau must lie in (0,1)");
  if (m < p) {
    throw InfeasibleError("quantile_solver",
                          "need at least " + std::to_string(p) + " observations, got " +
                              std::to_string(m),
                          m);
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!(w[i] > 0.0) || !std::isfinite(w[i])) {
      throw ConfigError("quantile_solver", "weights must be positive and finite");
    }
    if (!std::isfinite(y[i])) throw DataError("quantile_solver", "non-finite outcome");
  }
  DualQuantileSimplex simplex(design, p, y, w, tau);
  return simplex.solve();
}

std::size_t polynomial_basis_size(std::size_t dim, int order) {
  // C(order + dim, dim)
  std::size_t result = 1;
  for (std::size_t k = 1; k <= dim; ++k) {
    result = result * (static_cast<std::size_t>(order) + k) / k;
  }
  return result;
}

PolynomialBasis::PolynomialBasis(std::size_t dim, int order) : dim_(dim), order_(order) {
  if (dim == 0) throw ConfigError("polynomial_basis", "dimension must be positive");
  if (order < 0) throw ConfigError("polynomial_basis", "order must be nonnegative");
  std::vector<int> t(dim, 0);
  for (int degree = 0; degree <= order; ++degree) {
    // All compositions of `degree` into dim parts, first coordinate descending.
    std::function<void(std::size_t, int)> rec = [&](std::size_t j, int remaining) {
      if (j + 1 == dim) {
        t[j] = remaining;
        exponents_.insert(exponents_.end(), t.begin(), t.end());
        return;
      }
      for (int v = remaining; v >= 0; --v) {
        t[j] = v;
        rec(j + 1, remaining - v);
      }
    };
    rec(0, degree);
  }
}

void PolynomialBasis::evaluate(std::span<const double> u, std::span<double> out) const {
  const std::size_t k_max = size();
  for (std::size_t k = 0; k < k_max; ++k) {
    double v = 1.0;
    const int* e = exponents_.data() + k * dim_;
    for (std::size_t j = 0; j < dim_; ++j) {
      for (int q = 0; q < e[j]; ++q) v *= u[j];
    }
    out[k] = v;
  }
}

}  // namespace selectest
