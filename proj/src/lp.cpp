#include "ccopf/lp.hpp"

#include <cmath>

#include <fmt/format.h>

#include "ccopf/errors.hpp"

namespace ccopf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

LinearProgram::LinearProgram(Eigen::Index num_vars)
    : cost(Eigen::VectorXd::Zero(num_vars)),
      a(0, num_vars),
      rhs(0),
      lower(Eigen::VectorXd::Constant(num_vars, -kInf)),
      upper(Eigen::VectorXd::Constant(num_vars, kInf)) {}

Eigen::Index LinearProgram::add_row(const Eigen::VectorXd& coeffs, RowSense s, double b, std::string tag) {
  if (coeffs.size() != a.cols()) throw InputError("add_row: coefficient count does not match variables");
  const Eigen::Index r = a.rows();
  a.conservativeResize(r + 1, Eigen::NoChange);
  a.row(r) = coeffs.transpose();
  rhs.conservativeResize(r + 1);
  rhs(r) = b;
  sense.push_back(s);
  tags.push_back(std::move(tag));
  return r;
}

void LinearProgram::validate() const {
  const auto n = a.cols();
  if (cost.size() != n || lower.size() != n || upper.size() != n)
    throw InputError("linear program: variable vectors have inconsistent sizes");
  if (rhs.size() != a.rows() || static_cast<Eigen::Index>(sense.size()) != a.rows())
    throw InputError("linear program: row data have inconsistent sizes");
  if (!a.allFinite() || !rhs.allFinite() || !cost.allFinite())
    throw InputError("linear program: non-finite coefficient");
  for (Eigen::Index j = 0; j < n; ++j)
    if (std::isnan(lower(j)) || std::isnan(upper(j)) || lower(j) > upper(j) || lower(j) == kInf ||
        upper(j) == -kInf)
      throw InputError(fmt::format("linear program: bad bounds on variable {}", j));
}

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::iteration_limit: return "iteration_limit";
  }
  return "?";
}

namespace {

// Dense revised simplex over the standard form  min c.z  s.t.  M z = b, z >= 0, b >= 0.
class StandardForm {
 public:
  StandardForm(const LinearProgram& lp, const LpOptions& opts) : lp_(lp), opts_(opts) { build(); }

  LpResult solve() {
    LpResult res;
    // Phase 1: drive the artificials to zero.
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(cols_);
    for (Eigen::Index j = first_artificial_; j < cols_; ++j) phase1(j) = 1.0;
    auto status = run(phase1, /*bar_artificials=*/false, res.iterations);
    if (status == LpStatus::iteration_limit) {
      res.status = status;
      return res;
    }
    const double infeas = phase1_value();
    if (infeas > opts_.feasibility_tol * (1.0 + b_.cwiseAbs().maxCoeff())) {
      res.status = LpStatus::infeasible;
      const Eigen::RowVectorXd y = duals_for(phase1);
      for (Eigen::Index r = 0; r < original_rows_; ++r)
        if (std::abs(y(r)) > 1e-9) res.infeasible_rows.push_back(static_cast<std::size_t>(r));
      return res;
    }
    expel_artificials(res.iterations);

    status = run(cost_, /*bar_artificials=*/true, res.iterations);
    res.status = status;
    if (status != LpStatus::optimal) return res;
    extract(res);
    return res;
  }

 private:
  struct Column {
    Eigen::Index var;  // original variable, or -1
    double mult;
  };

  void build() {
    const Eigen::Index n = lp_.a.cols();
    const Eigen::Index m = lp_.a.rows();
    offset_ = Eigen::VectorXd::Zero(n);

    std::vector<std::pair<Eigen::Index, double>> bound_rows;  // (column, upper - lower)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double lo = lp_.lower(j);
      const double up = lp_.upper(j);
      if (std::isfinite(lo)) {
        offset_(j) = lo;
        columns_.push_back({j, 1.0});
        if (std::isfinite(up)) bound_rows.emplace_back(static_cast<Eigen::Index>(columns_.size()) - 1, up - lo);
      } else if (std::isfinite(up)) {
        offset_(j) = up;
        columns_.push_back({j, -1.0});
      } else {
        columns_.push_back({j, 1.0});
        columns_.push_back({j, -1.0});
      }
    }
    const auto structural = static_cast<Eigen::Index>(columns_.size());
    original_rows_ = m;
    rows_ = m + static_cast<Eigen::Index>(bound_rows.size());

    // Count slacks.
    Eigen::Index slacks = static_cast<Eigen::Index>(bound_rows.size());
    for (auto s : lp_.sense) slacks += (s != RowSense::equal);

    const Eigen::Index max_cols = structural + slacks + rows_;
    Eigen::MatrixXd mat = Eigen::MatrixXd::Zero(rows_, max_cols);
    b_.resize(rows_);
    row_sign_ = Eigen::VectorXd::Ones(rows_);

    for (Eigen::Index r = 0; r < m; ++r) {
      double rhs = lp_.rhs(r) - lp_.a.row(r).dot(offset_);
      for (Eigen::Index c = 0; c < structural; ++c)
        mat(r, c) = lp_.a(r, columns_[static_cast<std::size_t>(c)].var) * columns_[static_cast<std::size_t>(c)].mult;
      b_(r) = rhs;
    }
    for (std::size_t k = 0; k < bound_rows.size(); ++k) {
      const Eigen::Index r = m + static_cast<Eigen::Index>(k);
      mat(r, bound_rows[k].first) = 1.0;
      b_(r) = bound_rows[k].second;
    }

    Eigen::Index col = structural;
    std::vector<Eigen::Index> slack_of(static_cast<std::size_t>(rows_), -1);
    for (Eigen::Index r = 0; r < rows_; ++r) {
      const RowSense s = r < m ? lp_.sense[static_cast<std::size_t>(r)] : RowSense::less_equal;
      if (s == RowSense::equal) continue;
      mat(r, col) = s == RowSense::less_equal ? 1.0 : -1.0;
      slack_of[static_cast<std::size_t>(r)] = col++;
    }
    for (Eigen::Index r = 0; r < rows_; ++r) {
      if (b_(r) < 0.0) {
        mat.row(r) *= -1.0;
        b_(r) = -b_(r);
        row_sign_(r) = -1.0;
      }
    }

    first_artificial_ = col;
    basis_.assign(static_cast<std::size_t>(rows_), -1);
    for (Eigen::Index r = 0; r < rows_; ++r) {
      const Eigen::Index s = slack_of[static_cast<std::size_t>(r)];
      if (s >= 0 && mat(r, s) > 0.0) {
        basis_[static_cast<std::size_t>(r)] = s;
      } else {
        mat(r, col) = 1.0;
        basis_[static_cast<std::size_t>(r)] = col++;
      }
    }
    cols_ = col;
    m_ = mat.leftCols(cols_);

    cost_ = Eigen::VectorXd::Zero(cols_);
    for (Eigen::Index c = 0; c < structural; ++c)
      cost_(c) = lp_.cost(columns_[static_cast<std::size_t>(c)].var) * columns_[static_cast<std::size_t>(c)].mult;

    is_basic_.assign(static_cast<std::size_t>(cols_), false);
    for (auto j : basis_) is_basic_[static_cast<std::size_t>(j)] = true;
    refactor();
  }

  void refactor() {
    Eigen::MatrixXd bmat(rows_, rows_);
    for (Eigen::Index r = 0; r < rows_; ++r) bmat.col(r) = m_.col(basis_[static_cast<std::size_t>(r)]);
    binv_ = bmat.partialPivLu().inverse();
    xb_ = binv_ * b_;
    since_refactor_ = 0;
  }

  Eigen::RowVectorXd duals_for(const Eigen::VectorXd& c) const {
    Eigen::RowVectorXd cb(rows_);
    for (Eigen::Index r = 0; r < rows_; ++r) cb(r) = c(basis_[static_cast<std::size_t>(r)]);
    return cb * binv_;
  }

  double phase1_value() const {
    double v = 0.0;
    for (Eigen::Index r = 0; r < rows_; ++r)
      if (basis_[static_cast<std::size_t>(r)] >= first_artificial_) v += std::max(0.0, xb_(r));
    return v;
  }

  void pivot(Eigen::Index leave_pos, Eigen::Index enter, const Eigen::VectorXd& alpha) {
    const double piv = alpha(leave_pos);
    binv_.row(leave_pos) /= piv;
    xb_(leave_pos) /= piv;
    for (Eigen::Index r = 0; r < rows_; ++r) {
      if (r == leave_pos || alpha(r) == 0.0) continue;
      binv_.row(r) -= alpha(r) * binv_.row(leave_pos);
      xb_(r) -= alpha(r) * xb_(leave_pos);
    }
    is_basic_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(leave_pos)])] = false;
    basis_[static_cast<std::size_t>(leave_pos)] = enter;
    is_basic_[static_cast<std::size_t>(enter)] = true;
    if (++since_refactor_ >= opts_.refactor_interval) refactor();
  }

  LpStatus run(const Eigen::VectorXd& c, bool bar_artificials, int& iterations) {
    const double cscale = 1.0 + c.cwiseAbs().maxCoeff();
    bool bland = false;
    const Eigen::Index limit = bar_artificials ? first_artificial_ : cols_;
    while (true) {
      if (iterations >= opts_.max_iterations) return LpStatus::iteration_limit;
      const Eigen::RowVectorXd y = duals_for(c);

      // Pricing: Dantzig normally, Bland's smallest index while stalled on a degenerate vertex.
      Eigen::Index enter = -1;
      double best = -opts_.optimality_tol * cscale;
      for (Eigen::Index j = 0; j < limit; ++j) {
        if (is_basic_[static_cast<std::size_t>(j)]) continue;
        const double d = c(j) - y.dot(m_.col(j));
        if (d < best) {
          enter = j;
          if (bland) break;
          best = d;
        }
      }
      if (enter < 0) return LpStatus::optimal;

      const Eigen::VectorXd alpha = binv_ * m_.col(enter);
      const double amax = alpha.cwiseAbs().maxCoeff();
      Eigen::Index leave = -1;
      double theta = kInf;
      for (Eigen::Index r = 0; r < rows_; ++r) {
        if (alpha(r) <= opts_.pivot_tol * std::max(1.0, amax)) continue;
        const double ratio = std::max(0.0, xb_(r)) / alpha(r);
        if (leave < 0 || ratio < theta - 1e-12) {
          theta = ratio;
          leave = r;
        } else if (ratio <= theta + 1e-12) {
          const bool prefer = bland ? basis_[static_cast<std::size_t>(r)] < basis_[static_cast<std::size_t>(leave)]
                                    : alpha(r) > alpha(leave);
          if (prefer) leave = r;
        }
      }
      if (leave < 0) return LpStatus::unbounded;
      bland = theta <= opts_.feasibility_tol;
      pivot(leave, enter, alpha);
      ++iterations;
    }
  }

  // Basic artificials left at zero after phase 1 are swapped for structural
  // columns; those that cannot be swapped sit on redundant rows.
  void expel_artificials(int& iterations) {
    for (Eigen::Index r = 0; r < rows_; ++r) {
      if (basis_[static_cast<std::size_t>(r)] < first_artificial_) continue;
      const Eigen::RowVectorXd row = binv_.row(r) * m_.leftCols(first_artificial_);
      Eigen::Index best = -1;
      double mag = 1e-9;
      for (Eigen::Index j = 0; j < first_artificial_; ++j) {
        if (is_basic_[static_cast<std::size_t>(j)]) continue;
        if (std::abs(row(j)) > mag) {
          mag = std::abs(row(j));
          best = j;
        }
      }
      if (best >= 0) {
        pivot(r, best, binv_ * m_.col(best));
        ++iterations;
      }
    }
  }

  void extract(LpResult& res) const {
    const Eigen::Index n = lp_.a.cols();
    Eigen::VectorXd z = Eigen::VectorXd::Zero(cols_);
    for (Eigen::Index r = 0; r < rows_; ++r) z(basis_[static_cast<std::size_t>(r)]) = xb_(r);

    res.x = offset_;
    for (std::size_t c = 0; c < columns_.size(); ++c)
      res.x(columns_[c].var) += columns_[c].mult * z(static_cast<Eigen::Index>(c));
    res.objective = lp_.cost.dot(res.x);

    const Eigen::RowVectorXd y = duals_for(cost_);
    Eigen::VectorXd shadow(original_rows_);  // d objective / d rhs
    res.duals.resize(original_rows_);
    for (Eigen::Index r = 0; r < original_rows_; ++r) {
      shadow(r) = row_sign_(r) * y(r);
      res.duals(r) = lp_.sense[static_cast<std::size_t>(r)] == RowSense::greater_equal ? shadow(r) : -shadow(r);
    }
    res.reduced_costs = lp_.cost - lp_.a.transpose() * shadow;

    res.dual_objective = shadow.dot(lp_.rhs);
    const double tol = 1e-9 * (1.0 + lp_.cost.cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < n; ++j) {
      const double rc = res.reduced_costs(j);
      if (rc > tol && std::isfinite(lp_.lower(j))) res.dual_objective += rc * lp_.lower(j);
      else if (rc < -tol && std::isfinite(lp_.upper(j))) res.dual_objective += rc * lp_.upper(j);
    }

    for (Eigen::Index r = 0; r < rows_; ++r)
      if (std::abs(xb_(r)) <= 1e-9) res.degenerate = true;
  }

  const LinearProgram& lp_;
  LpOptions opts_;
  std::vector<Column> columns_;
  Eigen::VectorXd offset_;
  Eigen::MatrixXd m_;
  Eigen::VectorXd b_;
  Eigen::VectorXd row_sign_;
  Eigen::VectorXd cost_;
  Eigen::Index rows_ = 0;
  Eigen::Index original_rows_ = 0;
  Eigen::Index cols_ = 0;
  Eigen::Index first_artificial_ = 0;
  std::vector<Eigen::Index> basis_;
  std::vector<bool> is_basic_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd xb_;
  int since_refactor_ = 0;
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp, const LpOptions& opts) {
  lp.validate();
  if (lp.a.rows() == 0) {
    // Bounds only: each variable sits at whichever finite bound its cost prefers.
    LpResult res;
    res.x = Eigen::VectorXd::Zero(lp.a.cols());
    for (Eigen::Index j = 0; j < lp.a.cols(); ++j) {
      const double c = lp.cost(j);
      const double v = c > 0 ? lp.lower(j) : c < 0 ? lp.upper(j) : (std::isfinite(lp.lower(j)) ? lp.lower(j) : std::isfinite(lp.upper(j)) ? lp.upper(j) : 0.0);
      if (!std::isfinite(v)) {
        res.status = LpStatus::unbounded;
        return res;
      }
      res.x(j) = v;
    }
    res.status = LpStatus::optimal;
    res.duals.resize(0);
    res.reduced_costs = lp.cost;
    res.objective = res.dual_objective = lp.cost.dot(res.x);
    return res;
  }
  return StandardForm(lp, opts).solve();
}

}  // namespace ccopf
