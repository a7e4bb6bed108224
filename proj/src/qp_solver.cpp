#include "fleetpricer/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "fleetpricer/error.hpp"
#include "fleetpricer/kernels.hpp"

namespace fleetpricer {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const VectorXd& v) {
  return v.size() == 0 ? 0.0 : kernels::max_abs({v.data(), static_cast<std::size_t>(v.size())});
}

// Problem after eliminating fixed variables and zero rows, with unit
// row norms and the objective scaled to unit magnitude.
struct Reduced {
  std::vector<Index> free;
  std::vector<Index> rows;
  VectorXd x_base;  // full-length, fixed variables at their value
  VectorXd h, g, lo, hi;
  MatrixXd A;
  VectorXd rlo, rhi;
  VectorXd row_scale;
  double cost_scale = 1.0;
  bool infeasible = false;
};

Reduced reduce(const QpProblem& p, double tol) {
  Reduced r;
  const Index n = p.variables();
  r.x_base = VectorXd::Zero(n);
  for (Index i = 0; i < n; ++i) {
    if (p.hi(i) - p.lo(i) <= 0.0) {
      r.x_base(i) = p.lo(i);
    } else {
      r.free.push_back(i);
    }
  }
  const auto nf = static_cast<Index>(r.free.size());
  r.h.resize(nf);
  r.g.resize(nf);
  r.lo.resize(nf);
  r.hi.resize(nf);
  for (Index c = 0; c < nf; ++c) {
    const Index i = r.free[static_cast<std::size_t>(c)];
    r.h(c) = p.h(i);
    r.g(c) = p.g(i);
    r.lo(c) = p.lo(i);
    r.hi(c) = p.hi(i);
  }
  const VectorXd shift = p.A * r.x_base;
  std::vector<VectorXd> kept;
  std::vector<double> klo, khi, kscale;
  for (Index row = 0; row < p.rows(); ++row) {
    VectorXd a(nf);
    for (Index c = 0; c < nf; ++c) a(c) = p.A(row, r.free[static_cast<std::size_t>(c)]);
    const double lo = p.row_lo(row) - shift(row);
    const double hi = p.row_hi(row) - shift(row);
    const double norm = inf_norm(a);
    if (norm == 0.0) {
      const double slack = tol * (1.0 + std::abs(shift(row)));
      if (lo > slack || hi < -slack) r.infeasible = true;
      continue;
    }
    // Range of a'x over the box: an empty intersection is a certificate.
    double amin = 0.0, amax = 0.0;
    for (Index c = 0; c < nf; ++c) {
      amin += a(c) * (a(c) > 0.0 ? r.lo(c) : r.hi(c));
      amax += a(c) * (a(c) > 0.0 ? r.hi(c) : r.lo(c));
    }
    const double slack = tol * (1.0 + std::max(std::abs(amin), std::abs(amax)));
    if (amax < lo - slack || amin > hi + slack) r.infeasible = true;
    r.rows.push_back(row);
    kept.push_back(a / norm);
    klo.push_back(lo / norm);
    khi.push_back(hi / norm);
    kscale.push_back(1.0 / norm);
  }
  const auto m = static_cast<Index>(kept.size());
  r.A.resize(m, nf);
  r.rlo.resize(m);
  r.rhi.resize(m);
  r.row_scale.resize(m);
  for (Index row = 0; row < m; ++row) {
    r.A.row(row) = kept[static_cast<std::size_t>(row)].transpose();
    r.rlo(row) = klo[static_cast<std::size_t>(row)];
    r.rhi(row) = khi[static_cast<std::size_t>(row)];
    r.row_scale(row) = kscale[static_cast<std::size_t>(row)];
  }
  const double mag = std::max(inf_norm(r.h), inf_norm(r.g));
  r.cost_scale = mag > 0.0 ? 1.0 / mag : 1.0;
  r.h *= r.cost_scale;
  r.g *= r.cost_scale;
  return r;
}

struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
};

Residuals residuals(const Reduced& r, const VectorXd& x, const VectorXd& y_row,
                    const VectorXd& y_box) {
  Residuals out;
  const VectorXd ax = r.A * x;
  for (Index i = 0; i < ax.size(); ++i) {
    out.primal = std::max({out.primal, r.rlo(i) - ax(i), ax(i) - r.rhi(i)});
  }
  for (Index i = 0; i < x.size(); ++i) {
    out.primal = std::max({out.primal, r.lo(i) - x(i), x(i) - r.hi(i)});
  }
  const VectorXd grad = r.h.cwiseProduct(x) + r.g + r.A.transpose() * y_row + y_box;
  out.dual = inf_norm(grad);
  return out;
}

QpResult expand(const QpProblem& p, const Reduced& r, const VectorXd& xr, const VectorXd& yr_row,
                const VectorXd& yr_box) {
  QpResult out;
  out.x = r.x_base;
  for (std::size_t c = 0; c < r.free.size(); ++c) {
    out.x(r.free[c]) = std::clamp(xr(static_cast<Index>(c)), p.lo(r.free[c]), p.hi(r.free[c]));
  }
  out.y_row = VectorXd::Zero(p.rows());
  for (std::size_t row = 0; row < r.rows.size(); ++row) {
    out.y_row(r.rows[row]) = yr_row(static_cast<Index>(row)) * r.row_scale(static_cast<Index>(row)) / r.cost_scale;
  }
  // Box multipliers of fixed variables close stationarity exactly.
  out.y_box = -(p.h.cwiseProduct(out.x) + p.g + p.A.transpose() * out.y_row);
  for (std::size_t c = 0; c < r.free.size(); ++c) {
    out.y_box(r.free[c]) = yr_box(static_cast<Index>(c)) / r.cost_scale;
  }
  return out;
}

QpResult trivial_infeasible(const QpProblem& p, QpMethod m) {
  QpResult out;
  out.status = QpStatus::infeasible;
  out.method = m;
  out.x = p.lo.cwiseMax(p.hi.cwiseMin(VectorXd::Ones(p.variables())));
  out.y_row = VectorXd::Zero(p.rows());
  out.y_box = VectorXd::Zero(p.variables());
  out.primal_residual = kInf;
  out.dual_residual = kInf;
  return out;
}

// Equality-constrained refinement on a guessed active set. Returns false
// when the guess does not yield a KKT point.
bool polish(const Reduced& r, const VectorXd& x_admm, const VectorXd& z_row, const VectorXd& y_row,
            const VectorXd& y_box, double tol, VectorXd& x_out, VectorXd& yrow_out,
            VectorXd& ybox_out) {
  const Index n = r.h.size();
  const Index m = r.A.rows();
  std::vector<int> box_state(static_cast<std::size_t>(n), 0);  // -1 lower, +1 upper
  for (Index i = 0; i < n; ++i) {
    if (x_admm(i) - r.lo(i) < -y_box(i)) box_state[static_cast<std::size_t>(i)] = -1;
    else if (r.hi(i) - x_admm(i) < y_box(i)) box_state[static_cast<std::size_t>(i)] = 1;
  }
  std::vector<Index> act;
  std::vector<int> act_side;
  for (Index i = 0; i < m; ++i) {
    if (std::isfinite(r.rlo(i)) && z_row(i) - r.rlo(i) < -y_row(i)) {
      act.push_back(i);
      act_side.push_back(-1);
    } else if (std::isfinite(r.rhi(i)) && r.rhi(i) - z_row(i) < y_row(i)) {
      act.push_back(i);
      act_side.push_back(1);
    }
  }
  std::vector<Index> fr;
  VectorXd x = x_admm;
  for (Index i = 0; i < n; ++i) {
    const int s = box_state[static_cast<std::size_t>(i)];
    if (s == -1) x(i) = r.lo(i);
    else if (s == 1) x(i) = r.hi(i);
    else fr.push_back(i);
  }
  const auto nf = static_cast<Index>(fr.size());
  const auto na = static_cast<Index>(act.size());
  MatrixXd Af(na, nf);
  VectorXd b(na);
  for (Index a = 0; a < na; ++a) {
    const Index row = act[static_cast<std::size_t>(a)];
    double rhs = act_side[static_cast<std::size_t>(a)] < 0 ? r.rlo(row) : r.rhi(row);
    for (Index i = 0; i < n; ++i) {
      if (box_state[static_cast<std::size_t>(i)] != 0) rhs -= r.A(row, i) * x(i);
    }
    b(a) = rhs;
    for (Index c = 0; c < nf; ++c) Af(a, c) = r.A(row, fr[static_cast<std::size_t>(c)]);
  }
  VectorXd hf(nf), gf(nf);
  for (Index c = 0; c < nf; ++c) {
    hf(c) = r.h(fr[static_cast<std::size_t>(c)]);
    gf(c) = r.g(fr[static_cast<std::size_t>(c)]);
  }
  // Regularized KKT [H+dI, A'; A, -dI] via its Schur complement, then
  // iterative refinement against the unregularized system.
  const double delta = 1e-7;
  const VectorXd hreg_inv = (hf.array() + delta).inverse();
  MatrixXd S = Af * hreg_inv.asDiagonal() * Af.transpose();
  S.diagonal().array() += delta;
  const Eigen::LDLT<MatrixXd> ldlt(S);
  auto reg_solve = [&](const VectorXd& r1, const VectorXd& r2, VectorXd& sx, VectorXd& sl) {
    sl = na > 0 ? VectorXd(ldlt.solve(Af * hreg_inv.cwiseProduct(r1) - r2)) : VectorXd();
    sx = hreg_inv.cwiseProduct(r1 - (na > 0 ? VectorXd(Af.transpose() * sl) : VectorXd::Zero(nf)));
  };
  VectorXd xf, lam;
  reg_solve(-gf, b, xf, lam);
  for (int it = 0; it < 5; ++it) {
    const VectorXd r1 = -gf - hf.cwiseProduct(xf) - (na > 0 ? VectorXd(Af.transpose() * lam) : VectorXd::Zero(nf));
    const VectorXd r2 = b - (na > 0 ? VectorXd(Af * xf) : VectorXd());
    VectorXd dx, dl;
    reg_solve(r1, r2, dx, dl);
    xf += dx;
    if (na > 0) lam += dl;
  }
  for (Index c = 0; c < nf; ++c) x(fr[static_cast<std::size_t>(c)]) = xf(c);

  VectorXd yr = VectorXd::Zero(m);
  for (Index a = 0; a < na; ++a) {
    const double v = lam(a);
    const int side = act_side[static_cast<std::size_t>(a)];
    if ((side < 0 && v > tol) || (side > 0 && v < -tol)) return false;
    yr(act[static_cast<std::size_t>(a)]) = v;
  }
  const VectorXd grad = r.h.cwiseProduct(x) + r.g + r.A.transpose() * yr;
  VectorXd yb = VectorXd::Zero(n);
  for (Index i = 0; i < n; ++i) {
    const int s = box_state[static_cast<std::size_t>(i)];
    if (s == 0) continue;
    yb(i) = -grad(i);
    if ((s < 0 && yb(i) > tol) || (s > 0 && yb(i) < -tol)) return false;
  }
  const Residuals res = residuals(r, x, yr, yb);
  if (res.primal > tol || res.dual > tol) return false;
  x_out = x;
  yrow_out = yr;
  ybox_out = yb;
  return true;
}

}  // namespace

void QpProblem::validate() const {
  const Index n = h.size();
  if (g.size() != n || lo.size() != n || hi.size() != n || A.cols() != n ||
      row_lo.size() != A.rows() || row_hi.size() != A.rows()) {
    throw Error(ErrorCode::InvalidArgument, "QP dimensions are inconsistent");
  }
  for (Index i = 0; i < n; ++i) {
    if (!(h(i) >= 0.0) || !std::isfinite(h(i)) || !std::isfinite(g(i))) {
      throw Error(ErrorCode::NonConcave, "QP curvature must be finite and non-negative");
    }
    if (!std::isfinite(lo(i)) || !std::isfinite(hi(i)) || lo(i) > hi(i)) {
      throw Error(ErrorCode::InvalidArgument, "QP box bounds must be finite with lo <= hi");
    }
  }
  for (Index i = 0; i < A.rows(); ++i) {
    if (std::isnan(row_lo(i)) || std::isnan(row_hi(i)) || row_lo(i) > row_hi(i)) {
      throw Error(ErrorCode::InvalidArgument, "QP row bounds must satisfy lo <= hi");
    }
  }
  if (!A.allFinite()) throw Error(ErrorCode::InvalidArgument, "QP matrix must be finite");
}

double QpProblem::objective(const Eigen::VectorXd& x) const {
  return 0.5 * x.dot(h.cwiseProduct(x)) + g.dot(x);
}

double QpProblem::max_violation(const Eigen::VectorXd& x) const {
  double v = 0.0;
  const VectorXd ax = A * x;
  for (Index i = 0; i < ax.size(); ++i) v = std::max({v, row_lo(i) - ax(i), ax(i) - row_hi(i)});
  for (Index i = 0; i < x.size(); ++i) v = std::max({v, lo(i) - x(i), x(i) - hi(i)});
  return v;
}

std::string to_string(QpStatus s) {
  switch (s) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::max_iterations: return "max_iterations";
    case QpStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

std::string to_string(QpMethod m) {
  switch (m) {
    case QpMethod::automatic: return "automatic";
    case QpMethod::admm: return "admm";
    case QpMethod::active_set: return "active_set";
  }
  return "unknown";
}

QpMethod parse_qp_method(const std::string& name) {
  if (name == "automatic") return QpMethod::automatic;
  if (name == "admm") return QpMethod::admm;
  if (name == "active_set") return QpMethod::active_set;
  throw Error(ErrorCode::ConfigError, "unknown QP method '" + name + "'");
}

QpResult solve_qp_admm(const QpProblem& p, const QpSettings& s, const Eigen::VectorXd* warm_start) {
  p.validate();
  const double tol = s.tolerance;
  const Reduced r = reduce(p, tol);
  if (r.infeasible) return trivial_infeasible(p, QpMethod::admm);
  const Index n = r.h.size();
  const Index m = r.A.rows();
  const Index mt = m + n;
  const auto nt = static_cast<std::size_t>(mt);
  if (n == 0) {
    QpResult out = expand(p, r, VectorXd(), VectorXd::Zero(m), VectorXd());
    out.status = QpStatus::optimal;
    out.method = QpMethod::admm;
    return out;
  }

  VectorXd lo_all(mt), hi_all(mt);
  lo_all << r.rlo, r.lo;
  hi_all << r.rhi, r.hi;

  VectorXd x(n);
  for (Index c = 0; c < n; ++c) {
    const double start = warm_start != nullptr ? (*warm_start)(r.free[static_cast<std::size_t>(c)])
                                               : 0.5 * (r.lo(c) + r.hi(c));
    x(c) = std::clamp(start, r.lo(c), r.hi(c));
  }
  VectorXd z(mt);
  z << r.A * x, x;
  z = z.cwiseMax(lo_all).cwiseMin(hi_all);
  VectorXd y = VectorXd::Zero(mt);
  VectorXd y_prev = y;

  double rho = s.rho;
  VectorXd rho_vec(mt);
  VectorXd dinv(n);
  Eigen::LLT<MatrixXd> llt;
  MatrixXd AD;  // A * diag(dinv)
  auto factor = [&]() {
    rho_vec.setConstant(rho);
    dinv = (r.h.array() + s.sigma + rho).inverse();
    if (m > 0) {
      AD = r.A * dinv.asDiagonal();
      MatrixXd S = AD * r.A.transpose();
      S.diagonal().array() += 1.0 / rho;
      llt.compute(S);
    }
  };
  factor();

  QpResult out;
  out.method = QpMethod::admm;
  VectorXd rhs(n), xt(n), zt(mt), cx(mt), grad(n);
  double prim = kInf, dual = kInf;
  int iter = 0;
  bool done = false;
  bool infeasible = false;
  VectorXd px, pyr, pyb;
  const double eps_inf = 1e-7;
  for (iter = 1; iter <= s.max_iterations; ++iter) {
    rhs = s.sigma * x - r.g + rho_vec.tail(n).cwiseProduct(z.tail(n)) - y.tail(n);
    if (m > 0) rhs += r.A.transpose() * (rho_vec.head(m).cwiseProduct(z.head(m)) - y.head(m));
    xt = dinv.cwiseProduct(rhs);
    if (m > 0) xt -= AD.transpose() * llt.solve(r.A * xt);
    zt.head(m) = r.A * xt;
    zt.tail(n) = xt;
    x = s.alpha * xt + (1.0 - s.alpha) * x;
    y_prev = y;
    kernels::active().admm_project(zt.data(), z.data(), y.data(), rho_vec.data(), lo_all.data(),
                                   hi_all.data(), s.alpha, nt);

    cx.head(m) = r.A * x;
    cx.tail(n) = x;
    prim = kernels::max_abs_diff({cx.data(), nt}, {z.data(), nt});
    VectorXd cty = y.tail(n);
    if (m > 0) cty += r.A.transpose() * y.head(m);
    grad = r.h.cwiseProduct(x) + r.g + cty;
    dual = inf_norm(grad);
    const double eps_p = tol + tol * std::max(inf_norm(cx), inf_norm(z));
    const double eps_d =
        tol + tol * std::max({inf_norm(VectorXd(r.h.cwiseProduct(x))), inf_norm(cty), inf_norm(r.g)});
    if (prim <= eps_p && dual <= eps_d) {
      done = true;
      break;
    }

    // Primal infeasibility certificate from the multiplier step.
    const VectorXd dy = y - y_prev;
    const double dy_norm = inf_norm(dy);
    if (dy_norm > 1e-12) {
      VectorXd atdy = dy.tail(n);
      if (m > 0) atdy += r.A.transpose() * dy.head(m);
      double support = 0.0;
      bool finite = true;
      for (Index i = 0; i < mt && finite; ++i) {
        if (dy(i) > 0.0) {
          if (std::isfinite(hi_all(i))) support += hi_all(i) * dy(i);
          else if (dy(i) > eps_inf * dy_norm) finite = false;
        } else if (dy(i) < 0.0) {
          if (std::isfinite(lo_all(i))) support += lo_all(i) * dy(i);
          else if (-dy(i) > eps_inf * dy_norm) finite = false;
        }
      }
      if (finite && inf_norm(atdy) <= eps_inf * dy_norm && support <= -eps_inf * dy_norm) {
        infeasible = true;
        break;
      }
    }

    if (s.polish && iter % 50 == 0 && prim < 1e-3 && dual < 1e-3) {
      if (polish(r, x, z.head(m), y.head(m), y.tail(n), tol, px, pyr, pyb)) {
        out.polished = true;
        break;
      }
    }
    if (iter % 50 == 0) {
      const double pn = prim / std::max({inf_norm(cx), inf_norm(z), 1e-30});
      const double dn = dual / std::max({inf_norm(VectorXd(r.h.cwiseProduct(x))), inf_norm(cty),
                                         inf_norm(r.g), 1e-30});
      const double ratio = std::sqrt(pn / std::max(dn, 1e-30));
      if (ratio > 5.0 || ratio < 0.2) {
        rho = std::clamp(rho * ratio, 1e-6, 1e6);
        factor();
      }
    }
  }
  out.iterations = std::min(iter, s.max_iterations);

  if (infeasible) {
    QpResult inf = trivial_infeasible(p, QpMethod::admm);
    inf.iterations = out.iterations;
    return inf;
  }
  if (!out.polished && s.polish && done) {
    out.polished = polish(r, x, z.head(m), y.head(m), y.tail(n), tol, px, pyr, pyb);
  }
  VectorXd xr = out.polished ? px : x;
  VectorXd yr = out.polished ? pyr : VectorXd(y.head(m));
  VectorXd yb = out.polished ? pyb : VectorXd(y.tail(n));
  if (!out.polished) xr = xr.cwiseMax(r.lo).cwiseMin(r.hi);
  const Residuals res = residuals(r, xr, yr, yb);
  QpResult full = expand(p, r, xr, yr, yb);
  full.method = QpMethod::admm;
  full.iterations = out.iterations;
  full.polished = out.polished;
  full.primal_residual = res.primal;
  full.dual_residual = res.dual;
  const double scale = std::max({1.0, inf_norm(cx), inf_norm(z)});
  full.status = (out.polished || done) && res.primal <= 10.0 * tol * scale ? QpStatus::optimal
                                                                           : QpStatus::max_iterations;
  if (full.status == QpStatus::optimal && !out.polished) {
    // Unpolished ADMM iterates meet the relative test; report them as such.
    full.primal_residual = std::min(res.primal, prim);
    full.dual_residual = std::min(res.dual, dual);
  }
  return full;
}

namespace {

// Dual active-set method of Goldfarb and Idnani for
//   min 0.5 x'Gx + g'x  s.t.  N' x >= b,  G diagonal positive.
struct GiResult {
  VectorXd x;
  VectorXd u;  // multiplier per constraint column
  bool infeasible = false;
  bool converged = false;
  int iterations = 0;
};

GiResult goldfarb_idnani(const VectorXd& G, const VectorXd& g0, const MatrixXd& N, const VectorXd& b,
                         int max_iter) {
  const Index n = G.size();
  const Index p = N.cols();
  const double eps = std::numeric_limits<double>::epsilon();
  MatrixXd J = G.cwiseSqrt().cwiseInverse().asDiagonal();
  MatrixXd R = MatrixXd::Zero(n, n);
  VectorXd x = -g0.cwiseQuotient(G);
  std::vector<Index> A;
  std::vector<double> u;
  double r_norm = 1.0;
  std::vector<char> is_active(static_cast<std::size_t>(p), 0), excluded(static_cast<std::size_t>(p), 0);
  GiResult out;

  auto drop = [&](std::size_t l) {
    is_active[static_cast<std::size_t>(A[l])] = 0;
    const auto q = static_cast<Index>(A.size());
    for (Index i = static_cast<Index>(l); i < q - 1; ++i) R.col(i) = R.col(i + 1);
    R.col(q - 1).setZero();
    A.erase(A.begin() + static_cast<std::ptrdiff_t>(l));
    u.erase(u.begin() + static_cast<std::ptrdiff_t>(l));
    const Index iq = q - 1;
    for (Index j = static_cast<Index>(l); j < iq; ++j) {
      double cc = R(j, j), ss = R(j + 1, j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      cc /= h;
      ss /= h;
      R(j + 1, j) = 0.0;
      if (cc < 0.0) {
        R(j, j) = -h;
        cc = -cc;
        ss = -ss;
      } else {
        R(j, j) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (Index k = j + 1; k < iq; ++k) {
        const double t1 = R(j, k), t2 = R(j + 1, k);
        R(j, k) = t1 * cc + t2 * ss;
        R(j + 1, k) = xny * (t1 + R(j, k)) - t2;
      }
      for (Index k = 0; k < n; ++k) {
        const double t1 = J(k, j), t2 = J(k, j + 1);
        J(k, j) = t1 * cc + t2 * ss;
        J(k, j + 1) = xny * (J(k, j) + t1) - t2;
      }
    }
  };

  auto add = [&](VectorXd d) {
    const auto q = static_cast<Index>(A.size());
    for (Index j = n - 1; j >= q + 1; --j) {
      double cc = d(j - 1), ss = d(j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      d(j) = 0.0;
      ss /= h;
      cc /= h;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d(j - 1) = -h;
      } else {
        d(j - 1) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (Index k = 0; k < n; ++k) {
        const double t1 = J(k, j - 1), t2 = J(k, j);
        J(k, j - 1) = t1 * cc + t2 * ss;
        J(k, j) = xny * (t1 + J(k, j - 1)) - t2;
      }
    }
    if (q >= n) return false;
    R.col(q).head(q + 1) = d.head(q + 1);
    if (std::abs(d(q)) <= eps * r_norm) return false;
    r_norm = std::max(r_norm, std::abs(d(q)));
    return true;
  };

  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it + 1;
    Index ip = -1;
    double smin = 0.0;
    for (Index i = 0; i < p; ++i) {
      if (is_active[static_cast<std::size_t>(i)] || excluded[static_cast<std::size_t>(i)]) continue;
      const double s = N.col(i).dot(x) - b(i);
      const double tol_i = 1e-12 * (1.0 + std::abs(b(i)) + N.col(i).cwiseAbs().dot(x.cwiseAbs()));
      if (s < -tol_i && s < smin) {
        smin = s;
        ip = i;
      }
    }
    if (ip < 0) {
      out.converged = true;
      break;
    }
    const VectorXd np = N.col(ip);
    const VectorXd x_old = x;
    const std::vector<Index> a_old = A;
    const std::vector<double> u_old = u;
    const MatrixXd j_old = J, r_old = R;
    const double rn_old = r_norm;
    double u_plus = 0.0;
    double s_ip = np.dot(x) - b(ip);
    bool restart = false;
    while (true) {
      const auto q = static_cast<Index>(A.size());
      const VectorXd d = J.transpose() * np;
      const VectorXd z = J.rightCols(n - q) * d.tail(n - q);
      VectorXd r(q);
      for (Index i = q - 1; i >= 0; --i) {
        double sum = d(i);
        for (Index j = i + 1; j < q; ++j) sum -= R(i, j) * r(j);
        r(i) = sum / R(i, i);
      }
      double t1 = kInf;
      std::size_t l = 0;
      for (Index k = 0; k < q; ++k) {
        if (r(k) > 0.0 && u[static_cast<std::size_t>(k)] / r(k) < t1) {
          t1 = u[static_cast<std::size_t>(k)] / r(k);
          l = static_cast<std::size_t>(k);
        }
      }
      const double zz = z.dot(np);
      const double t2 = z.squaredNorm() > eps * eps && zz > 0.0 ? -s_ip / zz : kInf;
      const double t = std::min(t1, t2);
      if (!std::isfinite(t)) {
        out.infeasible = true;
        out.x = x;
        return out;
      }
      for (Index k = 0; k < q; ++k) u[static_cast<std::size_t>(k)] = std::max(0.0, u[static_cast<std::size_t>(k)] - t * r(k));
      u_plus += t;
      if (!std::isfinite(t2)) {
        drop(l);
        continue;
      }
      x += t * z;
      if (t2 <= t1) {
        if (!add(d)) {
          x = x_old;
          A = a_old;
          u = u_old;
          J = j_old;
          R = r_old;
          r_norm = rn_old;
          for (std::size_t i = 0; i < is_active.size(); ++i) is_active[i] = 0;
          for (Index a : A) is_active[static_cast<std::size_t>(a)] = 1;
          excluded[static_cast<std::size_t>(ip)] = 1;
          restart = true;
          break;
        }
        A.push_back(ip);
        u.push_back(u_plus);
        is_active[static_cast<std::size_t>(ip)] = 1;
        std::fill(excluded.begin(), excluded.end(), 0);
        break;
      }
      drop(l);
      s_ip = np.dot(x) - b(ip);
    }
    (void)restart;
  }
  out.x = x;
  out.u = VectorXd::Zero(p);
  for (std::size_t k = 0; k < A.size(); ++k) out.u(A[k]) = u[k];
  return out;
}

}  // namespace

QpResult solve_qp_active_set(const QpProblem& p, const QpSettings& s) {
  p.validate();
  const double tol = s.tolerance;
  const Reduced r = reduce(p, tol);
  if (r.infeasible) return trivial_infeasible(p, QpMethod::active_set);
  const Index n = r.h.size();
  const Index m = r.A.rows();

  // Constraint columns: box lower, box upper, finite row lower, row upper.
  std::vector<VectorXd> cols;
  std::vector<double> rhs;
  struct Tag {
    bool box;
    Index index;
    int side;
  };
  std::vector<Tag> tags;
  for (Index i = 0; i < n; ++i) {
    VectorXd e = VectorXd::Zero(n);
    e(i) = 1.0;
    cols.push_back(e);
    rhs.push_back(r.lo(i));
    tags.push_back({true, i, -1});
    cols.push_back(-e);
    rhs.push_back(-r.hi(i));
    tags.push_back({true, i, 1});
  }
  for (Index i = 0; i < m; ++i) {
    if (std::isfinite(r.rlo(i))) {
      cols.push_back(r.A.row(i).transpose());
      rhs.push_back(r.rlo(i));
      tags.push_back({false, i, -1});
    }
    if (std::isfinite(r.rhi(i))) {
      cols.push_back(-r.A.row(i).transpose());
      rhs.push_back(-r.rhi(i));
      tags.push_back({false, i, 1});
    }
  }
  MatrixXd N(n, static_cast<Index>(cols.size()));
  VectorXd b(static_cast<Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    N.col(static_cast<Index>(c)) = cols[c];
    b(static_cast<Index>(c)) = rhs[c];
  }
  // Zero-curvature directions get a tiny curvature so G stays definite.
  const double hmax = n > 0 ? r.h.maxCoeff() : 0.0;
  const double reg = 1e-9 * std::max(hmax, 1.0);
  const VectorXd G = r.h.cwiseMax(reg);

  const int max_iter = std::max(s.max_iterations, static_cast<int>(10 * (n + N.cols()) + 100));
  const GiResult gi = n > 0 ? goldfarb_idnani(G, r.g, N, b, max_iter) : GiResult{VectorXd(), VectorXd(), false, true, 0};
  if (gi.infeasible) {
    QpResult inf = trivial_infeasible(p, QpMethod::active_set);
    inf.iterations = gi.iterations;
    return inf;
  }
  VectorXd yr = VectorXd::Zero(m), yb = VectorXd::Zero(n);
  for (std::size_t c = 0; c < tags.size(); ++c) {
    const double uc = gi.u.size() > 0 ? gi.u(static_cast<Index>(c)) : 0.0;
    if (uc == 0.0) continue;
    const double v = tags[c].side < 0 ? -uc : uc;
    if (tags[c].box) yb(tags[c].index) += v;
    else yr(tags[c].index) += v;
  }
  const VectorXd xr = gi.x.cwiseMax(r.lo).cwiseMin(r.hi);
  const Residuals res = residuals(r, xr, yr, yb);
  QpResult out = expand(p, r, xr, yr, yb);
  out.method = QpMethod::active_set;
  out.iterations = gi.iterations;
  out.primal_residual = res.primal;
  out.dual_residual = res.dual;
  out.status = gi.converged && res.primal <= tol && res.dual <= tol ? QpStatus::optimal
                                                                    : QpStatus::max_iterations;
  return out;
}

QpResult solve_qp(const QpProblem& p, const QpSettings& s, QpMethod m, const Eigen::VectorXd* warm_start) {
  if (m == QpMethod::automatic) {
    m = p.variables() <= s.active_set_limit ? QpMethod::active_set : QpMethod::admm;
  }
  if (m == QpMethod::active_set) {
    QpResult r = solve_qp_active_set(p, s);
    // Degenerate dual steps can stall; the splitting method is the fallback.
    if (r.status == QpStatus::max_iterations) {
      QpResult a = solve_qp_admm(p, s, warm_start != nullptr ? warm_start : &r.x);
      if (a.status != QpStatus::max_iterations) return a;
    }
    return r;
  }
  return solve_qp_admm(p, s, warm_start);
}

}  // namespace fleetpricer
