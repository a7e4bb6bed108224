#pragma once

#include <Eigen/Dense>
#include <string>

namespace fleetpricer {

/// minimize 0.5 sum h_i x_i^2 + g'x
/// s.t.     row_lo <= A x <= row_hi   (entries may be infinite)
///          lo <= x <= hi             (finite)
/// with h >= 0 (separable convex objective).
struct QpProblem {
  Eigen::VectorXd h;
  Eigen::VectorXd g;
  Eigen::MatrixXd A;
  Eigen::VectorXd row_lo;
  Eigen::VectorXd row_hi;
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  Eigen::Index variables() const { return h.size(); }
  Eigen::Index rows() const { return A.rows(); }
  void validate() const;
  double objective(const Eigen::VectorXd& x) const;
  /// Largest bound violation of x over rows and box.
  double max_violation(const Eigen::VectorXd& x) const;
};

enum class QpStatus { optimal, max_iterations, infeasible };
enum class QpMethod { automatic, admm, active_set };

std::string to_string(QpStatus s);
std::string to_string(QpMethod m);
QpMethod parse_qp_method(const std::string& name);

struct QpSettings {
  double tolerance = 1e-8;
  int max_iterations = 10000;
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;
  bool polish = true;
  int active_set_limit = 50;  // automatic picks active-set at or below this size
};

struct QpResult {
  QpStatus status = QpStatus::max_iterations;
  QpMethod method = QpMethod::admm;
  Eigen::VectorXd x;
  Eigen::VectorXd y_row;  // > 0 on active upper rows, < 0 on active lower rows
  Eigen::VectorXd y_box;
  int iterations = 0;
  // Residuals are measured on the internally scaled problem (unit row
  // norms, objective scaled to unit magnitude).
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool polished = false;
};

QpResult solve_qp_admm(const QpProblem& p, const QpSettings& s = {},
                       const Eigen::VectorXd* warm_start = nullptr);
QpResult solve_qp_active_set(const QpProblem& p, const QpSettings& s = {});
QpResult solve_qp(const QpProblem& p, const QpSettings& s = {}, QpMethod m = QpMethod::automatic,
                  const Eigen::VectorXd* warm_start = nullptr);

}  // namespace fleetpricer
