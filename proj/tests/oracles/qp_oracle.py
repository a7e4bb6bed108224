# Diagonal QP reference: min 0.5 x'diag(h)x + g'x, row_lo <= A x <= row_hi, lo <= x <= hi.
import cvxpy as cp
import numpy as np

h = np.array([2.0, 1.0, 4.0, 0.5, 3.0])
g = np.array([-3.0, 1.0, -2.0, -1.5, 0.5])
A = np.array([[1.0, 1.0, 1.0, 0.0, 0.0],
              [0.0, 1.0, -1.0, 2.0, 0.0],
              [1.0, 0.0, 0.0, 1.0, 1.0]])
row_lo = np.array([-np.inf, -1.0, 0.5])
row_hi = np.array([1.5, 1.0, np.inf])
lo = np.array([0.0, -1.0, 0.0, 0.0, -0.5])
hi = np.array([1.0, 1.0, 1.0, 2.0, 0.5])
x = cp.Variable(5)
cons = [A[0] @ x <= row_hi[0], A[1] @ x >= row_lo[1], A[1] @ x <= row_hi[1], A[2] @ x >= row_lo[2], x >= lo, x <= hi]
prob = cp.Problem(cp.Minimize(0.5 * cp.sum(cp.multiply(h, cp.square(x))) + g @ x), cons)
prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
print("x", [repr(round(float(v), 10)) for v in x.value])
print("obj", repr(prob.value))
