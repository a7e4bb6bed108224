# Posterior of beta_1..T for the random-walk slope model, solved as one
# dense Gaussian system (no Kalman recursion), intercepts concentrated out
# by per-period centering.
import numpy as np

X = [[-0.12, -0.05, 0.0, 0.06, 0.11],
     [-0.10, -0.02, 0.03, 0.08, 0.13],
     [-0.14, -0.07, -0.01, 0.05, 0.09],
     [-0.09, -0.04, 0.02, 0.07, 0.12]]
Y = [[-1.30, -1.38, -1.47, -1.52, -1.60],
     [-1.25, -1.37, -1.45, -1.55, -1.66],
     [-1.10, -1.27, -1.40, -1.55, -1.62],
     [-1.21, -1.33, -1.49, -1.63, -1.73]]
obs_sd, state_sd, prior_mean, prior_sd = 0.03, 0.2, -1.0, 10.0
T = len(X)
P = np.zeros((T, T)); b = np.zeros(T)
P[0, 0] += 1 / prior_sd**2; b[0] += prior_mean / prior_sd**2
for t in range(1, T):
    w = 1 / state_sd**2
    P[t, t] += w; P[t-1, t-1] += w; P[t, t-1] -= w; P[t-1, t] -= w
for t in range(T):
    x = np.array(X[t]); y = np.array(Y[t])
    xc = x - x.mean(); yc = y - y.mean()
    P[t, t] += xc @ xc / obs_sd**2
    b[t] += xc @ yc / obs_sd**2
S = np.linalg.inv(P)
m = S @ b
print("mean", [repr(float(v)) for v in m])
print("var", [repr(float(v)) for v in np.diag(S)])
