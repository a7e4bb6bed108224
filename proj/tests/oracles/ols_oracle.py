# Reference values for the regression tests (scipy / statsmodels).
import numpy as np
from scipy import stats
import statsmodels.api as sm
from statsmodels.stats.diagnostic import het_breuschpagan
from statsmodels.stats.stattools import jarque_bera

x = np.array([0.85, 0.88, 0.91, 0.94, 0.97, 1.00, 1.03, 1.06, 1.09, 1.12, 1.15, 0.95])
q = np.array([0.31, 0.295, 0.27, 0.262, 0.25, 0.238, 0.225, 0.221, 0.205, 0.199, 0.188, 0.259])
lx, ly = np.log(x), np.log(q)
r = stats.linregress(lx, ly)
print("loglog", repr(r.slope), repr(r.intercept), repr(r.stderr), repr(r.pvalue), repr(r.rvalue**2))
X = sm.add_constant(lx)
fit = sm.OLS(ly, X).fit()
print("bp", repr(het_breuschpagan(fit.resid, X, robust=True)[1]))
print("jb", repr(jarque_bera(fit.resid)[1]))
