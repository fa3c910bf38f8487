"""Gibbs on a conjugate linear model against its closed-form posterior.

With a Gaussian likelihood and prior the posterior is Gaussian, so the
chain's long-run mean and covariance can be checked exactly.

    python3 demos/conjugate_gibbs.py
"""

import numpy as np

from glmcmc import GlmFamily, Posterior, Prior, SynthConfig, make_dataset
from glmcmc.diagnostics import ess
from glmcmc.samplers import GibbsParams, run_gibbs

n, d = 100, 5
fam = GlmFamily.linear(1.0)
X, Y = make_dataset(SynthConfig(n, d, np.eye(d), np.full(d, 0.4), fam, seed=3))
post = Posterior(fam, Prior.isotropic(1.0, d), X, Y)

H = post.hess(np.zeros(d))
mean, cov = np.linalg.solve(H, X.T @ Y), np.linalg.inv(H)
trace = run_gibbs(post, GibbsParams(50_000, 1e6), mean, seed=3)[1:]

sd = np.sqrt(np.diag(cov))
ess_j = np.array([ess(trace[:, j]) for j in range(d)])
print("coordinate  exact mean  chain mean  |error| / (sd/sqrt(ESS))")
for j in range(d):
    z = abs(trace[:, j].mean() - mean[j]) / (sd[j] / np.sqrt(ess_j[j]))
    print(f"{j + 1:10d}  {mean[j]:10.4f}  {trace[:, j].mean():10.4f}  {z:8.2f}")
rel = np.linalg.norm(np.cov(trace.T) - cov) / np.linalg.norm(cov)
print(f"relative covariance error {rel:.2%}, ESS per coordinate {np.round(ess_j).astype(int)}")
