"""Theory schedules at desk scale, and what a capped run looks like.

Builds a logistic-regression posterior with a Gaussian prior, prints the
iteration counts and step sizes the mixing bounds prescribe, then runs a
short randomized-midpoint HMC chain and a Gibbs chain from the prescribed
starting distributions.

    python3 demos/schedule_and_sample.py
"""

import numpy as np

from glmcmc import GlmFamily, Posterior, Prior, SynthConfig, find_map, make_dataset
from glmcmc import rng as rngmod
from glmcmc.samplers import (feasible_init, gibbs_params_from_theory, hmc_params_from_theory, run_gibbs,
                             run_hmc, theory_constants, with_inner_steps)

n, d, eps = 200, 3, 0.1
theta_star = np.array([0.6, -0.3, 0.2])
fam = GlmFamily.logistic()
sc = SynthConfig(n, d, np.eye(d), theta_star, fam, seed=1)
X, Y = make_dataset(sc)
post = Posterior(fam, Prior.isotropic(1.0, d), X, Y)

res = find_map(post, theta_star=theta_star)
print(f"MAP {np.round(res.theta_map, 3)}  distance to truth {res.distance_to_truth:.3f}  "
      f"(bound lam_max^-1/2 = {sc.stats.lam_max ** -0.5:.3f})")

tc = theory_constants(fam, post.prior.curvature_constant(d, X), n, d, sc.stats.lam_max, sc.stats.kappa)
hmc = hmc_params_from_theory(tc, eps, u=1)
gibbs = gibbs_params_from_theory(tc, eps)
print(f"L_sc = {tc.L_sc:.3f}, C_bar = {tc.C_bar:.1f}")
print(f"HMC:   N = {hmc.N:,}, T/h = {hmc.n_steps:,}, h = {hmc.h:.3e}, gradients N T/h = {hmc.N * hmc.n_steps:,}")
print(f"Gibbs: N = {gibbs.N:,} coordinate updates")

# the prescribed schedules are far too long to run here; take 300 iterations
# with the same integration time split into 32 steps
short = with_inner_steps(hmc, 32)
g = rngmod.stream(1, "init")
v = g.standard_normal(d)
start = res.theta_map + hmc.init_radius * g.random() ** (1 / d) * v / np.linalg.norm(v)
trace, calls = run_hmc(post, short, start, n_iter=300, seed=1)
print(f"HMC: 300 iterations, {calls} gradient calls, mean {np.round(trace[150:, 0].mean(axis=0), 3)}")
# T + h is about 1 / sqrt(8 L), tiny next to the posterior width, so a few
# hundred iterations barely leave the start; the full N is what mixes
print(f"     integration time per iteration {short.T + short.h:.2e}, posterior sd about "
      f"{np.sqrt(np.diag(np.linalg.inv(post.hess(res.theta_map)))).max():.2f}")

theta0 = feasible_init(res.theta_map, gibbs.init_precision, rngmod.stream(1, "init", 1))
gt = run_gibbs(post, gibbs, res.theta_map, n_iter=3000, seed=1, theta0=theta0)
print(f"Gibbs: 3000 updates, mean {np.round(gt[1500:].mean(axis=0), 3)}")
