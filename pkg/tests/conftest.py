import numpy as np
import pytest

from glmcmc.families import GlmFamily
from glmcmc.posterior import Posterior
from glmcmc.priors import Prior


def make_posterior(family, prior, n=40, d=3, seed=0, theta_star=None):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    th = np.full(d, 0.3) if theta_star is None else np.asarray(theta_star)
    z = X @ th
    if family.kind == "linear":
        Y = z + np.sqrt(family.dispersion) * rng.standard_normal(n)
    elif family.kind == "logistic":
        Y = (rng.random(n) < 1.0 / (1.0 + np.exp(-z))).astype(float)
    else:
        Y = rng.poisson(np.exp(np.minimum(z, 5.0))).astype(float)
    return Posterior(family, prior, X, Y)


FAMILIES = {
    "linear": GlmFamily.linear(1.3),
    "logistic": GlmFamily.logistic(),
    "poisson": GlmFamily.poisson(),
    "poisson_clipped": GlmFamily.poisson(1.5),
}


def priors(d):
    return {
        "flat": Prior.flat(),
        "gaussian": Prior.gaussian(np.diag(np.arange(1.0, d + 1.0)) + 0.1),
        "zellner": Prior.zellner(),
        "student_t": Prior.student_t(3.0, Q=np.eye(d)),
        "student_t_data": Prior.student_t(4.0, scale=0.05),
        "student_t_indep": Prior.student_t_indep(2.5, np.linspace(0.5, 2.0, d)),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
