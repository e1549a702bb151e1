"""Straight-line prequential recursion for small cases, using scipy only.

Prints the v tensor and prequential log densities for the fixed inputs used in
test_engine.cpp (identity permutation, constant rho0 = 0.8).
"""
import numpy as np
from scipy.stats import norm, multivariate_normal


def cop(u, v, rho):
    a, b = norm.ppf(u), norm.ppf(v)
    biv = multivariate_normal(mean=[0, 0], cov=[[1, rho], [rho, 1]]).pdf([a, b])
    return biv / (norm.pdf(a) * norm.pdf(b))


def hcond(u, v, rho):
    return norm.cdf((norm.ppf(u) - rho * norm.ppf(v)) / np.sqrt(1 - rho * rho))


def run(x, rho):
    n, d = x.shape
    u = norm.cdf(x).copy()
    logp = norm.logpdf(x).sum(axis=1)
    v = np.zeros_like(u)
    for i in range(1, n + 1):
        a = (2 - 1 / i) / (i + 1)
        v[i - 1] = u[i - 1]
        for k in range(i, n):
            cs = [cop(u[k, j], v[i - 1, j], rho) for j in range(d)]
            new = u[k].copy()
            for j in range(d):
                pre = np.prod(cs[:j])
                new[j] = ((1 - a) * u[k, j] + a * hcond(u[k, j], v[i - 1, j], rho) * pre) / (1 - a + a * pre)
            logp[k] += np.log(1 - a + a * np.prod(cs))
            u[k] = new
    return v, logp


if __name__ == "__main__":
    x = np.array([[0.3, -1.1], [1.2, 0.4], [-0.7, 0.9]])
    v, logp = run(x, 0.8)
    np.set_printoptions(precision=17)
    print("v", repr(v.ravel()))
    print("logp", repr(logp))
    # two-point d=1 hand case
    x2 = np.array([[0.4], [-0.9]])
    _, lp2 = run(x2, 0.7)
    print("nll2", repr(-lp2.sum()))
    hand = -norm.logpdf(0.4) - np.log((0.5 + 0.5 * cop(norm.cdf(-0.9), norm.cdf(0.4), 0.7)) * norm.pdf(-0.9))
    print("hand2", repr(hand))
    # query evaluated after the 3-point fit
    z = np.array([[0.1, 0.2]])
    zz = np.vstack([x, z])
    _, lpz = run(zz, 0.8)
    print("query", repr(lpz[-1]))
