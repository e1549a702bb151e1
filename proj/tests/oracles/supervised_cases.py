"""Brute-force conditional recursions for the n=2 supervised test cases.

Copula densities are evaluated from the bivariate normal pdf on the
probability scale; nothing is shared with the C++ score formulas.
"""
import numpy as np
from scipy.stats import norm, multivariate_normal


def cop(u, v, rho):
    a, b = norm.ppf(u), norm.ppf(v)
    biv = multivariate_normal(mean=[0, 0], cov=[[1, rho], [rho, 1]]).pdf([a, b])
    return biv / (norm.pdf(a) * norm.pdf(b))


def hcond(u, v, rho):
    return norm.cdf((norm.ppf(u) - rho * norm.ppf(v)) / np.sqrt(1 - rho * rho))


def alpha(i):
    return (2 - 1 / i) / (i + 1)


def rhos(x, xi, rho0, ls):
    d = len(x)
    out = []
    for j in range(d + 1):
        s = sum(((x[k] - xi[k]) / ls[k]) ** 2 for k in range(j))
        out.append(rho0[j] * np.exp(-s))
    return out


def beta(x, xi, rho0, ls, i):
    r = rhos(x, xi, rho0, ls)
    c = np.prod([cop(norm.cdf(x[j]), norm.cdf(xi[j]), r[j]) for j in range(len(x))])
    a = alpha(i)
    return a * c / (1 - a + a * c), r[-1]


def regression(X, y, rho0, ls, xq, yq):
    n = len(y)
    pts = [(X[k], y[k]) for k in range(n)] + [(xq, yq)]
    u = [norm.cdf(p[1]) for p in pts]
    lp = [norm.logpdf(p[1]) for p in pts]
    for i in range(n):
        v = u[i]
        for k in range(i + 1, len(pts)):
            b, ry = beta(pts[k][0], X[i], rho0, ls, i + 1)
            lp[k] += np.log(1 - b + b * cop(u[k], v, ry))
            u[k] = (1 - b) * u[k] + b * hcond(u[k], v, ry)
    return -sum(lp[:n]), lp[n], u[n]


def bfun(q, r, rho, same):
    if same:
        return 1 - rho + rho * min(q, r) / (q * r)
    return 1 - rho + rho * (q - min(q, 1 - r)) / (q * r)


def classification(X, y, rho0, ls, xq):
    n = len(y)
    xs = list(X) + [xq]
    q = [0.5] * (n + 1)
    nll = 0.0
    for i in range(n):
        r = q[i] if y[i] == 1 else 1 - q[i]
        nll -= np.log(r)
        for k in range(i + 1, n + 1):
            b, ry = beta(xs[k], X[i], rho0, ls, i + 1)
            q[k] = q[k] * (1 - b + b * bfun(q[k], r, ry, y[i] == 1))
    return nll, q[n]


if __name__ == "__main__":
    np.set_printoptions(precision=17)
    # d=1, constant rho0 0.8 (no kernel)
    nll, lq, uq = regression([[0.5], [-0.3]], [0.2, 1.1], [0.8, 0.8], [np.inf], [0.1], -0.4)
    print("reg1 nll", repr(nll), "logp", repr(lq), "cdf", repr(uq))
    # d=2, rbf, per-dim rho0
    rho0, ls = [0.7, 0.8, 0.9], [1.3, 0.8]
    X = [[0.5, -1.0], [-0.3, 0.6]]
    nll, lq, uq = regression(X, [0.2, 1.1], rho0, ls, [0.1, 0.2], -0.4)
    print("reg2 nll", repr(nll), "logp", repr(lq), "cdf", repr(uq))
    nll, pq = classification(X, [1, 0], rho0, ls, [0.1, 0.2])
    print("cls2 nll", repr(nll), "proba", repr(pq))
    nll, pq = classification(X, [1, 1], rho0, ls, [0.4, -0.5])
    print("cls2b nll", repr(nll), "proba", repr(pq))
    print("b example", repr(bfun(0.3, 0.6, 0.5, True)))
