"""Independent reference values frozen into the C++ tests.

Run with `python3 tests/oracles/oracles.py`. Uses mpmath/scipy/numpy only; no
code is shared with the library.
"""
from fractions import Fraction
import math

import mpmath as mp
import numpy as np
from scipy.stats import binom

mp.mp.dps = 40


def Phi(x):
    return mp.ncdf(x)


def craig_geometric(rho, n0=0):
    # Phi(-rho sqrt n) = (1/pi) int_0^{pi/2} exp(-rho^2 n / (2 sin^2 t)) dt, summed
    # over n >= n0 as a geometric series under the integral.
    def f(t):
        a = rho**2 / (2 * mp.sin(t) ** 2)
        return mp.exp(-a * n0) / (-mp.expm1(-a))
    return mp.quad(f, [0, mp.pi / 8, mp.pi / 4, mp.pi / 2]) / mp.pi


def craig_log(eps, sigma=1):
    # sum_{n>=1} Phi(-eps sqrt n / sigma) / n = (1/pi) int -log(1 - e^{-a}) dt
    r = mp.mpf(eps) / sigma
    def f(t):
        a = r**2 / (2 * mp.sin(t) ** 2)
        return -mp.log(-mp.expm1(-a))
    return mp.quad(f, [0, mp.mpf(1) / 10**6, mp.mpf(1) / 10**3, mp.pi / 8, mp.pi / 2]) / mp.pi


def section(name):
    print(f"\n# {name}")


section("phi / mills")
print("Phi(-1) =", mp.nstr(Phi(-1), 25))
x = mp.mpf(1)
pdf = mp.npdf(x)
print("mills(1) =", mp.nstr(x / (x * x + 1) * pdf, 20), mp.nstr(pdf / x, 20))

section("euler-maclaurin example: sum_{n>=0} Phi(-0.5 sqrt n)")
direct = mp.nsum(lambda n: Phi(-mp.mpf('0.5') * mp.sqrt(n)), [0, mp.inf])
print("direct =", mp.nstr(direct, 20), " craig =", mp.nstr(craig_geometric(mp.mpf('0.5')), 20))

section("heyde gaussian sums rho^2 * sum_{n>=0} Phi(-rho sqrt n)")
for rho in ['0.2', '0.1', '0.05', '0.02', '3']:
    r = mp.mpf(rho)
    v = craig_geometric(r)
    print(f"rho={rho}: value={mp.nstr(v, 20)} scaled={mp.nstr(r*r*v, 20)}")

section("tail sums rho^2 * sum_{n >= 8/rho^2} Phi(-rho sqrt n)")
for rho in ['0.2', '0.1', '0.05']:
    r = mp.mpf(rho)
    n0 = int(mp.ceil(8 / r**2))
    v = craig_geometric(r, n0)
    print(f"rho={rho}: start={n0} value={mp.nstr(r*r*v, 20)}")
K = mp.mpf(8)
print("limit K=8:", mp.nstr((1 - K) * Phi(-mp.sqrt(K)) + mp.sqrt(K) * mp.npdf(mp.sqrt(K)), 20))

section("log-weighted sums sum_{n>=1} Phi(-eps sqrt n)/n")
for eps in ['1e-2', '1e-3', '1e-4']:
    v = craig_log(mp.mpf(eps))
    print(f"eps={eps}: IV={mp.nstr(v, 20)} ratio={mp.nstr(v / -mp.log(mp.mpf(eps)), 20)}")

section("gaussian heyde series eps^2 * sum_{n>=1} 2 Phi(-eps sqrt n)")
pts = []
for eps in ['0.1', '0.05', '0.02']:
    e = mp.mpf(eps)
    lam = 2 * (craig_geometric(e) - mp.mpf(1) / 2)
    pts.append((float(e), float(e * e * lam)))
    print(f"eps={eps}: Lambda={mp.nstr(lam, 20)} scaled={mp.nstr(e*e*lam, 20)}")
xs = np.array([p[0] for p in pts]); ys = np.array([p[1] for p in pts])
b, a = np.polyfit(xs, ys, 1)
print("fit intercept =", repr(float(a)), "slope =", repr(float(b)))

section("binomial tails with the double predicate (k - n/2)/n >= eps")


def bern_lambda(n, eps):
    kp = next((k for k in range(n + 1) if (float(k) - 0.5 * n) / n - 0.0 >= eps), None)
    km = max((k for k in range(n + 1) if (float(k) - 0.5 * n) / n - 0.0 <= -eps), default=None)
    plus = 0.0 if kp is None else float(binom.sf(kp - 1, n, 0.5))
    minus = 0.0 if km is None else float(binom.cdf(km, n, 0.5))
    return plus, minus


exact = sum(Fraction(math.comb(100, k), 2**100) for k in range(60, 101))
print("P(Bin(100,1/2) >= 60) =", float(exact))
print("lambda(100, 0.1) =", bern_lambda(100, 0.1))
for n, eps in [(10, 0.1), (25, 0.2), (50, 0.05), (200, 0.1)]:
    print(f"lambda({n}, {eps}) =", bern_lambda(n, eps))


def bern_rate(e):
    return (0.5 + e) * math.log1p(2 * e) + (0.5 - e) * math.log1p(-2 * e)


def bern_series(eps, tol=1e-3):
    rate = bern_rate(eps)
    total = 0.0
    lw = 0.0
    n = 0
    while True:
        n += 1
        p, m = bern_lambda(n, eps)
        total += p + m
        lw += (p + m) / n
        tail = 2 * math.exp(-rate * n) / (-math.expm1(-rate))
        if tail <= tol * total:
            return total, lw, n


bpts = []
for eps in [0.1, 0.05, 0.02]:
    v, lw, n = bern_series(eps)
    bpts.append((eps, eps * eps * v))
    print(f"bernoulli eps={eps}: Lambda={v!r} N={n} scaled={eps*eps*v!r}")
xs = np.array([p[0] for p in bpts]); ys = np.array([p[1] for p in bpts])
b, a = np.polyfit(xs, ys, 1)
print("bernoulli fit intercept =", repr(float(a)))

section("continued fractions")
mp.mp.dps = 60
x = mp.pi - 3
digits = []
for _ in range(8):
    a = int(mp.floor(1 / x))
    digits.append(a)
    x = 1 / x - a
print("pi-3 digits:", digits)
p0, q0, p1, q1 = 1, 0, 0, 1
for a in digits[:4]:
    p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
    print(f"  {p1}/{q1}", Fraction(1, 1) / (digits[0] + Fraction(1, 1)) if False else "")
x = mp.e - 2
d = []
for _ in range(10):
    a = int(mp.floor(1 / x)); d.append(a); x = 1 / x - a
print("e-2 digits:", d)
x = mp.sqrt(2) - 1
d = []
for _ in range(6):
    a = int(mp.floor(1 / x)); d.append(a); x = 1 / x - a
print("sqrt2-1 digits:", d)
print("golden |x - 5/8| =", mp.nstr(abs((mp.sqrt(5) - 1) / 2 - mp.mpf(5) / 8), 20),
      "bounds", 1 / (2 * 13**2), 1 / 8**2)
print("levy gamma =", mp.nstr(mp.pi**2 / (12 * mp.log(2)), 20))

section("pressure at beta = 2 (Nystrom on Chebyshev-Gauss nodes, Hurwitz tail)")
mp.mp.dps = 20


def pressure(beta, N=32, K=2000):
    # barycentric interpolation on first-kind Chebyshev nodes of [0, 1]
    j = np.arange(N)
    t = np.cos((2 * j + 1) * np.pi / (2 * N))
    nodes = (1 - t) / 2
    w = (-1.0) ** j * np.sin((2 * j + 1) * np.pi / (2 * N))

    def interp_matrix(ys):
        M = np.zeros((len(ys), N))
        for r, y in enumerate(ys):
            diff = y - nodes
            hit = np.isclose(diff, 0, atol=1e-300)
            if hit.any():
                M[r, np.argmax(hit)] = 1
            else:
                c = w / diff
                M[r] = c / c.sum()
        return M

    A = np.zeros((N, N))
    ks = np.arange(1, K + 1)
    for r, x in enumerate(nodes):
        ys = 1.0 / (ks + x)
        A[r] = (ys ** (2 * beta)) @ interp_matrix(ys)
        # k > K: g(1/(k+x)) ~ Taylor of the interpolant at 0 to second order
        e0 = interp_matrix([0.0])[0]
        h = 1e-4
        e1 = (interp_matrix([h])[0] - e0) / h
        z0 = float(mp.zeta(2 * beta, K + 1 + x))
        z1 = float(mp.zeta(2 * beta + 1, K + 1 + x))
        A[r] += z0 * e0 + z1 * e1
    ev = np.linalg.eigvals(A)
    lead = ev[np.argmax(ev.real)].real
    return math.log(lead)


print("P(1) =", pressure(1.0))
print("P(2) =", repr(pressure(2.0)))
print("P(0.9), P(1.1) =", pressure(0.9), pressure(1.1))
