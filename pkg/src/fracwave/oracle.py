"""Scalar reference solutions via a weakly singular Volterra equation.

For a single spatial mode the model reduces to an ODE whose second
derivative v = u'' solves a linear Volterra equation of the second kind
with kernel lam*(t-tau) + a_gamma*(t-tau)^(-gamma)/Gamma(1-gamma).  The
solver uses product integration: v is approximated piecewise linearly
and the kernel is integrated exactly against the linear basis, which
handles the non-integrable-by-Gauss singularity at tau = t.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gamma as gamma_fn


@dataclass(frozen=True)
class VolterraProblem:
    """Mode ODE u'' + lam u + a_gamma * d_t^(gamma+1) u = f as a Volterra
    equation for v = u''.

    For gamma < 0 the fractional term applied to the linear part of u
    produces a t^(-gamma) forcing with coefficient -a_gamma*v0/Gamma(1-gamma),
    evaluated analytically (never sampled at t = 0).
    """

    gamma: float
    a_gamma: float
    lam: float
    u0: float
    v0: float
    f: Callable[[float], float] | None = None

    def __post_init__(self) -> None:
        if not (-1.0 < self.gamma < 1.0) or self.gamma == 0.0:
            raise ValueError(f"order must lie in (-1,1) excluding 0, got {self.gamma}")

    def forcing(self, t: float) -> float:
        """g(t) = f(t) - lam*(u0 + t v0) minus the singular gamma<0 term."""
        g = -self.lam * (self.u0 + t * self.v0)
        if self.f is not None:
            g += self.f(t)
        if self.gamma < 0.0 and self.v0 != 0.0 and t > 0.0:
            g -= (
                self.a_gamma
                * self.v0
                * t ** (-self.gamma)
                / gamma_fn(1.0 - self.gamma)
            )
        return g

    def v_at_zero(self) -> float:
        """v(0) = f(0) - lam*u0, the limit fixed by the equation."""
        f0 = self.f(0.0) if self.f is not None else 0.0
        return f0 - self.lam * self.u0


def _moments(p: float, delta: float, m: int) -> tuple[float, float]:
    """Exact moments of s^p over [(m-1) delta, m delta].

    mu0 = int s^p ds;  mu1 = int (m delta - s) s^p ... no: mu1 is the
    first moment int s^p * s ds shifted so the pair reproduces the
    product-trapezoid weights below.  Here mu1(m) = int (A - s) s^p ds
    with A = m delta is expressed through the raw moments.
    """
    A = m * delta
    B = (m - 1) * delta
    i0 = (A ** (p + 1.0) - B ** (p + 1.0)) / (p + 1.0)
    i1 = A * i0 - (A ** (p + 2.0) - B ** (p + 2.0)) / (p + 2.0)
    return i0, i1


class _ProductWeights:
    """Lag-indexed product-trapezoid weights for the kernel s^p.

    With v piecewise linear, the weight at lag l = n-i on v_i depends
    only on l for 1 <= i <= n-1, so the interior table is shared by all
    steps: interior[l] = mu0(l) - mu1(l)/delta + mu1(l+1)/delta.  The
    endpoint weights are w_n = mu1(1)/delta and w_0 = mu0(n) - mu1(n)/delta.
    """

    def __init__(self, p: float, delta: float, M: int) -> None:
        m = np.arange(1, M + 2, dtype=float)
        A = m * delta
        B = (m - 1.0) * delta
        i0 = (A ** (p + 1.0) - B ** (p + 1.0)) / (p + 1.0)
        i1 = A * i0 - (A ** (p + 2.0) - B ** (p + 2.0)) / (p + 2.0)
        self.delta = delta
        self.i0 = i0          # i0[m-1] = mu0(m)
        self.i1 = i1
        self.interior = i0[:-1] - i1[:-1] / delta + i1[1:] / delta
        self.w_last = i1[0] / delta

    def weights(self, n: int) -> np.ndarray:
        w = np.empty(n + 1)
        w[n] = self.w_last
        w[0] = self.i0[n - 1] - self.i1[n - 1] / self.delta
        if n >= 2:
            # interior[l-1] is the lag-l weight; node i = n - l
            w[1:n] = self.interior[: n - 1][::-1]
        return w


def _kernel_weights(p: float, delta: float, n: int) -> np.ndarray:
    """Product-trapezoid weights for int_0^{t_n} (t_n-tau)^p v(tau) dtau."""
    return _ProductWeights(p, delta, n).weights(n)


@dataclass
class VolterraSolution:
    times: np.ndarray
    v: np.ndarray
    u: np.ndarray

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "u", "v"])
            for t, u, v in zip(self.times, self.u, self.v):
                writer.writerow(["%.17g" % t, "%.17g" % u, "%.17g" % v])


def solve_volterra(problem: VolterraProblem, T: float, M: int) -> VolterraSolution:
    """Product-integration solution of the mode equation on M uniform steps.

    Each step solves the implicit scalar equation arising from the
    self-weight of the singular kernel; u is recovered from v with the
    p = 1 product weights of the same piecewise linear reconstruction.
    """
    if M < 2:
        raise ValueError(f"need at least 2 steps, got {M}")
    if T <= 0.0:
        raise ValueError(f"T must be positive, got {T}")
    delta = T / M
    gam = problem.gamma
    sing_coef = problem.a_gamma / gamma_fn(1.0 - gam)
    lin = _ProductWeights(1.0, delta, M)
    sing = _ProductWeights(-gam, delta, M)
    times = delta * np.arange(M + 1)
    v = np.empty(M + 1)
    v[0] = problem.v_at_zero()
    for n in range(1, M + 1):
        w = problem.lam * lin.weights(n) + sing_coef * sing.weights(n)
        known = float(np.dot(w[:n], v[:n]))
        v[n] = (problem.forcing(times[n]) - known) / (1.0 + w[n])
    u = np.empty(M + 1)
    u[0] = problem.u0
    for n in range(1, M + 1):
        u[n] = problem.u0 + times[n] * problem.v0 + float(
            np.dot(lin.weights(n), v[: n + 1])
        )
    return VolterraSolution(times=times, v=v, u=u)


def asymptotic_check(problem: VolterraProblem, T: float, M: int,
                     window: tuple[int, int] = (4, 64)) -> float:
    """Fitted singular exponent of v - (f - lam*u0) near t = 0.

    The expansion of v has leading residual t^(1-gamma) for positive
    orders and t^(-gamma) (when v0 != 0) for negative ones; the exponent
    is fitted by least squares on log residuals over grid indices in the
    given window.
    """
    sol = solve_volterra(problem, T, M)
    lo, hi = window
    if hi >= M:
        raise ValueError(f"fit window {window} exceeds grid length {M}")
    idx = np.arange(lo, hi + 1)
    base = problem.v_at_zero()
    if problem.f is not None:
        resid = np.array(
            [sol.v[i] - (problem.f(sol.times[i]) - problem.lam * problem.u0)
             for i in idx]
        )
    else:
        resid = sol.v[idx] - base
    mags = np.abs(resid)
    if np.any(mags == 0.0):
        raise RuntimeError("zero residual in fit window; exponent undefined")
    slope = np.polyfit(np.log(sol.times[idx]), np.log(mags), 1)[0]
    return float(slope)


def second_difference_error(g, t: float, kappa: float) -> tuple[float, float]:
    """Second-difference error and its classical fourth-derivative bound.

    g supplies callables g.value, g.d2, g.d4.  Returns (actual error of
    the centered second difference against g'', kappa^2/12 * max |g''''|
    over [t-kappa, t+kappa] sampled densely).
    """
    if kappa <= 0.0 or t - kappa < 0.0:
        raise ValueError("need kappa > 0 and t >= kappa")
    second = (g.value(t + kappa) - 2.0 * g.value(t) + g.value(t - kappa)) / kappa**2
    err = abs(second - g.d2(t))
    ts = np.linspace(t - kappa, t + kappa, 33)
    bound = kappa**2 / 12.0 * max(abs(g.d4(s)) for s in ts)
    return err, bound
