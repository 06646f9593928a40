"""Manufactured-solution experiment driver.

Builds the three manufactured cases (trigonometric 1D and 2D, and a 1D
solution with the characteristic t^(2+ceil(gamma)-gamma) startup
singularity), computes the two error norms used to report convergence,
runs refinement ladders with h proportional to kappa, and produces the
damping demonstration and the positivity-constant comparison table.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gamma as gamma_fn

from fracwave.fem import (
    FemSystem,
    ScalarField,
    assemble,
    build_mesh,
    l2_norm,
)
from fracwave.fraccalc import (
    FracParams,
    caputo_monomial,
    caputo_quadrature,
    caputo_series,
    constants_table,
    cos_monomials,
    merge_series,
    sin_monomials,
)
from fracwave.solver import SeparableSource, SimConfig, Trajectory, run

# The Taylor series of the trig temporal factor loses accuracy to
# cancellation once the largest phase exceeds roughly this many radians;
# beyond it the quadrature form of the same derivative takes over.
_SERIES_PHASE_LIMIT = 12.0


@dataclass
class TemporalFactor:
    """Scalar time factor with closed-form derivatives and its fractional
    derivative of order gamma+1."""

    value: Callable[[float], float]
    d1: Callable[[float], float]
    d2: Callable[[float], float]
    frac: Callable[[float], float]


def _trig_temporal(gamma: float) -> TemporalFactor:
    w1, w2 = 24.0, 12.0
    series = merge_series(sin_monomials(w1), cos_monomials(w2))
    value = lambda t: math.sin(w1 * t) + math.cos(w2 * t)
    d1 = lambda t: w1 * math.cos(w1 * t) - w2 * math.sin(w2 * t)
    d2 = lambda t: -w1**2 * math.sin(w1 * t) - w2**2 * math.cos(w2 * t)
    cache: dict = {}

    def frac(t: float) -> float:
        if t not in cache:
            if t == 0.0:
                cache[t] = 0.0
            elif w1 * t <= _SERIES_PHASE_LIMIT:
                cache[t] = caputo_series(series, gamma + 1.0, t)
            elif gamma > 0.0:
                cache[t] = caputo_quadrature(gamma + 1.0, t, d2f=d2)
            else:
                cache[t] = caputo_quadrature(gamma + 1.0, t, df=d1)
        return cache[t]

    return TemporalFactor(value=value, d1=d1, d2=d2, frac=frac)


def _poly_temporal(frac_params: FracParams) -> TemporalFactor:
    """1 + t + t^2 - a_gamma/Gamma(3-gamma+ceil(gamma)) t^(2+ceil(gamma)-gamma)."""
    gamma = frac_params.gamma
    ceil_g = math.ceil(gamma)
    mu = 2.0 + ceil_g - gamma
    c = -frac_params.a_gamma / gamma_fn(3.0 - gamma + ceil_g)
    value = lambda t: 1.0 + t + t * t + c * t**mu
    d1 = lambda t: 1.0 + 2.0 * t + (c * mu * t ** (mu - 1.0) if t > 0.0 else 0.0)
    d2 = lambda t: 2.0 + (
        c * mu * (mu - 1.0) * t ** (mu - 2.0) if t > 0.0 else 0.0
    )
    terms = ((0.0, 1.0), (1.0, 1.0), (2.0, 1.0), (mu, c))

    def frac(t: float) -> float:
        if t == 0.0:
            return 0.0
        return sum(
            coef * caputo_monomial(gamma + 1.0, m, t) for m, coef in terms
        )

    return TemporalFactor(value=value, d1=d1, d2=d2, frac=frac)


@dataclass
class ManufacturedCase:
    """Exact solution spatial(x) * temporal(t) plus everything the solver
    and error norms need: the spatial Laplacian coefficient (spatial is a
    Dirichlet eigenfunction, -lap(spatial) = lap_coef * spatial), the
    temporal derivatives, and the derived source factor."""

    name: str
    dimension: int
    domain: tuple
    coupling: float
    spatial: ScalarField
    lap_coef: float
    temporal: TemporalFactor
    frac: FracParams
    alpha: float | None       # startup exponent class, None when smooth

    def source_temporal(self, t: float) -> float:
        """G(t) with f(x,t) = G(t) spatial(x)."""
        return (
            self.temporal.d2(t)
            + self.lap_coef * self.temporal.value(t)
            + self.frac.a_gamma * self.temporal.frac(t)
        )

    def exact(self, t: float) -> float:
        return self.temporal.value(t)

    def exact_d1(self, t: float) -> float:
        return self.temporal.d1(t)


def _spatial_1d() -> ScalarField:
    return ScalarField(
        value=lambda x: np.sin(np.pi * x[:, 0]),
        gradient=lambda x: (np.pi * np.cos(np.pi * x[:, 0]))[:, None],
    )


def _spatial_2d() -> ScalarField:
    def grad(x):
        return np.column_stack(
            [
                np.pi * np.cos(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1]),
                np.pi * np.sin(np.pi * x[:, 0]) * np.cos(np.pi * x[:, 1]),
            ]
        )

    return ScalarField(
        value=lambda x: np.sin(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1]),
        gradient=grad,
    )


def build_case(name: str, frac: FracParams) -> ManufacturedCase:
    if name == "smooth1d":
        return ManufacturedCase(
            name=name, dimension=1, domain=(0.0, 1.0), coupling=6.0,
            spatial=_spatial_1d(), lap_coef=math.pi**2,
            temporal=_trig_temporal(frac.gamma), frac=frac, alpha=None,
        )
    if name == "smooth2d":
        return ManufacturedCase(
            name=name, dimension=2, domain=((-1.0, 1.0), (-1.0, 1.0)),
            coupling=10.0, spatial=_spatial_2d(), lap_coef=2.0 * math.pi**2,
            temporal=_trig_temporal(frac.gamma), frac=frac, alpha=None,
        )
    if name == "nonsmooth1d":
        return ManufacturedCase(
            name=name, dimension=1, domain=(0.0, 1.0), coupling=6.0,
            spatial=_spatial_1d(), lap_coef=math.pi**2,
            temporal=_poly_temporal(frac), frac=frac,
            alpha=math.ceil(frac.gamma) - frac.gamma,
        )
    raise ValueError(f"unknown case {name!r}")


def verify_case(case: ManufacturedCase, n_samples: int = 20,
                tol: float = 1e-7, seed: int = 7) -> float:
    """Cross-check the assembled source against the quadrature-evaluated
    operator at random times; returns the worst deviation scaled by the
    sample magnitude (sources reach O(10^3), so the comparison is
    relative once |ref| exceeds 1)."""
    rng = np.random.default_rng(seed)
    gamma = case.frac.gamma
    worst = 0.0
    for t in rng.uniform(0.05, 1.0, size=n_samples):
        t = float(t)
        if gamma > 0.0:
            fr = caputo_quadrature(gamma + 1.0, t, d2f=case.temporal.d2)
        else:
            fr = caputo_quadrature(gamma + 1.0, t, df=case.temporal.d1)
        ref = (
            case.temporal.d2(t)
            + case.lap_coef * case.temporal.value(t)
            + case.frac.a_gamma * fr
        )
        dev = abs(case.source_temporal(t) - ref) / max(1.0, abs(ref))
        worst = max(worst, dev)
    if worst > tol:
        raise RuntimeError(
            f"source inconsistency {worst:.3e} exceeds {tol:.1e} for {case.name}"
        )
    return worst


def singular_exponent_of_source(case: ManufacturedCase,
                                t_lo: float = 1e-9, t_hi: float = 1e-7,
                                n_pts: int = 12) -> float:
    """Fitted exponent of the non-polynomial part of G near t = 0.

    Only defined for the startup-singularity case, whose smooth part is
    exactly the quadratic 2 + lap_coef*(1 + t + t^2): every other
    contribution to G carries a non-integer power of t.  Subtracting the
    quadratic in closed form exposes the leading singular power.
    """
    if case.alpha is None:
        raise ValueError("singular exponent only defined for nonsmooth cases")
    ts = np.geomspace(t_lo, t_hi, n_pts)
    smooth = 2.0 + case.lap_coef * (1.0 + ts + ts * ts)
    resid = np.abs(
        np.array([case.source_temporal(float(t)) for t in ts]) - smooth
    )
    if np.any(resid == 0.0):
        raise RuntimeError("vanishing singular residual; exponent undefined")
    return float(np.polyfit(np.log(ts), np.log(resid), 1)[0])


def error_norm_energy(traj: Trajectory, case: ManufacturedCase,
                      system: FemSystem, kappa: float) -> float:
    """max_n ||du_n - I_h u'(t_n - k/2)||_M + ||avg_n - I_h u(t_n - k/2)||_M.

    Exact values enter through nodal interpolation of the spatial factor.
    """
    s = np.asarray(case.spatial.value(system.mesh.nodes[system.mesh.interior]))
    err = 0.0
    for n in range(1, traj.us.shape[0]):
        t_half = (n - 0.5) * kappa
        dv = (traj.us[n] - traj.us[n - 1]) / kappa - case.exact_d1(t_half) * s
        av = 0.5 * (traj.us[n] + traj.us[n - 1]) - case.exact(t_half) * s
        err = max(err, l2_norm(system, dv) + l2_norm(system, av))
    return err


def error_norm_l2max(traj: Trajectory, case: ManufacturedCase,
                     system: FemSystem, kappa: float) -> float:
    """max_n ||u_n - I_h u(t_n)||_M over all steps."""
    s = np.asarray(case.spatial.value(system.mesh.nodes[system.mesh.interior]))
    return max(
        l2_norm(system, traj.us[n] - case.exact(n * kappa) * s)
        for n in range(traj.us.shape[0])
    )


@dataclass
class ConvergenceReport:
    case: str
    gamma: float
    alpha0: float
    corrected: bool
    coupling: float
    levels: list            # (h, kappa, error_energy, error_l2max)
    rate_energy: float = field(default=None)
    rate_l2: float = field(default=None)
    pre_asymptotic: bool = False

    def fit(self) -> None:
        lv = np.arange(len(self.levels))
        e_en = np.log2([row[2] for row in self.levels])
        e_l2 = np.log2([row[3] for row in self.levels])
        self.rate_energy = float(-np.polyfit(lv, e_en, 1)[0])
        self.rate_l2 = float(-np.polyfit(lv, e_l2, 1)[0])
        last_two = float(e_en[-2] - e_en[-1])
        self.pre_asymptotic = abs(last_two - self.rate_energy) >= 0.2

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["level", "h", "kappa", "error_energy", "error_l2max"])
            for lev, row in enumerate(self.levels):
                writer.writerow([lev] + ["%.17g" % v for v in row])

    def summary(self) -> str:
        flag = " (pre-asymptotic)" if self.pre_asymptotic else ""
        return (
            f"case={self.case} gamma={self.gamma:g} alpha0={self.alpha0:g} "
            f"corrected={self.corrected} rate_energy={self.rate_energy:.3f} "
            f"rate_l2={self.rate_l2:.3f}{flag}"
        )


def _side_length(case: ManufacturedCase) -> float:
    if case.dimension == 1:
        a, b = case.domain
        return b - a
    (a, b), _ = case.domain
    return b - a


def run_level(case: ManufacturedCase, kappa: float, corrected: bool,
              T: float = 1.0) -> tuple[float, float, float]:
    """Solve one refinement level; returns (h, error_energy, error_l2max)."""
    n = round(_side_length(case) / (case.coupling * kappa))
    mesh = build_mesh(case.dimension, case.domain, n)
    system = assemble(mesh)
    config = SimConfig(
        fem=system, T=T, kappa=kappa, frac=case.frac, corrected=corrected,
        f=SeparableSource(spatial=case.spatial, temporal=case.source_temporal),
        u0=case.spatial.scaled(case.exact(0.0)),
        v0=case.spatial.scaled(case.exact_d1(0.0)),
    )
    traj = run(config)
    e_en = error_norm_energy(traj, case, system, kappa)
    e_l2 = error_norm_l2max(traj, case, system, kappa)
    return mesh.h, e_en, e_l2


def run_convergence(case: ManufacturedCase, corrected: bool, levels: int = 4,
                    kappa0: float | None = None, T: float = 1.0,
                    check_rhs: bool = True) -> ConvergenceReport:
    if levels < 3:
        raise ValueError(f"need at least 3 refinement levels, got {levels}")
    if check_rhs:
        verify_case(case)
    if kappa0 is None:
        kappa0 = 1.0 / 64 if case.dimension == 1 else 1.0 / 40
    rows = []
    for lev in range(levels):
        kappa = kappa0 / 2**lev
        h, e_en, e_l2 = run_level(case, kappa, corrected, T)
        rows.append((h, kappa, e_en, e_l2))
    report = ConvergenceReport(
        case=case.name, gamma=case.frac.gamma, alpha0=case.frac.alpha0,
        corrected=corrected, coupling=case.coupling, levels=rows,
    )
    report.fit()
    return report


def _gaussian_bump() -> ScalarField:
    value = lambda x: np.exp(-10.0 * np.sum(x**2, axis=1))
    grad = lambda x: -20.0 * x * np.exp(-10.0 * np.sum(x**2, axis=1))[:, None]
    return ScalarField(value=value, gradient=grad)


def run_damping_demo(gammas=(0.25, 0.75, -0.25, -0.75), n_per_side: int = 32,
                     T: float = 2.0, coupling: float = 10.0):
    """Gaussian initial bump on the square, traced at the center node.

    Returns (times, dict gamma-label -> trace, dict gamma-label -> energy).
    The undamped baseline is labeled "none".  n_per_side must be even so
    the origin is a mesh node.
    """
    if n_per_side % 2 != 0:
        raise ValueError("n_per_side must be even so (0,0) is a node")
    mesh = build_mesh(2, ((-1.0, 1.0), (-1.0, 1.0)), n_per_side)
    system = assemble(mesh)
    kappa = mesh.h / coupling
    steps = int(math.ceil(T / kappa - 1e-12))
    center = np.flatnonzero(
        (np.abs(mesh.nodes[mesh.interior][:, 0]) < 1e-12)
        & (np.abs(mesh.nodes[mesh.interior][:, 1]) < 1e-12)
    )
    if len(center) != 1:
        raise RuntimeError("origin is not an interior mesh node")
    dof = int(center[0])
    bump = _gaussian_bump()
    traces, energies = {}, {}
    for g in (None,) + tuple(gammas):
        frac = None if g is None else FracParams(gamma=g)
        config = SimConfig(fem=system, T=T, kappa=kappa, frac=frac,
                           corrected=False, u0=bump)
        traj = run(config)
        label = "none" if g is None else f"{g:g}"
        traces[label] = traj.us[:, dof].copy()
        energies[label] = traj.energy.copy()
    times = kappa * np.arange(steps + 1)
    return times, traces, energies


def damping_demo_csv(path, times, traces) -> None:
    labels = list(traces)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"gamma_{label}" for label in labels])
        for i, t in enumerate(times):
            writer.writerow(
                ["%.17g" % t] + ["%.17g" % traces[label][i] for label in labels]
            )


def run_constants_figure(grid_points: int = 99):
    return constants_table(grid_points, T=1.0)


def constants_csv(path, table) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gamma", "C1", "C2"])
        for g, c1, c2 in table:
            writer.writerow(["%.17g" % g, "%.17g" % c1, "%.17g" % c2])
