"""Self-similar long-time expansion of the mKdV hierarchy and its comparison with PDE data.

In the region ``|x| <= C t^(1/(2n+1))`` the solution behaves like

    u(x, t) ~ sum_j u_j(y) t^(-j/(2n+1)),   y = (-1)^(n+1) x ((2n+1) t)^(-1/(2n+1)).

``u_1`` is a rescaled Ablowitz-Segur profile with parameter ``rho = i r(0)``.
When ``r(0) = 0`` it vanishes and the next two terms are explicit multiples of
``Ai'`` and ``Ai''``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import genairy
from .evolve import EvolutionConfig, Field
from .painleve import ASParams, as_solve
from .scattering import ScatteringData

R0_TOL = 1e-6
REAL_TOL = 1e-10


class HypothesisViolated(ValueError):
    pass


class NonRealCoefficient(ArithmeticError):
    pass


class WindowOutsideGrid(ValueError):
    pass


@dataclass
class ExpansionCoeffs:
    n: int
    ys: np.ndarray
    u1: np.ndarray
    u2: np.ndarray | None = None
    u3: np.ndarray | None = None
    rho: float = 0.0

    def __post_init__(self):
        if np.iscomplexobj(self.u1):
            raise NonRealCoefficient("u1 must be real")
        if self.rho == 0 and np.any(self.u1):
            raise HypothesisViolated("u1 must vanish when r(0) = 0")

    def terms(self, N: int) -> list[np.ndarray]:
        out = [self.u1]
        for j, u in ((2, self.u2), (3, self.u3)):
            if N >= j:
                if u is None:
                    raise ValueError(f"u{j} is only available when r(0) = 0")
                out.append(u)
        return out


@dataclass
class ComparisonReport:
    n: int
    N: int
    Y: float
    ts: list
    sup_errors: list
    scaled_errors: list
    fitted_order: float
    fit_residual: float
    scaled_order: float
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        num = lambda v: None if not math.isfinite(v) else float(v)  # noqa: E731
        return {
            "n": self.n, "N": self.N, "Y": self.Y, "ts": list(map(float, self.ts)),
            "sup_errors": list(map(float, self.sup_errors)),
            "scaled_errors": list(map(float, self.scaled_errors)),
            "fitted_order": num(self.fitted_order), "fit_residual": num(self.fit_residual),
            "scaled_order": num(self.scaled_order), **self.extras,
        }


def scale(n: int, t: float) -> float:
    """``((2n+1) t)^(1/(2n+1))``."""
    return ((2 * n + 1) * t) ** (1.0 / (2 * n + 1))


def x_to_y(n: int, x, t: float):
    return (-1) ** (n + 1) * np.asarray(x, dtype=float) / scale(n, t)


def y_to_x(n: int, y, t: float):
    return (-1) ** (n + 1) * np.asarray(y, dtype=float) * scale(n, t)


def rho_from_r0(r0: complex, tol: float = R0_TOL) -> float:
    if abs(r0.real) > tol:
        raise NonRealCoefficient(f"r(0) = {r0} is not purely imaginary")
    return float((1j * r0).real)


def u1_eval(n: int, r0: complex, ys, as_params: ASParams | None = None) -> np.ndarray:
    """Leading coefficient on ``ys``; depends on the data only through ``r(0)``."""
    ys = np.asarray(ys, dtype=float)
    rho = rho_from_r0(complex(r0))
    if rho == 0:
        return np.zeros_like(ys)
    x_end = min(-45.0, math.floor(ys.min()) - 1.0) if ys.size else -45.0
    params = as_params or ASParams(n, rho, x_end=x_end)
    if ys.size and ys.max() > params.x_start:
        raise ValueError(f"y up to {ys.max()} lies beyond the solved range (x_start={params.x_start})")
    traj = as_solve(params)
    out = traj.w(ys) if ys.size else ys.copy()
    return (2 * n + 1) ** (-1.0 / (2 * n + 1)) * out


def parity(n: int) -> int:
    """Sign picked up by one x-derivative under the map x -> y."""
    return (-1) ** (n + 1)


def u23_eval(n: int, r0p: complex, r0pp: complex, ys, r0: complex = 0j):
    """Second and third coefficients when ``r(0) = 0``."""
    if abs(r0) > R0_TOL:
        raise HypothesisViolated(f"|r(0)| = {abs(r0):.3e} exceeds {R0_TOL}")
    ys = np.asarray(ys, dtype=float)
    N = 2 * n + 1
    c2 = parity(n) * complex(r0p) / (2 * N ** (2.0 / N))
    c3 = -1j * complex(r0pp) / (8 * N ** (3.0 / N))
    for name, c in (("u2", c2), ("u3", c3)):
        if abs(c.imag) > REAL_TOL * max(1.0, abs(c)):
            raise NonRealCoefficient(f"{name} coefficient {c} is not real")
    if c2 == 0 and c3 == 0:
        return np.zeros_like(ys), np.zeros_like(ys)
    table = genairy.ai_grid(n, ys, 2)
    return c2.real * table.values[:, 1], c3.real * table.values[:, 2]


def expansion(n: int, data: ScatteringData, ys, r0_tol: float = R0_TOL) -> ExpansionCoeffs:
    """Coefficients for the datum behind ``data``; ``u2, u3`` only when ``r(0) = 0``."""
    ys = np.asarray(ys, dtype=float)
    if abs(data.r0) <= r0_tol:
        u2, u3 = u23_eval(n, data.r0_prime, data.r0_double_prime, ys, data.r0)
        return ExpansionCoeffs(n, ys, np.zeros_like(ys), u2, u3, 0.0)
    rho = rho_from_r0(data.r0)
    return ExpansionCoeffs(n, ys, u1_eval(n, data.r0, ys), rho=rho)


def trig_interpolate(values: np.ndarray, half_width: float, x) -> np.ndarray:
    """Evaluate the trigonometric interpolant of periodic samples on ``[-L, L)``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m = values.size
    c = np.fft.rfft(values) / m
    k = np.arange(c.size)
    w = math.pi / half_width
    weights = np.full(c.size, 2.0)
    weights[0] = 1.0
    if m % 2 == 0:
        weights[-1] = 1.0
    phase = np.exp(1j * w * np.outer(x + half_width, k))
    return (phase * (weights * c)).real.sum(axis=1)


def _fit(ts, errs):
    if len(ts) < 2 or min(errs) <= 0:
        return float("nan"), float("nan")
    lt, le = np.log(ts), np.log(errs)
    coef, res, *_ = np.polyfit(lt, le, 1, full=True)
    resid = math.sqrt(float(res[0]) / len(ts)) if len(res) else 0.0
    return float(coef[0]), resid


def compare(fields: list[Field], coeffs: ExpansionCoeffs, N: int, Y: float,
            cfg: EvolutionConfig, margin: float = 0.1) -> ComparisonReport:
    """Sup errors of the ``N``-term expansion over ``|y| <= Y`` at each snapshot."""
    if not 1 <= N <= 3:
        raise ValueError("N must be 1, 2 or 3")
    n = coeffs.n
    sel = np.abs(coeffs.ys) <= Y + 1e-12
    ys = coeffs.ys[sel]
    terms = [u[sel] for u in coeffs.terms(N)]
    ts, errs, scaled = [], [], []
    for f in fields:
        t = f.t
        if t <= 0:
            continue
        xs = y_to_x(n, ys, t)
        limit = cfg.half_width * (1 - cfg.sponge_width - margin)
        if np.abs(xs).max() > limit:
            raise WindowOutsideGrid(f"|x| up to {np.abs(xs).max():.3g} at t={t} exceeds {limit:.3g}")
        u = trig_interpolate(f.values, cfg.half_width, xs)
        approx = sum(tj * t ** (-(j + 1) / (2 * n + 1)) for j, tj in enumerate(terms))
        e = float(np.max(np.abs(u - approx)))
        ts.append(t)
        errs.append(e)
        scaled.append(e * t ** (1.0 / (2 * n + 1)))
    order, resid = _fit(ts, errs)
    sorder, _ = _fit(ts, scaled)
    return ComparisonReport(n, N, Y, ts, errs, scaled, order, resid, sorder)


def extract_second_coefficient(fields: list[Field], coeffs: ExpansionCoeffs, Y: float,
                               cfg: EvolutionConfig):
    """Estimate the ``t^(-2/(2n+1))`` profile from the two latest snapshots.

    ``c(t) = t^(2/(2n+1)) (u - t^(-1/(2n+1)) u1) = u2 + u3 s^(-1) + ...`` with
    ``s = t^(1/(2n+1))``; one Richardson step removes the ``u3`` term.
    """
    n = coeffs.n
    sel = np.abs(coeffs.ys) <= Y + 1e-12
    ys = coeffs.ys[sel]
    f1, f2 = sorted(fields, key=lambda f: f.t)[-2:]
    cs, ss = [], []
    for f in (f1, f2):
        s = f.t ** (1.0 / (2 * n + 1))
        u = trig_interpolate(f.values, cfg.half_width, y_to_x(n, ys, f.t))
        cs.append(s * s * (u - coeffs.u1[sel] / s))
        ss.append(s)
    return ys, (cs[1] * ss[1] - cs[0] * ss[0]) / (ss[1] - ss[0])


def overlay_rows(fields: list[Field], coeffs: ExpansionCoeffs, cfg: EvolutionConfig, Y: float):
    """Rows ``(y, t^(1/(2n+1)) u(x,t) for each t, u1[, u2, u3])`` for plotting."""
    n = coeffs.n
    sel = np.abs(coeffs.ys) <= Y + 1e-12
    ys = coeffs.ys[sel]
    cols = [ys]
    header = ["y"]
    for f in fields:
        if f.t <= 0:
            continue
        u = trig_interpolate(f.values, cfg.half_width, y_to_x(n, ys, f.t))
        cols.append(u * f.t ** (1.0 / (2 * n + 1)))
        header.append(f"scaled_u(t={f.t:g})")
    for name, u in (("u1", coeffs.u1), ("u2", coeffs.u2), ("u3", coeffs.u3)):
        if u is not None:
            cols.append(u[sel])
            header.append(name)
    return header, np.column_stack(cols)
