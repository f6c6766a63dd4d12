"""Direct scattering for ``phi_x = [[-i lam, u], [u, i lam]] phi``.

Conventions.  The left Jost solution tends to ``exp(-i lam x sigma_3)`` as
``x -> -inf``; at ``+inf`` it equals ``exp(-i lam x sigma_3) S(lam)``.  For real
potentials and real ``lam`` the transfer matrix has the shape
``S = [[conj(s22), s12], [conj(s12), s22]]`` with ``det S = 1``.  We set

    a = s22,   b = i * s12,   r = conj(b) / a = -i * s21 / s22,

which is the scattering matrix ``[[a*, b], [b*, a]]`` up to the constant gauge
``diag(e^{i pi/4}, e^{-i pi/4})``.  This places ``r(0)`` on the imaginary axis
(``r(0) = -i tanh(int u)``) and gives ``r(-lam) = -conj(r(lam))``; in the
small-data limit ``r(lam) ~ -i * u0_hat(2 lam)`` with ``u0_hat(k) = int u e^{-ikx}``.

The ODE is integrated in the oscillation-free frame
``mu = exp(i lam x sigma_3) phi`` with a fourth-order Magnus scheme, so every
step is an exact element of SU(1,1) and unitarity holds to round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

DECAY_TOL = 1e-12


class IntegrationFailure(ArithmeticError):
    pass


class InvariantViolation(ArithmeticError):
    def __init__(self, message: str, lam: float | None = None):
        super().__init__(message)
        self.lam = lam


class GridTooCoarse(ValueError):
    pass


def _sech(x):
    return 1.0 / np.cosh(x)


_FAMILIES: dict[str, tuple[Callable, float]] = {
    # name -> (shape, integral of the unit-amplitude shape)
    "sech": (_sech, math.pi),
    "gaussian": (lambda x: np.exp(-(x**2)), math.sqrt(math.pi)),
    "odd-gaussian": (lambda x: x * np.exp(-(x**2)), 0.0),
    "zero": (lambda x: np.zeros_like(np.asarray(x, dtype=float)), 0.0),
}


@dataclass(frozen=True)
class Potential:
    """Initial datum ``u0``: a named family ``amplitude * shape((x - shift) / width)``,
    a sum of such terms, or samples on a uniform grid."""

    kind: str
    amplitude: float = 1.0
    width: float = 1.0
    shift: float = 0.0
    parts: tuple["Potential", ...] = ()
    samples: tuple[np.ndarray, np.ndarray] | None = field(default=None, compare=False)
    half_width: float | None = None

    def __post_init__(self):
        if self.kind not in _FAMILIES and self.kind not in ("sum", "samples"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "samples":
            xs, vs = self.samples
            xs = np.asarray(xs, dtype=float)
            vs = np.asarray(vs, dtype=float)
            peak = np.max(np.abs(vs)) if vs.size else 0.0
            if peak and max(abs(vs[0]), abs(vs[-1])) > DECAY_TOL * peak:
                raise ValueError("sampled potential does not decay at the ends of its grid")
            object.__setattr__(self, "samples", (xs, vs))
            object.__setattr__(self, "_spline", CubicSpline(xs, vs))
            if self.half_width is None:
                object.__setattr__(self, "half_width", float(min(-xs[0], xs[-1])))
        elif self.half_width is None:
            object.__setattr__(self, "half_width", self._support())

    @classmethod
    def named(cls, kind: str, amplitude: float = 1.0, width: float = 1.0, shift: float = 0.0):
        return cls(kind, amplitude, width, shift)

    @classmethod
    def combine(cls, *parts: Potential) -> Potential:
        return cls("sum", parts=tuple(parts))

    @classmethod
    def from_samples(cls, xs, values) -> Potential:
        return cls("samples", samples=(np.asarray(xs, float), np.asarray(values, float)))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "sum":
            return sum((p(x) for p in self.parts), np.zeros_like(x))
        if self.kind == "samples":
            xs = self.samples[0]
            inside = (x >= xs[0]) & (x <= xs[-1])
            return np.where(inside, self._spline(np.clip(x, xs[0], xs[-1])), 0.0)
        shape = _FAMILIES[self.kind][0]
        return self.amplitude * shape((x - self.shift) / self.width)

    def mass(self) -> float:
        """``int u0 dx``."""
        if self.kind == "sum":
            return sum(p.mass() for p in self.parts)
        if self.kind == "samples":
            return float(self._spline.integrate(self.samples[0][0], self.samples[0][-1]))
        return self.amplitude * self.width * _FAMILIES[self.kind][1]

    def is_zero(self) -> bool:
        if self.kind == "sum":
            return all(p.is_zero() for p in self.parts)
        if self.kind == "samples":
            return not np.any(self.samples[1])
        return self.kind == "zero" or self.amplitude == 0

    def _support(self) -> float:
        if self.kind == "sum":
            return max((p.half_width for p in self.parts), default=1.0)
        if self.is_zero():
            return 1.0
        x = np.linspace(0.0, 200.0, 200_001) * self.width
        shape = np.abs(_FAMILIES[self.kind][0](x / self.width))
        big = np.nonzero(shape > DECAY_TOL * shape.max())[0][-1]
        return float(x[min(big + 1, x.size - 1)] + abs(self.shift))

    def length_scale(self) -> float:
        """Narrowest feature width, used to shrink the integration step."""
        if self.kind == "sum":
            return min((p.length_scale() for p in self.parts), default=1.0)
        if self.kind == "samples":
            return 1.0
        return self.width

    def describe(self) -> dict:
        if self.kind == "sum":
            return {"kind": "sum", "parts": [p.describe() for p in self.parts]}
        if self.kind == "samples":
            return {"kind": "samples", "points": int(self.samples[0].size)}
        return {"kind": self.kind, "amplitude": self.amplitude, "width": self.width, "shift": self.shift}


@dataclass
class ScatteringData:
    lambdas: np.ndarray
    a_vals: np.ndarray
    b_vals: np.ndarray
    r_vals: np.ndarray
    r0: complex = 0j
    r0_prime: complex = 0j
    r0_double_prime: complex = 0j
    diagnostics: dict = field(default_factory=dict)

    def summary(self) -> dict:
        c = lambda z: [float(np.real(z)), float(np.imag(z))]  # noqa: E731
        return {
            "r0": c(self.r0),
            "r0_prime": c(self.r0_prime),
            "r0_double_prime": c(self.r0_double_prime),
            **{k: float(v) for k, v in self.diagnostics.items()},
        }


_C1 = 0.5 - math.sqrt(3) / 6
_C2 = 0.5 + math.sqrt(3) / 6
_COMM = math.sqrt(3) / 12


def default_step(lams, length_scale: float = 1.0) -> float:
    lmax = float(np.max(np.abs(lams))) if np.size(lams) else 0.0
    return min(0.01, 0.1 / max(1.0, lmax)) * min(1.0, length_scale)


def transfer_matrices(u0: Potential, lams, step: float | None = None) -> np.ndarray:
    """``S(lam)`` for every ``lam``, shape ``(m, 2, 2)``."""
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    L = u0.half_width
    h0 = step or default_step(lams, u0.length_scale())
    steps = max(1, math.ceil(2 * L / h0))
    h = 2 * L / steps
    s11 = np.ones(lams.size, complex)
    s12 = np.zeros(lams.size, complex)
    s21 = np.zeros(lams.size, complex)
    s22 = np.ones(lams.size, complex)
    if u0.is_zero():
        return np.stack([np.stack([s11, s12], -1), np.stack([s21, s22], -1)], -2)
    x0 = -L + h * np.arange(steps)
    u1 = u0(x0 + _C1 * h)
    u2 = u0(x0 + _C2 * h)
    w = 2j * lams
    for i in range(steps):
        e1 = np.exp(w * (x0[i] + _C1 * h))
        e2 = np.exp(w * (x0[i] + _C2 * h))
        p1, p2 = u1[i] * e1, u2[i] * e2
        q1, q2 = u1[i] / e1, u2[i] / e2
        alpha = _COMM * h * h * (p2 * q1 - p1 * q2)
        beta = 0.5 * h * (p1 + p2)
        gamma = 0.5 * h * (q1 + q2)
        kappa = np.sqrt(alpha * alpha + beta * gamma)
        ch = np.cosh(kappa)
        sh = np.where(np.abs(kappa) > 1e-300, np.sinh(kappa) / np.where(kappa == 0, 1, kappa), 1.0)
        m11, m12, m21, m22 = ch + sh * alpha, sh * beta, sh * gamma, ch - sh * alpha
        s11, s12, s21, s22 = (
            m11 * s11 + m12 * s21,
            m11 * s12 + m12 * s22,
            m21 * s11 + m22 * s21,
            m21 * s12 + m22 * s22,
        )
    S = np.stack([np.stack([s11, s12], -1), np.stack([s21, s22], -1)], -2)
    if not np.all(np.isfinite(S)):
        raise IntegrationFailure("non-finite transfer matrix")
    return S


def jost_scatter(u0: Potential, lam: float, step: float | None = None) -> tuple[complex, complex]:
    """Spectral functions ``(a, b)`` at a single real ``lam``."""
    S = transfer_matrices(u0, [lam], step)[0]
    return complex(S[1, 1]), complex(1j * S[0, 1])


def default_grid(Lambda: float = 8.0, fine: float = 1 / 256, fine_radius: float = 0.5,
                 coarse: float = 1 / 32) -> np.ndarray:
    """Symmetric grid containing 0, spacing ``fine`` for ``|lam| <= fine_radius``."""
    inner = np.arange(0.0, fine_radius + fine / 2, fine)
    outer = np.arange(inner[-1] + coarse, Lambda + coarse / 2, coarse)
    half = np.concatenate([inner, outer])
    return np.concatenate([-half[:0:-1], half])


def _check(data: ScatteringData, symmetric: bool, tol_unit=1e-8, tol_sym=1e-8, tol_r0=1e-6):
    lam = data.lambdas
    unit = np.abs(np.abs(data.a_vals) ** 2 - np.abs(data.b_vals) ** 2 - 1)
    i = int(np.argmax(unit))
    if unit[i] > tol_unit:
        raise InvariantViolation(f"|a|^2-|b|^2-1 = {unit[i]:.3e}", float(lam[i]))
    mag = np.abs(data.r_vals)
    i = int(np.argmax(mag))
    if mag[i] >= 1:
        raise InvariantViolation(f"|r| = {mag[i]:.6f} >= 1", float(lam[i]))
    sym = 0.0
    if symmetric:
        sym_err = np.abs(data.r_vals + np.conj(data.r_vals[::-1]))
        i = int(np.argmax(sym_err))
        sym = float(sym_err[i])
        if sym > tol_sym:
            raise InvariantViolation(f"r(lam) + conj(r(-lam)) = {sym:.3e}", float(lam[i]))
    if abs(data.r0.real) > tol_r0:
        raise InvariantViolation(f"Re r(0) = {data.r0.real:.3e}", 0.0)
    data.diagnostics.update(
        unitarity_max=float(unit.max()), r_abs_max=float(mag.max()), symmetry_max=sym,
        r0_real_abs=abs(float(data.r0.real)),
    )


def reflection(u0: Potential, grid=None, step: float | None = None) -> ScatteringData:
    """Sample ``a``, ``b`` and ``r`` on a symmetric grid and fill the Taylor data at 0."""
    lam = default_grid() if grid is None else np.asarray(grid, dtype=float)
    symmetric = lam.size > 0 and np.allclose(lam, -lam[::-1], atol=1e-14, rtol=0)
    if not symmetric or not np.any(lam == 0):
        raise ValueError("grid must be symmetric about 0 and contain 0")
    S = transfer_matrices(u0, lam, step)
    a = S[:, 1, 1]
    b = 1j * S[:, 0, 1]
    r = -1j * S[:, 1, 0] / a
    data = ScatteringData(lam, a, b, r)
    data.r0 = complex(r[np.nonzero(lam == 0)[0][0]])
    try:
        data.r0_prime = r_derivatives_at_zero(data, 1)
        data.r0_double_prime = r_derivatives_at_zero(data, 2)
    except GridTooCoarse:
        # r itself is still valid on a coarse grid; only the Taylor data are not
        data.r0_prime = data.r0_double_prime = complex(math.nan, math.nan)
    _check(data, symmetric)
    return data


def r_derivatives_at_zero(data: ScatteringData, k: int) -> complex:
    """``r^(k)(0)`` for ``k <= 2`` by central differences with one Richardson step."""
    if k not in (0, 1, 2):
        raise ValueError("k must be 0, 1 or 2")
    lam = data.lambdas
    i0 = int(np.nonzero(lam == 0)[0][0])
    if k == 0:
        return complex(data.r_vals[i0])
    if i0 < 2 or i0 + 2 >= lam.size:
        raise GridTooCoarse("need two grid points on each side of 0")
    h = lam[i0 + 1]
    if h > 1e-2 * (1 + 1e-9):
        raise GridTooCoarse(f"grid spacing {h} near 0 exceeds 1e-2")
    if not np.allclose(lam[i0 - 2 : i0 + 3], h * np.arange(-2, 3), rtol=1e-9, atol=1e-14):
        raise GridTooCoarse("grid is not uniform near 0")
    r = data.r_vals[i0 - 2 : i0 + 3]
    if k == 1:
        d_h = (r[3] - r[1]) / (2 * h)
        d_2h = (r[4] - r[0]) / (4 * h)
    else:
        d_h = (r[3] - 2 * r[2] + r[1]) / h**2
        d_2h = (r[4] - 2 * r[2] + r[0]) / (4 * h**2)
    return complex((4 * d_h - d_2h) / 3)


def write_csv(data: ScatteringData, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["lambda", "re_a", "im_a", "re_b", "im_b", "re_r", "im_r"])
        for lam, a, b, r in zip(data.lambdas, data.a_vals, data.b_vals, data.r_vals):
            out.writerow([repr(float(lam)), repr(a.real), repr(a.imag), repr(b.real),
                          repr(b.imag), repr(r.real), repr(r.imag)])
