"""Generalized Airy functions from their contour-integral representation.

``Ai_{2n+1}(x) = 1/(2 pi i) * int_gamma exp((-1)^n s^(2n+1)/(2n+1) + x s) ds``

where gamma runs from infinity at angle ``-(n+1)pi/(2n+1)`` to infinity at
``+(n+1)pi/(2n+1)``.  Along those rays ``(-1)^n s^(2n+1)`` is negative real, so
the integrand decays like ``exp(-r^(2n+1)/(2n+1))``.  ``Ai_3`` is the classical
Airy function and every ``Ai_{2n+1}`` satisfies ``y^(2n) = (-1)^(n+1) x y``.

For ``x >= 0`` the contour is a pair of straight rays from the origin.  For
``x < 0`` it first climbs the imaginary axis to the saddle ``i|x|^(1/(2n))``,
where the exponent stays purely imaginary, and leaves along the ray from there,
which keeps the integrand bounded by one instead of ``exp(c|x|^((2n+1)/(2n)))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np


class AccuracyDomainExceeded(ValueError):
    pass


class ImagLeak(ArithmeticError):
    pass


LEAK_TOL = 1e-10
_TRUNCATION = 1e-18
_GAUSS_NODES = 16


@dataclass(frozen=True)
class ContourSpec:
    """Quadrature layout for one hierarchy member.

    ``nodes_per_ray`` Gauss-Legendre nodes are split into panels of 16 on the
    truncated ray; the saddle segment (``x < 0``) gets half as many.
    ``truncation_radius=None`` picks the ray length per point so that the
    integrand at the cut is below 1e-18 of its maximum.
    """

    n: int
    vertex: float = 0.0
    truncation_radius: float | None = None
    nodes_per_ray: int = 384
    quadrature: str = "gauss-legendre-panels"
    x_min: float = -12.0
    x_max: float = 8.0
    ray_angle: float = field(init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.nodes_per_ray < _GAUSS_NODES:
            raise ValueError(f"nodes_per_ray must be at least {_GAUSS_NODES}")
        object.__setattr__(self, "ray_angle", (self.n + 1) * math.pi / (2 * self.n + 1))

    def refined(self, factor: int = 2) -> ContourSpec:
        return replace(self, nodes_per_ray=self.nodes_per_ray * factor)


@dataclass(frozen=True)
class AiryValue:
    x: float
    j: int
    value: float
    imag_leak: float
    est_error: float = 0.0


@dataclass(frozen=True)
class AiryTable:
    """Values ``values[i, j] = Ai^(j)(xs[i])`` with matching diagnostics."""

    n: int
    xs: np.ndarray
    values: np.ndarray
    imag_leak: np.ndarray
    est_error: np.ndarray

    def rows(self):
        for i, x in enumerate(self.xs):
            for j in range(self.values.shape[1]):
                yield AiryValue(float(x), j, float(self.values[i, j]),
                                float(self.imag_leak[i, j]), float(self.est_error[i, j]))

    def __len__(self):
        return len(self.xs)


def default_spec(n: int) -> ContourSpec:
    return ContourSpec(n=n)


def _phase(n: int, x: float, s):
    N = 2 * n + 1
    return (-1) ** n * s**N / N + x * s


def _panel_rule(length: float, nodes: int, order: int = _GAUSS_NODES):
    panels = max(1, nodes // order)
    g, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, length, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    r = (mid[:, None] + half[:, None] * g[None, :]).ravel()
    wr = (half[:, None] * w[None, :]).ravel()
    return r, wr


def _ray_length(n: int, x: float, start: complex, direction: complex, jmax: int) -> float:
    N = 2 * n + 1
    rmax = (N * 120.0) ** (1.0 / N) + abs(start) + 2.0 * abs(x) ** (1.0 / (2 * n))
    r = np.linspace(0.0, rmax, 4001)
    s = start + r * direction
    logmag = _phase(n, x, s).real + jmax * np.log(np.maximum(np.abs(s), 1e-300))
    cut = logmag.max() + math.log(_TRUNCATION)
    above = np.nonzero(logmag > cut)[0]
    last = above[-1] if above.size else 0
    return float(r[min(last + 1, r.size - 1)])


def _contour(n: int, x: float, spec: ContourSpec, jmax: int, nodes_per_ray: int, order: int):
    """Nodes and complex weights ``ds`` of the upper half of the contour."""
    direction = complex(math.cos(spec.ray_angle), math.sin(spec.ray_angle))
    nodes, weights = [], []
    start = complex(spec.vertex, 0.0)
    if x < 0:
        a = (-x) ** (1.0 / (2 * n))
        r, wr = _panel_rule(a, max(order, nodes_per_ray // 2), order)
        nodes.append(spec.vertex + 1j * r)
        weights.append(1j * wr)
        start = complex(spec.vertex, a)
    length = spec.truncation_radius or _ray_length(n, x, start, direction, jmax)
    r, wr = _panel_rule(length, nodes_per_ray, order)
    nodes.append(start + r * direction)
    weights.append(wr * direction)
    return np.concatenate(nodes), np.concatenate(weights)


def _integrate(n: int, x: float, spec: ContourSpec, jmax: int, order: int = _GAUSS_NODES):
    s, ds = _contour(n, x, spec, jmax, spec.nodes_per_ray, order)
    up = ds * np.exp(_phase(n, x, s))
    sc = np.conj(s)
    low = -np.conj(ds) * np.exp(_phase(n, x, sc))
    powers = np.arange(jmax + 1)[:, None]
    total = ((s[None, :] ** powers) * up[None, :]).sum(axis=1) + (
        (sc[None, :] ** powers) * low[None, :]
    ).sum(axis=1)
    return total / (2j * math.pi)


def _check_domain(x: float, spec: ContourSpec):
    if not (spec.x_min <= x <= spec.x_max):
        raise AccuracyDomainExceeded(
            f"x={x} outside the validated range [{spec.x_min}, {spec.x_max}] for n={spec.n}"
        )


def _evaluate(n: int, x: float, jmax: int, spec: ContourSpec):
    _check_domain(x, spec)
    full = _integrate(n, x, spec, jmax)
    coarse = _integrate(n, x, spec, jmax, order=_GAUSS_NODES - 4)
    leak = np.abs(full.imag)
    bad = leak > LEAK_TOL * np.maximum(1.0, np.abs(full.real))
    if bad.any():
        j = int(np.argmax(bad))
        raise ImagLeak(f"imaginary leak {leak[j]:.3e} at x={x}, j={j}")
    return full.real, leak, np.abs(full.real - coarse.real)


def ai(n: int, x: float, j: int = 0, spec: ContourSpec | None = None) -> AiryValue:
    """``Ai_{2n+1}^(j)(x)`` by quadrature along the contour."""
    spec = spec or default_spec(n)
    if spec.n != n:
        raise ValueError("spec.n does not match n")
    if j < 0:
        raise ValueError("j must be non-negative")
    vals, leak, err = _evaluate(n, float(x), j, spec)
    return AiryValue(float(x), j, float(vals[j]), float(leak[j]), float(err[j]))


def ai_grid(n: int, xs, jmax: int = 0, spec: ContourSpec | None = None) -> AiryTable:
    """All derivatives ``0..jmax`` at every point of ``xs``."""
    spec = spec or default_spec(n)
    if spec.n != n:
        raise ValueError("spec.n does not match n")
    xs = np.asarray(xs, dtype=float).ravel()
    shape = (xs.size, jmax + 1)
    values, leak, err = np.empty(shape), np.empty(shape), np.empty(shape)
    for i, x in enumerate(xs):
        values[i], leak[i], err[i] = _evaluate(n, float(x), jmax, spec)
    return AiryTable(n, xs, values, leak, err)


def ai_values(n: int, xs, j: int = 0, spec: ContourSpec | None = None) -> np.ndarray:
    """Plain array of ``Ai^(j)`` over ``xs``."""
    return ai_grid(n, xs, j, spec).values[:, j]


def ode_residual(n: int, x: float, spec: ContourSpec | None = None) -> float:
    """``|Ai^(2n)(x) - (-1)^(n+1) x Ai(x)|`` relative to ``max(1, |x Ai(x)|)``."""
    t = ai_grid(n, [x], 2 * n, spec)
    y, y2n = t.values[0, 0], t.values[0, 2 * n]
    return abs(y2n - (-1) ** (n + 1) * x * y) / max(1.0, abs(x * y))
