"""Ablowitz-Segur type solutions of the Painlevé II hierarchy and their connection data.

We work with ``w(x) = q_AS,n((-1)^(n+1) x; rho)``, which decays like
``rho * Ai_{2n+1}(x)`` as ``x -> +inf`` and oscillates as ``x -> -inf``.  For
odd n this is q itself; for even n the reflection flips the sign of every
odd-order derivative, and since each monomial of the Painlevé polynomial has an
even number of derivatives the equation becomes

    P(w, w', ..., w^(2n)) = (-1)^(n+1) x w.

n = 1 is integrated as an initial-value problem from the decaying end.  For
n >= 2 the linearization has modes growing exponentially toward -inf, so
marching from the right amplifies round-off without bound; those members are
solved as a boundary-value problem with asymptotic conditions at both ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_bvp, solve_ivp
from scipy.optimize import least_squares
from scipy.special import loggamma

from . import genairy
from .hierarchy import DiffPoly, compile_poly, eval_compiled, partial, pii_lhs, reflect

RHO_MAX = 0.95


class BlowUp(ArithmeticError):
    pass


class ToleranceNotMet(ArithmeticError):
    pass


class RhoOutOfRange(ValueError):
    pass


class FitDiverged(ArithmeticError):
    pass


class WindowTooShallow(ValueError):
    pass


@dataclass(frozen=True)
class ASParams:
    n: int
    rho: float
    x_start: float | None = None
    x_end: float = -45.0
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    dx: float = 0.01

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not abs(self.rho) < 1:
            raise RhoOutOfRange(f"|rho| must be < 1, got {self.rho}")
        if self.x_start is None:
            object.__setattr__(self, "x_start", 8.0 if self.n == 1 else 6.0)
        if self.x_start < 6:
            raise ValueError("x_start must be >= 6")
        if self.x_end > -5:
            raise ValueError("x_end must be <= -5")


@dataclass
class Trajectory:
    """Jet ``(w, w', ..., w^(2n-1))`` on a decreasing x grid plus dense output."""

    n: int
    rho: float
    xs: np.ndarray
    jets: np.ndarray
    residual_norm: float
    method: str
    _dense: object = field(default=None, repr=False)

    def __call__(self, x) -> np.ndarray:
        """Jet at arbitrary points inside the solved interval, shape ``(2n, m)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self._dense is None:
            return np.zeros((2 * self.n, x.size))
        lo, hi = self.xs.min(), self.xs.max()
        if x.min() < lo - 1e-12 or x.max() > hi + 1e-12:
            raise ValueError(f"points outside [{lo}, {hi}]")
        return np.asarray(self._dense(x))

    def w(self, x) -> np.ndarray:
        return self(x)[0]


@dataclass(frozen=True)
class ConnectionFit:
    d_fit: float
    phi_fit: float
    window: tuple[float, float]
    fit_residual: float


class _System:
    """First-order form of the reflected equation with its Jacobian."""

    def __init__(self, n: int):
        self.n = n
        self.dim = 2 * n
        self.sign = (-1) ** (n + 1)
        P = reflect(pii_lhs(n))
        self.lhs = compile_poly(P)
        rest = P - DiffPoly.jet(2 * n)
        self.rest = compile_poly(rest)
        self.grad = [compile_poly(partial(rest, k)) for k in range(self.dim)]

    def rhs(self, x, y):
        return np.append(y[1:], self.sign * x * y[0] - eval_compiled(self.rest, y))

    def rhs_vec(self, x, y):
        top = self.sign * x * y[0] - eval_compiled(self.rest, y)
        return np.vstack([y[1:], top])

    def jac_vec(self, x, y):
        m = y.shape[1]
        J = np.zeros((self.dim, self.dim, m))
        for k in range(self.dim - 1):
            J[k, k + 1] = 1.0
        for k, g in enumerate(self.grad):
            J[-1, k] = -eval_compiled(g, y) if g else 0.0
        J[-1, 0] += self.sign * x
        return J

    def residual(self, x, jet, top):
        """``P(jet, top) - (-1)^(n+1) x w`` for a supplied highest derivative."""
        full = list(jet) + [top]
        return eval_compiled(self.lhs, full) - self.sign * x * jet[0]


def _linear_modes(n: int, x: float):
    """Roots of ``mu^(2n) = (-1)^(n+1) x`` and the inverse Vandermonde of their jets."""
    dim = 2 * n
    coeffs = np.zeros(dim + 1, dtype=complex)
    coeffs[0] = 1.0
    coeffs[-1] = -((-1) ** (n + 1)) * x
    mu = np.roots(coeffs)
    V = np.vander(mu, dim, increasing=True).T
    return mu, np.linalg.inv(V)


def _real_rows(mu, W, mask):
    rows, used = [], set()
    idx = np.nonzero(mask)[0]
    for k in idx:
        if k in used:
            continue
        used.add(k)
        if abs(mu[k].imag) < 1e-12:
            rows.append(W[k].real)
            continue
        partner = next(j for j in idx if j not in used and abs(mu[j] - np.conj(mu[k])) < 1e-9)
        used.add(partner)
        rows.extend([W[k].real, W[k].imag])
    return np.array(rows).reshape(-1, W.shape[1])


def _left_conditions(n: int, x: float) -> np.ndarray:
    """Rows annihilating modes that grow toward -inf at ``x``."""
    mu, W = _linear_modes(n, x)
    return _real_rows(mu, W, mu.real < -1e-9)


def _right_conditions(n: int, x: float) -> np.ndarray:
    """Rows annihilating the subspace that decays toward +inf, computed at ``x``.

    The decaying subspace is dominant when marching left, so it is obtained by
    integrating the linearized equation from ``x + 16`` back to ``x``.
    """
    dim = 2 * n
    far = x + 16.0
    mu, _ = _linear_modes(n, far)
    starts = []
    for m in mu[mu.real < -1e-9]:
        v = m ** np.arange(dim)
        starts.extend([v.real, v.imag])
    basis = np.array(starts[: 2 * n])
    basis = np.linalg.qr(basis.T)[0][:, :n].T
    sign = (-1) ** (n + 1)

    def lin(t, y):
        return np.concatenate([y[1:], [sign * t * y[0]]])

    ends = []
    for v in basis:
        sol = solve_ivp(lin, (far, x), v, method="DOP853", rtol=1e-12, atol=1e-300)
        ends.append(sol.y[:, -1])
    span = np.linalg.qr(np.array(ends).T)[0][:, :n]
    full = np.linalg.svd(span.T)[2]
    return full[n:]


def _initial_jet(n: int, rho: float, x: float) -> np.ndarray:
    table = genairy.ai_grid(n, [x], 2 * n - 1)
    return rho * table.values[0]


def _fd_top(traj_dense, xs, dim, h=1e-4):
    up = traj_dense(xs + h)[dim - 1]
    dn = traj_dense(xs - h)[dim - 1]
    return (up - dn) / (2 * h)


def _residual_norm(system: _System, dense, xs: np.ndarray) -> float:
    inner = xs[(xs > xs.min() + 1e-3) & (xs < xs.max() - 1e-3)]
    jet = dense(inner)
    top = _fd_top(dense, inner, system.dim)
    res = system.residual(inner, jet, top)
    scale = np.maximum(1.0, np.abs(inner * jet[0]))
    return float(np.max(np.abs(res) / scale)) if inner.size else 0.0


def _solve_ivp(system: _System, params: ASParams, xs: np.ndarray):
    y0 = _initial_jet(params.n, params.rho, params.x_start)
    guard = 1e3

    def blow(t, y):
        return guard - np.max(np.abs(y))

    blow.terminal = True
    sol = solve_ivp(
        system.rhs, (params.x_start, params.x_end), y0, method="DOP853",
        rtol=params.rel_tol, atol=params.abs_tol, dense_output=True, events=blow,
    )
    if sol.status == 1 or (sol.status == 0 and not np.all(np.isfinite(sol.y))):
        raise BlowUp(f"|w| exceeded {guard} near x={sol.t[-1]:.3f}")
    if sol.status != 0:
        raise BlowUp(sol.message)
    return sol.sol


def _solve_bvp(system: _System, params: ASParams, pad: float = 5.0):
    n, dim = params.n, system.dim
    x_left, x_right = params.x_end - pad, params.x_start
    left = _left_conditions(n, x_left)
    right = _right_conditions(n, x_right)
    aj = _initial_jet(n, 1.0, x_right)
    amp = aj / (aj @ aj)
    bc_jac_a = np.vstack([left, np.zeros((right.shape[0] + 1, dim))])
    bc_jac_b = np.vstack([np.zeros((left.shape[0], dim)), right, amp])
    tol = max(params.rel_tol, 1e-9)

    mesh = np.linspace(x_left, x_right, int((x_right - x_left) / 0.02) + 1)
    x, y = mesh, np.zeros((dim, mesh.size))
    steps = max(1, math.ceil(abs(params.rho) / 0.2))
    sol = None
    for k in range(1, steps + 1):
        target = params.rho * k / steps

        def bc(ya, yb, target=target):
            return np.concatenate([left @ ya, right @ yb, [amp @ yb - target]])

        sol = solve_bvp(
            system.rhs_vec, bc, x, y, fun_jac=system.jac_vec,
            bc_jac=lambda ya, yb: (bc_jac_a, bc_jac_b), tol=tol, max_nodes=400_000,
        )
        if sol.status != 0:
            raise ToleranceNotMet(f"collocation failed at rho={target:.3f}: {sol.message}")
        if np.max(np.abs(sol.y)) > 1e3:
            raise BlowUp("collocation solution exceeded the magnitude guard")
        x, y = sol.x, sol.y
    return sol.sol


def as_solve(params: ASParams) -> Trajectory:
    """Solve for the jet of ``w`` between ``x_start`` and ``x_end``."""
    n = params.n
    xs = np.arange(params.x_start, params.x_end - 1e-12, -params.dx)
    if xs[-1] != params.x_end:
        xs = np.append(xs, params.x_end)
    if params.rho == 0:
        return Trajectory(n, 0.0, xs, np.zeros((xs.size, 2 * n)), 0.0, "trivial")
    system = _System(n)
    if n == 1:
        dense, method = _solve_ivp(system, params, xs), "ivp-dop853"
    else:
        dense, method = _solve_bvp(system, params), "bvp-collocation"
    jets = np.asarray(dense(xs)).T
    if not np.all(np.isfinite(jets)):
        raise BlowUp("non-finite jet values")
    res = _residual_norm(system, dense, xs)
    return Trajectory(n, params.rho, xs, jets, res, method, dense)


# ---------------------------------------------------------------------------
# connection formulas


def wrap_phase(a: float) -> float:
    """Reduce an angle to (-pi, pi]."""
    r = math.fmod(a + math.pi, 2 * math.pi)
    if r <= 0:
        r += 2 * math.pi
    return r - math.pi


def connection_predict(n: int, rho: float) -> tuple[float, float]:
    """Closed-form amplitude and phase of the oscillatory tail."""
    if rho == 0 or not abs(rho) < 1:
        raise RhoOutOfRange(f"need 0 < |rho| < 1, got {rho}")
    d = math.sqrt(-math.log1p(-rho * rho) / math.pi)
    phi = (
        -0.5 * d * d * math.log(8 * n)
        + float(loggamma(0.5j * d * d).imag)
        + 0.5 * math.pi * math.copysign(1.0, rho)
        - 0.25 * math.pi
    )
    return d, wrap_phase(phi)


def tail_model(n: int, x, d: float, phi: float):
    """Leading oscillatory behaviour of ``w`` as ``x -> -inf``."""
    X = -np.asarray(x, dtype=float)
    envelope = d / (math.sqrt(n) * X ** ((2 * n - 1) / (4 * n)))
    fast = 2 * n / (2 * n + 1) * X ** ((2 * n + 1) / (2 * n))
    return envelope * np.cos(fast - (2 * n + 1) / (4 * n) * d * d * np.log(X) + phi)


def oscillations_in(n: int, window: tuple[float, float]) -> float:
    lo, hi = window
    fast = lambda X: 2 * n / (2 * n + 1) * X ** ((2 * n + 1) / (2 * n))  # noqa: E731
    return (fast(-lo) - fast(-hi)) / (2 * math.pi)


def connection_fit(traj: Trajectory, window: tuple[float, float] = (-40.0, -20.0),
                   samples: int = 4000) -> ConnectionFit:
    """Least-squares amplitude and phase of the tail model over ``window``."""
    lo, hi = sorted(window)
    n = traj.n
    if hi > -5:
        raise ValueError("fit window must lie in (-inf, -5]")
    if lo < traj.xs.min() - 1e-9 or hi > traj.xs.max():
        raise ValueError("fit window outside the trajectory")
    if oscillations_in(n, (lo, hi)) < 5:
        raise WindowTooShallow(f"fewer than 5 oscillations in [{lo}, {hi}]")
    x = np.linspace(lo, hi, samples)
    w = traj.w(x)
    X = -x
    scaled = w * math.sqrt(n) * X ** ((2 * n - 1) / (4 * n))
    interior = (np.abs(scaled[1:-1]) >= np.abs(scaled[:-2])) & (np.abs(scaled[1:-1]) >= np.abs(scaled[2:]))
    peaks = np.abs(scaled[1:-1][interior])
    if peaks.size == 0 or np.median(peaks) < 1e-12:
        raise FitDiverged("no oscillatory signal in the fit window")
    d = float(np.median(peaks))
    fast = 2 * n / (2 * n + 1) * X ** ((2 * n + 1) / (2 * n))
    for _ in range(3):
        theta = fast - (2 * n + 1) / (4 * n) * d * d * np.log(X)
        A = np.column_stack([np.cos(theta), -np.sin(theta)])
        (ca, cb), *_ = np.linalg.lstsq(A, scaled, rcond=None)
        d, phi = math.hypot(ca, cb), math.atan2(cb, ca)

    def resid(p):
        return tail_model(n, x, p[0], p[1]) - w

    out = least_squares(resid, [d, phi], x_scale=[max(d, 1e-3), 1.0], xtol=1e-14, ftol=1e-14)
    if not out.success or out.x[0] <= 0:
        raise FitDiverged(out.message)
    rel = float(np.sqrt(np.mean(out.fun**2)) / np.sqrt(np.mean(w**2)))
    if not np.isfinite(rel) or rel > 0.5:
        raise FitDiverged(f"relative fit residual {rel:.3g}")
    return ConnectionFit(float(out.x[0]), wrap_phase(float(out.x[1])), (lo, hi), rel)
