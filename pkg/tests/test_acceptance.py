"""The nine acceptance criteria, each at its stated tolerance and time budget.

Run alone with ``pytest tests/test_acceptance.py -v``; the terminal summary
lists one PASS/FAIL line per criterion.
"""

import json
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from mkdvh import cli, genairy, hierarchy
from mkdvh.painleve import ASParams, as_solve, connection_fit, connection_predict, wrap_phase
from mkdvh.scattering import Potential, reflection
from oracles import classical_airy

HERE = Path(__file__).parent


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def test_criterion_1_symbolic_reproduction(acceptance, capsys):
    expected = {
        ("1", "mkdv"): "u_t = 6*u^2*u^(1) - u^(3)",
        ("2", "mkdv"): "u_t = 40*u*u^(1)*u^(2) + 10*u^2*u^(3) - 30*u^4*u^(1) + 10*u^(1)^3 - u^(5)",
        ("1", "pii"): "-2*q^3 + q^(2) = x*q",
        ("2", "pii"): "-10*q*q^(1)^2 - 10*q^2*q^(2) + 6*q^5 + q^(4) = x*q",
    }
    hierarchy.lenard_mkdv.cache_clear()
    hierarchy.mkdv_rhs.cache_clear()
    hierarchy.pii_lhs.cache_clear()
    t0 = time.perf_counter()
    got = {}
    for (n, target) in expected:
        cli.main(["hierarchy", "--n", n, "--target", target])
        got[(n, target)] = capsys.readouterr().out.strip()
    elapsed = time.perf_counter() - t0
    ok = got == expected and elapsed < 1.0
    acceptance(1, ok, f"4/4 strings {'match' if got == expected else 'DIFFER'}, {elapsed:.2f}s")
    assert ok, got


def test_criterion_2_zero_curvature(acceptance):
    hierarchy.lax_matrices.cache_clear()
    (res, elapsed) = _timed(lambda: [hierarchy.residual_is_zero(hierarchy.zero_curvature_residual(n))
                                     for n in (1, 2)])
    ok = all(res) and elapsed < 30
    acceptance(2, ok, f"residual zero for n=1,2: {res}, {elapsed:.2f}s")
    assert ok


def test_criterion_3_generalized_airy(acceptance):
    def run():
        xs = np.linspace(-10, 5, 151)
        ours = genairy.ai_values(1, xs)
        oracle = np.array([classical_airy(x) for x in xs])
        err_classical = float(np.max(np.abs(ours - oracle)))
        worst = 0.0
        for n in (1, 2, 3):
            for x in np.linspace(-12, 8, 41):
                worst = max(worst, genairy.ode_residual(n, x))
        return err_classical, worst

    (err, worst), elapsed = _timed(run)
    ok = err <= 1e-10 and worst <= 1e-8 and elapsed < 10
    acceptance(3, ok, f"|Ai - oracle| = {err:.1e}, max ODE residual = {worst:.1e}, {elapsed:.2f}s")
    assert ok


def test_criterion_4_connection_formulas(acceptance):
    cases = [(1, 0.3, 0.01, 0.05), (1, 0.5, 0.01, 0.05), (1, 0.9, 0.01, 0.05), (2, 0.5, 0.02, 0.1)]

    def run():
        rows = []
        for n, rho, dtol, ptol in cases:
            fit = connection_fit(as_solve(ASParams(n, rho)), (-40, -20))
            d, phi = connection_predict(n, rho)
            rows.append((n, rho, abs(fit.d_fit - d) / d, abs(wrap_phase(fit.phi_fit - phi)), dtol, ptol))
        return rows

    rows, elapsed = _timed(run)
    ok = all(de < dt and pe < pt for _, _, de, pe, dt, pt in rows) and elapsed < 120
    detail = "; ".join(f"n={n} rho={r}: d {de:.1e} phi {pe:.1e}" for n, r, de, pe, _, _ in rows)
    acceptance(4, ok, f"{detail}, {elapsed:.1f}s")
    assert ok


def test_criterion_5_scattering_invariants(acceptance):
    data_list = [Potential.named("sech", 0.5), Potential.named("gaussian", 0.3),
                 Potential.named("odd-gaussian", 0.3)]

    def run():
        out = []
        for u0 in data_list:
            d = reflection(u0)
            out.append((
                float(np.max(np.abs(np.abs(d.a_vals) ** 2 - np.abs(d.b_vals) ** 2 - 1))),
                float(np.max(np.abs(d.r_vals + np.conj(d.r_vals[::-1])))),
                float(np.max(np.abs(d.r_vals))),
                abs(d.r0.real),
                abs(d.r0),
            ))
        return out

    rows, elapsed = _timed(run)
    ok = all(u <= 1e-8 and s <= 1e-8 and m < 1 and re <= 1e-6 for u, s, m, re, _ in rows)
    ok = ok and rows[2][4] <= 1e-6 and elapsed < 60
    unit = max(r[0] for r in rows)
    sym = max(r[1] for r in rows)
    acceptance(5, ok, f"unitarity {unit:.1e}, symmetry {sym:.1e}, max|r| {max(r[2] for r in rows):.3f}, "
                      f"|r(0)| odd datum {rows[2][4]:.1e}, {elapsed:.1f}s")
    assert ok


def _pipeline(cfg_name, tmp_path):
    out = tmp_path / cfg_name.replace(".cfg", "")
    code = cli.main(["pipeline", "--config", cfg_name, "--out", str(out)])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    return report, out


@pytest.mark.slow
def test_criterion_6_leading_order_first_member(acceptance, tmp_path):
    (report, out), elapsed = _timed(lambda: _pipeline("theorem12_n1.cfg", tmp_path))
    slope = report["scaled_order"]
    overlay = (out / "overlay.csv").read_text().splitlines()
    ok = (slope <= -1 / 3 + 0.15 and report["monotone"] and len(overlay) > 100
          and report["ts"] == [50.0, 100.0, 200.0] and elapsed < 600)
    errs = ", ".join(f"{e:.2e}" for e in report["scaled_errors"])
    acceptance(6, ok, f"scaled sup errors [{errs}], slope {slope:.3f} (need <= {-1/3 + 0.15:.3f}), "
                      f"{elapsed:.0f}s")
    assert ok


@pytest.mark.slow
def test_criterion_7_zero_mass_first_member(acceptance, tmp_path):
    (report, _), elapsed = _timed(lambda: _pipeline("theorem13_n1.cfg", tmp_path))
    order = report["fitted_order"]
    u2_err = report["u2_extraction_rel_error"]
    ok = (report["r0_abs"] < 1e-6 and order <= -4 / 3 + 0.2 and u2_err <= 0.1 and elapsed < 600)
    acceptance(7, ok, f"|r(0)| {report['r0_abs']:.1e}, N=3 remainder slope {order:.3f} "
                      f"(need <= {-4/3 + 0.2:.3f}), u2 extraction error {u2_err:.3f}, {elapsed:.0f}s")
    assert ok


@pytest.mark.slow
def test_criterion_8_leading_order_second_member(acceptance, tmp_path):
    (report, _), elapsed = _timed(lambda: _pipeline("theorem12_n2.cfg", tmp_path))
    slope = report["scaled_order"]
    ok = report["monotone"] and slope <= -1 / 5 + 0.15 and elapsed < 900
    errs = ", ".join(f"{e:.2e}" for e in report["scaled_errors"])
    acceptance(8, ok, f"scaled sup errors [{errs}], monotone {report['monotone']}, slope {slope:.3f} "
                      f"(need <= {-1/5 + 0.15:.3f}), {elapsed:.0f}s")
    assert ok


@pytest.mark.slow
def test_criterion_9_property_suites(acceptance):
    t0 = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", str(HERE / "test_properties.py")],
        capture_output=True, text=True, cwd=HERE.parent,
    )
    elapsed = time.perf_counter() - t0
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    ok = proc.returncode == 0 and elapsed < 300
    acceptance(9, ok, f"{summary}, {elapsed:.0f}s")
    assert ok, proc.stdout[-3000:]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
