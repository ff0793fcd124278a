"""Cross-oracle validation suite.

Runs the independent computational routes against each other: closed
form vs numeric kernel for the steady state, resolvent vs time-domain
integration for the Fano factor, and (in the full run) trajectory
counting vs the resolvent.  Used by the command line `validate`
subcommand and by the test suite.
"""

import dataclasses
import time

import numpy as np

from . import liouvillian, noise, trajectories
from .params import ModelParams


def _default_grid(quick: bool):
    if quick:
        return [(1.0, 0.0), (3.0, 0.0), (3.0, 15.0), (0.5, 40.0)]
    return [(a, t) for a in (0.5, 1.0, 2.0, 3.0, 5.0)
            for t in (0.0, 5.0, 15.0, 25.0, 40.0)]


def run_validation(p: ModelParams, quick: bool = True, seed: int = 0) -> dict:
    """Return a machine-readable report; overall `passed` key aggregates."""
    checks = []

    def record(name, passed, detail):
        checks.append({"name": name, "passed": bool(passed), "detail": detail})

    # 1. analytic vs numeric steady state across the grid
    worst = 0.0
    for a, t in _default_grid(quick):
        pt = dataclasses.replace(p, alpha=a, temperature=t)
        ana = liouvillian.steady_state_analytic(pt)
        num = liouvillian.steady_state_numeric(liouvillian.generator(pt))
        worst = max(worst, float(np.abs(ana - num).max()))
    record("steady_state_analytic_vs_numeric", worst < 1e-10,
           f"max entrywise difference {worst:.2e} (tol 1e-10)")

    # 2. resolvent vs quadrature Fano factor
    worst = 0.0
    for a, t in _default_grid(quick):
        pt = dataclasses.replace(p, alpha=a, temperature=t)
        fr = noise.fano_resolvent(pt).fano
        fq = noise.fano_quadrature(pt).fano
        worst = max(worst, abs(fr - fq) / abs(fr))
    record("fano_resolvent_vs_quadrature", worst < 1e-6,
           f"max relative difference {worst:.2e} (tol 1e-6)")

    # 3. Poissonian limit
    p_nu0 = dataclasses.replace(p, tunneling_nu=0.0,
                                temperature=max(p.temperature, 15.0))
    dev = abs(noise.fano_resolvent(p_nu0).fano - 1.0)
    record("poissonian_limit", dev < 1e-12,
           f"|F - 1| = {dev:.2e} at nu = 0 (tol 1e-12)")

    # 4. trajectory counting vs resolvent
    pt = dataclasses.replace(p, alpha=3.0, temperature=0.0)
    gap = liouvillian.spectral_gap(liouvillian.generator(pt))
    n_traj = 400 if quick else 4000
    cfg = trajectories.TrajectoryConfig(
        n_trajectories=n_traj, t_window=10.0 / gap, n_windows=1, seed=seed)
    rec = trajectories.run_trajectories(pt, cfg)
    target = noise.finite_window_fano(pt, cfg.t_window)
    sigma = rec.std_error if np.isfinite(rec.std_error) else 1.0
    dev = abs(rec.fano_estimate - target)
    record("trajectory_vs_resolvent", dev < 4.0 * sigma,
           f"trajectory F = {rec.fano_estimate:.4f} vs {target:.4f} "
           f"(|diff| = {dev:.2e}, 4 sigma = {4 * sigma:.2e})")

    return {
        "passed": all(c["passed"] for c in checks),
        "checks": checks,
    }


def format_report(report: dict) -> str:
    lines = []
    width = max(len(c["name"]) for c in report["checks"])
    for c in report["checks"]:
        mark = "PASS" if c["passed"] else "FAIL"
        lines.append(f"{c['name']:<{width}}  {mark}  {c['detail']}")
    lines.append("overall: " + ("PASS" if report["passed"] else "FAIL"))
    return "\n".join(lines)
