"""Liouvillian construction, propagation and steady states.

Density matrices are plain 3x3 complex arrays over the ordered basis
(s0, s1, s2).  The generator is a 9x9 complex matrix acting on
column-stacked matrices: vec index(i, j) = 3*j + i.  The 9x9 matrix is
always built by applying the defining map to the nine basis matrices, so
the stacking convention never leaks into results.
"""

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from .errors import DegenerateSteadyStateError, NumericalError, ParameterError
from .model import DIM, OperatorSet, build_operator_set, phonon_rates, qpc_amplitudes
from .params import HBAR_MEV_NS, ModelParams

# Relative threshold under which a second singular value means a
# degenerate kernel.
KERNEL_DEGENERACY_TOL = 1e-10

_TRACE_ROW = np.zeros(DIM * DIM, dtype=complex)
_TRACE_ROW[:: DIM + 1] = 1.0


def vec(x: np.ndarray) -> np.ndarray:
    """Column-stack a matrix into a length-9 vector."""
    return np.asarray(x, dtype=complex).flatten(order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return np.asarray(v, dtype=complex).reshape((DIM, DIM), order="F")


def lindblad_rhs(H: np.ndarray, ops, rho: np.ndarray) -> np.ndarray:
    """-(i/hbar)[H, rho] + sum_k (L rho L^dag - (1/2){L^dag L, rho})."""
    out = (-1j / HBAR_MEV_NS) * (H @ rho - rho @ H)
    for L in ops:
        Ld = L.conj().T
        LdL = Ld @ L
        out += L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL)
    return out


def build_generator(H: np.ndarray, ops: OperatorSet | list) -> np.ndarray:
    """9x9 generator of the Lindblad semigroup, built column by column."""
    H = np.asarray(H, dtype=complex)
    if H.shape != (DIM, DIM):
        raise ParameterError(f"H must be {DIM}x{DIM}, got {H.shape}")
    if not np.allclose(H, H.conj().T, rtol=0.0, atol=1e-12):
        raise ParameterError("H must be Hermitian")
    op_list = ops.all_ops if isinstance(ops, OperatorSet) else list(ops)
    L = np.empty((DIM * DIM, DIM * DIM), dtype=complex)
    for j in range(DIM):
        for i in range(DIM):
            basis = np.zeros((DIM, DIM), dtype=complex)
            basis[i, j] = 1.0
            L[:, DIM * j + i] = vec(lindblad_rhs(H, op_list, basis))
    return L


def generator(p: ModelParams) -> np.ndarray:
    """Generator for a parameter set (all seven channels)."""
    ops = build_operator_set(p)
    return build_generator(ops.H, ops)


def evolve(L: np.ndarray, rho0: np.ndarray, t: float,
           method: str = "expm") -> np.ndarray:
    """Propagate rho0 by time t (ns): exp(L t)[rho0].

    ``method="expm"`` uses the dense scaling-and-squaring Pade-13 matrix
    exponential; ``method="ode"`` integrates the master equation with
    DOP853 at relative tolerance 1e-11.  The two paths exist for
    cross-testing and agree to ~1e-8.
    """
    if t < 0:
        raise ParameterError(f"evolution time must be non-negative, got {t}")
    r0 = vec(rho0)
    if t == 0.0:
        return unvec(r0)
    if method == "expm":
        return unvec(scipy.linalg.expm(L * t) @ r0)
    if method == "ode":
        sol = solve_ivp(
            lambda _t, y: L @ y, (0.0, t), r0,
            method="DOP853", rtol=1e-11, atol=1e-13 * max(1.0, np.abs(r0).max()),
        )
        if not sol.success:
            raise NumericalError(f"ODE propagation failed: {sol.message}")
        return unvec(sol.y[:, -1])
    raise ParameterError(f"unknown evolve method {method!r}")


def steady_state_numeric(L: np.ndarray) -> np.ndarray:
    """Unique unit-trace kernel element of L, from an SVD null space.

    Raises :class:`DegenerateSteadyStateError` when the kernel is not
    one-dimensional (second singular value below 1e-10 of the largest).
    """
    scale = np.abs(L).max()
    if scale == 0.0:
        raise DegenerateSteadyStateError(0.0, 0.0, 0.0)
    _, s, vh = np.linalg.svd(L / scale)
    if s[-2] < KERNEL_DEGENERACY_TOL * s[0]:
        raise DegenerateSteadyStateError(s[-1] * scale, s[-2] * scale, s[0] * scale)
    rho = unvec(vh[-1].conj())
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr) < 1e-8:
        raise NumericalError(
            f"kernel element has near-zero trace ({tr:.3e}); "
            "not a valid state")
    rho = rho / tr
    residual = np.linalg.norm(L @ vec(rho))
    if residual > 1e-12 * scale * 100:
        raise NumericalError(
            f"steady-state residual {residual:.3e} exceeds tolerance "
            f"relative to |L| = {scale:.3e}")
    return rho


def steady_state_analytic(p: ModelParams) -> np.ndarray:
    """Closed-form diagonal steady state of the full generator.

    Unnormalized weights
        w0 = (A+^2 + g02)(A0^2 + g21),
        w1 = (A0^2 + g12)(A-^2 + g20),
        w2 = (A-^2 + g20)(A0^2 + g21),
    normalized by their sum.
    """
    a_plus, a_minus, a_0 = qpc_amplitudes(p)
    r = phonon_rates(p)
    ap2, am2, a02 = a_plus ** 2, a_minus ** 2, a_0 ** 2
    w0 = (ap2 + r.gamma_02) * (a02 + r.gamma_21)
    w1 = (a02 + r.gamma_12) * (am2 + r.gamma_20)
    w2 = (am2 + r.gamma_20) * (a02 + r.gamma_21)
    norm = w0 + w1 + w2
    if norm <= 0.0:
        raise NumericalError("all steady-state weights vanish")
    return np.diag([w0 / norm, w1 / norm, w2 / norm]).astype(complex)


def spectral_gap(L: np.ndarray) -> float:
    """Smallest nonzero |Re(eigenvalue)| of the generator (1/ns)."""
    ev = np.linalg.eigvals(L)
    re = np.abs(ev.real)
    cutoff = 1e-10 * max(re.max(), 1.0)
    nonzero = re[re > cutoff]
    if nonzero.size == 0:
        raise NumericalError("generator has no decaying modes")
    return float(nonzero.min())
