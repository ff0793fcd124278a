"""Monte-Carlo wave-function unraveling with jump counting.

Stochastic oracle for the deterministic noise results.  Trajectories
follow the exact waiting-time construction: between jumps the state
evolves under the non-Hermitian drift H_eff = H - (i hbar/2) sum L^dag L,
the next jump time solves |psi(t)|^2 = r for a uniform r (norm-decay
inversion; |psi(t)|^2 is monotone, so the root is unique), the channel
is drawn proportionally to |L_k psi|^2, and the normalized post-jump
state continues.  Counted (detector) channels increment the per-window
electron counter; phonon channels do not.

Basis states on which the drift is diagonal and every jump lands on a
basis state again evolve classically: their sojourn is sampled as one
exponential exit plus a Poisson number of self-loop counts.  This fast
path is statistically identical to resolving each self-jump and is what
makes millions of detector events per window affordable.

All trajectories advance in lockstep as numpy batches drawn from a
single seeded generator; identical configuration reproduces identical
output bit for bit.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ParameterError
from .liouvillian import build_generator, spectral_gap, vec
from .model import DIM, build_operator_set
from .params import HBAR_MEV_NS, ModelParams

_NO_JUMP = np.iinfo(np.int64).max   # sentinel exit time for absorbing states


@dataclass(frozen=True)
class TrajectoryConfig:
    n_trajectories: int = 1000
    t_window: float = 1000.0      # ns; counting window length
    n_windows: int = 1            # windows per trajectory after burn-in
    seed: int = 0
    norm_tolerance: float = 1e-10   # relative accuracy of jump-time roots

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise ParameterError("n_trajectories must be at least 1")
        if not self.t_window > 0:
            raise ParameterError("t_window must be positive")
        if self.n_windows < 1:
            raise ParameterError("n_windows must be at least 1")
        if not 0 < self.norm_tolerance < 1e-2:
            raise ParameterError("norm_tolerance must be in (0, 1e-2)")


@dataclass(frozen=True)
class CountRecord:
    counts: np.ndarray        # (n_trajectories, n_windows) int64
    mean: float               # counts per window
    variance: float
    fano_estimate: float      # variance / mean
    std_error: float          # of fano_estimate, batch means over trajectories

    def flat_counts(self) -> np.ndarray:
        return self.counts.reshape(-1)


class _Unraveling:
    """Precomputed quantities shared by every trajectory of one model."""

    def __init__(self, p: ModelParams):
        ops = build_operator_set(p)
        self.ops = np.stack(ops.all_ops)             # (7, 3, 3)
        self.counted = np.array([True] * len(ops.counted_ops)
                                + [False] * len(ops.uncounted_ops))
        k_tot = np.zeros((DIM, DIM), dtype=complex)
        for op in self.ops:
            k_tot += op.conj().T @ op
        # drift matrix in 1/ns: psi' = M psi between jumps
        self.M = (-1j / HBAR_MEV_NS) * ops.H - 0.5 * k_tot
        evals, W = np.linalg.eig(self.M)
        Winv = np.linalg.inv(W)
        recon = W @ np.diag(evals) @ Winv
        if np.abs(recon - self.M).max() > 1e-10 * max(np.abs(self.M).max(), 1.0):
            raise NumericalError("drift eigendecomposition is ill-conditioned")
        self.evals = evals                           # (3,)
        self.W = W
        self.Winv = Winv
        self.G = W.conj().T @ W                      # Gram matrix of eigenvectors
        self._classify_classical()

    def _classify_classical(self):
        """Mark basis states whose unraveling is a classical jump process.

        Basis k is classical when the drift leaves e_k invariant (its
        off-diagonal column vanishes) and every operator maps e_k to a
        multiple of a basis vector.  Operator sparsity is exact by
        construction, so exact-zero tests are appropriate.
        """
        self.classical = np.zeros(DIM, dtype=bool)
        self.exit_rate = np.zeros(DIM)          # total state-changing rate
        self.self_count_rate = np.zeros(DIM)    # counted self-loop rate
        self.exit_channels = [[] for _ in range(DIM)]  # (rate, target, counted)
        for k in range(DIM):
            col = self.M[:, k].copy()
            col[k] = 0.0
            if np.any(col != 0.0):
                continue
            channels = []
            ok = True
            for op, counted in zip(self.ops, self.counted):
                image = op[:, k]
                nz = np.nonzero(image)[0]
                if nz.size == 0:
                    continue
                if nz.size > 1:
                    ok = False
                    break
                target = int(nz[0])
                rate = float(np.abs(image[target]) ** 2)
                channels.append((rate, target, bool(counted)))
            if not ok:
                continue
            self.classical[k] = True
            for rate, target, counted in channels:
                if target == k:
                    if counted:
                        self.self_count_rate[k] += rate
                else:
                    self.exit_channels[k].append((rate, target, counted))
            self.exit_rate[k] = sum(r for r, _, _ in self.exit_channels[k])
        # dense per-state tables for vectorized exit-channel selection
        width = max((len(ch) for ch in self.exit_channels), default=0) or 1
        self.exit_cum = np.full((DIM, width), 2.0)     # cumulative probabilities
        self.exit_target = np.zeros((DIM, width), dtype=np.int64)
        self.exit_counted_tab = np.zeros((DIM, width), dtype=bool)
        for k in range(DIM):
            total = self.exit_rate[k]
            acc = 0.0
            for c, (rate, target, counted) in enumerate(self.exit_channels[k]):
                acc += rate / total
                self.exit_cum[k, c] = acc
                self.exit_target[k, c] = target
                self.exit_counted_tab[k, c] = counted
            if self.exit_channels[k]:
                self.exit_cum[k, len(self.exit_channels[k]) - 1] = 1.0 + 1e-12

    def jump_rates(self, psi: np.ndarray) -> np.ndarray:
        """(n, 7) rates |L_k psi|^2 for a batch of states (n, 3)."""
        images = np.einsum("kij,nj->nki", self.ops, psi)
        return np.einsum("nki,nki->nk", images.conj(), images).real

    def apply_channel(self, psi: np.ndarray, channel: np.ndarray) -> np.ndarray:
        """Normalized L_c psi for per-trajectory channel indices."""
        out = np.einsum("nij,nj->ni", self.ops[channel], psi)
        norms = np.linalg.norm(out, axis=1, keepdims=True)
        if np.any(norms == 0.0):
            raise NumericalError(
                "jump into a zero-rate channel; inconsistent norm decay")
        return out / norms


def _propagate_factors(unr: _Unraveling, d: np.ndarray, t: np.ndarray):
    """Eigenmode amplitudes u = exp(eval * t) * d for per-row times t."""
    return np.exp(np.multiply.outer(t, unr.evals)) * d


def _norm_sq(unr: _Unraveling, d: np.ndarray, t: np.ndarray) -> np.ndarray:
    u = _propagate_factors(unr, d, t)
    v = u @ unr.G.T    # row j of G.T pairing: (G u^T)^T
    return np.einsum("ni,ni->n", u.conj(), v).real


def _norm_sq_and_deriv(unr: _Unraveling, d: np.ndarray, t: np.ndarray):
    u = _propagate_factors(unr, d, t)
    v = u @ unr.G.T
    f = np.einsum("ni,ni->n", u.conj(), v).real
    du = unr.evals * u
    df = 2.0 * np.einsum("ni,ni->n", du.conj(), v).real
    return f, df


def _solve_jump_time(unr: _Unraveling, d: np.ndarray, r: np.ndarray,
                     t_hi: np.ndarray, f_hi: np.ndarray,
                     tol: float) -> np.ndarray:
    """Solve |psi(t)|^2 = r on [0, t_hi] where f_hi = |psi(t_hi)|^2 <= r.

    Safeguarded Newton on the monotone norm decay, vectorized over
    trajectories: steps that leave the current bracket fall back to
    bisection.  The initial guess comes from the instantaneous decay
    rate at t = 0.
    """
    n = d.shape[0]
    lo = np.zeros(n)
    hi = t_hi.astype(float).copy()
    f0, df0 = _norm_sq_and_deriv(unr, d, np.zeros(n))
    with np.errstate(divide="ignore", invalid="ignore"):
        guess = np.log(r / f0) * (f0 / df0)
    t = np.clip(np.where(np.isfinite(guess), guess, 0.5 * hi), 0.0, hi)
    converged = np.zeros(n, dtype=bool)
    for _ in range(80):
        f, df = _norm_sq_and_deriv(unr, d, t)
        newly = np.abs(f - r) <= tol * r
        converged |= newly
        if np.all(converged):
            break
        above = f > r
        lo = np.where(above & ~converged, t, lo)
        hi = np.where(~above & ~converged, t, hi)
        f_hi = np.where(~above & ~converged, f, f_hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = (f - r) / df
            t_new = t - step
        bad = ~np.isfinite(t_new) | (t_new <= lo) | (t_new >= hi)
        t_new = np.where(bad, 0.5 * (lo + hi), t_new)
        t = np.where(converged, t, t_new)
    else:
        raise NumericalError("jump-time inversion failed to converge")
    return t


def _draw_targets(rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniform norm-decay targets, clamped away from an exact zero."""
    return np.maximum(rng.random(size), 1e-300)


def _simulate(p: ModelParams, cfg: TrajectoryConfig, record_counts: bool,
              t_burn: float, t_final: float, psi0: np.ndarray,
              rng: np.random.Generator):
    """Advance all trajectories to t_final; optionally count windows.

    Returns (counts, psi_final).  Counting windows (length cfg.t_window)
    start at t_burn.  psi0 is (n, 3) normalized initial states.
    """
    unr = _Unraveling(p)
    n = cfg.n_trajectories
    counts = np.zeros((n, cfg.n_windows if record_counts else 1), dtype=np.int64)
    if record_counts:
        expected = max(unr.self_count_rate.max(), 1.0) * cfg.t_window
        if expected > 1e15:
            raise ParameterError(
                "expected counts per window would overflow; use a smaller "
                "t_window")
    psi = psi0.astype(complex).copy()
    t_now = np.zeros(n)
    r_carry = _draw_targets(rng, n)  # norm-decay targets, one per trajectory
    exit_left = np.full(n, np.inf)   # classical time-to-exit; inf = unset
    active = np.ones(n, dtype=bool)

    # classical bookkeeping helpers
    basis_idx = np.argmax(np.abs(psi) ** 2, axis=1)
    weight = np.abs(psi[np.arange(n), basis_idx]) ** 2
    is_classical = unr.classical[basis_idx] & (weight > 1.0 - 1e-12)

    def window_of(times):
        w = np.floor((times - t_burn) / cfg.t_window).astype(np.int64)
        return w

    def add_poisson_counts(idx, t0, t1, rates):
        """Poisson self-loop counts on [t0, t1), split across windows."""
        if not record_counts or idx.size == 0:
            return
        # clip to the counting region
        a = np.maximum(t0, t_burn)
        b = np.minimum(t1, t_final)
        mask = b > a
        idx, a, b, rates = idx[mask], a[mask], b[mask], rates[mask]
        while idx.size:
            w = window_of(a)
            w_end = t_burn + (w + 1) * cfg.t_window
            seg_end = np.minimum(b, w_end)
            lam = rates * (seg_end - a)
            drawn = rng.poisson(lam)
            np.add.at(counts, (idx, np.minimum(w, cfg.n_windows - 1)), drawn)
            a = seg_end
            mask = b > a + 1e-15
            idx, a, b, rates = idx[mask], a[mask], b[mask], rates[mask]

    def add_unit_counts(idx, times):
        if not record_counts or idx.size == 0:
            return
        mask = (times >= t_burn) & (times < t_final)
        idx, times = idx[mask], times[mask]
        w = np.minimum(window_of(times), cfg.n_windows - 1)
        np.add.at(counts, (idx, w), 1)

    max_iter = 10_000_000
    for _ in range(max_iter):
        if not np.any(active):
            break

        # --- classical trajectories: one sojourn segment each ---
        cls = np.nonzero(active & is_classical)[0]
        if cls.size:
            k = basis_idx[cls]
            need = ~np.isfinite(exit_left[cls])
            if np.any(need):
                rates = unr.exit_rate[k[need]]
                draws = rng.exponential(1.0, need.sum())
                with np.errstate(divide="ignore"):
                    dwell = draws / rates
                exit_left[cls[need]] = np.where(rates > 0.0, dwell, np.inf)
            t0 = t_now[cls]
            t_exit = t0 + exit_left[cls]
            t1 = np.minimum(t_exit, t_final)
            add_poisson_counts(cls, t0, t1, unr.self_count_rate[k])
            exits = t_exit <= t_final
            done = ~exits
            # finished trajectories stop at t_final in their basis state
            t_now[cls[done]] = t_final
            active[cls[done]] = False
            ex = cls[exits]
            if ex.size:
                t_now[ex] = t_exit[exits]
                exit_left[ex] = np.inf
                kk = basis_idx[ex]
                # vectorized exit-channel selection from the per-state tables
                uu = rng.random(ex.size)
                pick = (uu[:, None] > unr.exit_cum[kk]).sum(axis=1)
                new_basis = unr.exit_target[kk, pick]
                counted_exit = unr.exit_counted_tab[kk, pick]
                add_unit_counts(ex[counted_exit], t_now[ex[counted_exit]])
                basis_idx[ex] = new_basis
                psi[ex] = 0.0
                psi[ex, new_basis] = 1.0
                is_classical[ex] = unr.classical[new_basis]
                r_carry[ex] = _draw_targets(rng, ex.size)

        # --- quantum trajectories: advance to next jump or t_final ---
        qnt = np.nonzero(active & ~is_classical)[0]
        if qnt.size:
            d = (unr.Winv @ psi[qnt].T).T
            t_left = t_final - t_now[qnt]
            f_end = _norm_sq(unr, d, t_left)
            no_jump = f_end > r_carry[qnt]
            nj = qnt[no_jump]
            if nj.size:
                u = _propagate_factors(unr, d[no_jump], t_left[no_jump])
                psi_end = (unr.W @ u.T).T
                psi_end /= np.linalg.norm(psi_end, axis=1, keepdims=True)
                psi[nj] = psi_end
                t_now[nj] = t_final
                active[nj] = False
            jp = qnt[~no_jump]
            if jp.size:
                dj = d[~no_jump]
                tj = _solve_jump_time(
                    unr, dj, r_carry[jp], t_left[~no_jump], f_end[~no_jump],
                    cfg.norm_tolerance)
                u = _propagate_factors(unr, dj, tj)
                phi = (unr.W @ u.T).T
                rates = unr.jump_rates(phi)
                totals = rates.sum(axis=1)
                if np.any(totals <= 0.0):
                    raise NumericalError(
                        "norm decayed but total jump rate vanished")
                cum = np.cumsum(rates / totals[:, None], axis=1)
                uu = rng.random(jp.size)
                channel = (uu[:, None] > cum).sum(axis=1)
                channel = np.minimum(channel, len(unr.ops) - 1)
                t_now[jp] = t_now[jp] + tj
                hit_counted = unr.counted[channel]
                add_unit_counts(jp[hit_counted], t_now[jp[hit_counted]])
                psi[jp] = unr.apply_channel(phi, channel)
                # a jump may land exactly on a basis state; re-classify
                amax = np.argmax(np.abs(psi[jp]) ** 2, axis=1)
                wmax = np.abs(psi[jp, amax]) ** 2
                to_cls = unr.classical[amax] & (wmax > 1.0 - 1e-12)
                basis_idx[jp] = np.where(to_cls, amax, basis_idx[jp])
                if np.any(to_cls):
                    sel = jp[to_cls]
                    psi[sel] = 0.0
                    psi[sel, amax[to_cls]] = 1.0
                is_classical[jp] = to_cls
                r_carry[jp] = _draw_targets(rng, jp.size)
    else:
        raise NumericalError("trajectory loop exceeded iteration budget")

    return counts, psi


def _relaxation_time(p: ModelParams) -> float:
    ops = build_operator_set(p)
    return 1.0 / spectral_gap(build_generator(ops.H, ops))


def run_trajectories(p: ModelParams, cfg: TrajectoryConfig) -> CountRecord:
    """Counting statistics of the detector stream in the steady state.

    Each trajectory starts in s0, discards a burn-in of ten relaxation
    times, then accumulates cfg.n_windows windows of cfg.t_window ns.
    The Fano estimate is the pooled variance/mean over all windows; its
    standard error comes from batch means over trajectories.
    """
    rng = np.random.default_rng(cfg.seed)
    t_burn = 10.0 * _relaxation_time(p)
    t_final = t_burn + cfg.n_windows * cfg.t_window
    psi0 = np.zeros((cfg.n_trajectories, DIM), dtype=complex)
    psi0[:, 0] = 1.0
    counts, _ = _simulate(p, cfg, True, t_burn, t_final, psi0, rng)
    flat = counts.reshape(-1).astype(float)
    mean = flat.mean()
    if mean <= 0.0:
        raise NumericalError(
            "no counted events; increase t_window or check couplings")
    variance = flat.var(ddof=1)
    fano = variance / mean
    # batch means: one Fano estimate per group of trajectories
    n_batches = min(50, cfg.n_trajectories)
    groups = np.array_split(counts.astype(float), n_batches, axis=0)
    batch_f = np.array([g.var(ddof=1) / g.mean() for g in groups
                        if g.size > 1 and g.mean() > 0])
    if batch_f.size >= 2:
        std_error = batch_f.std(ddof=1) / math.sqrt(batch_f.size)
    else:
        std_error = float("nan")
    return CountRecord(counts=counts, mean=mean, variance=variance,
                       fano_estimate=fano, std_error=std_error)


def ensemble_average_state(p: ModelParams, cfg: TrajectoryConfig, t: float,
                           rho0: np.ndarray | None = None) -> np.ndarray:
    """Trajectory-averaged density matrix at time t from a fixed rho0.

    rho0 (default |s1><s1|) is decomposed into its eigenstates; each
    trajectory starts from one of them, drawn with the eigenvalue
    weights.  Converges to the deterministic propagation of rho0 as the
    number of trajectories grows.
    """
    if t < 0:
        raise ParameterError(f"time must be non-negative, got {t}")
    rng = np.random.default_rng(cfg.seed)
    if rho0 is None:
        rho0 = np.zeros((DIM, DIM), dtype=complex)
        rho0[1, 1] = 1.0
    w, vecs = np.linalg.eigh(np.asarray(rho0, dtype=complex))
    w = np.clip(w.real, 0.0, None)
    w = w / w.sum()
    # deterministic stratified allocation: largest-remainder rounding of
    # n * w, so t = 0 reproduces rho0 up to rounding, not sampling, error
    n = cfg.n_trajectories
    quota = n * w
    alloc = np.floor(quota).astype(int)
    rest = n - alloc.sum()
    if rest > 0:
        order = np.argsort(quota - alloc)[::-1]
        alloc[order[:rest]] += 1
    choice = np.repeat(np.arange(DIM), alloc)
    psi0 = vecs.T[choice].astype(complex)
    psi0 /= np.linalg.norm(psi0, axis=1, keepdims=True)
    _, psi = _simulate(p, cfg, False, t, t, psi0, rng)
    return np.einsum("ni,nj->ij", psi, psi.conj()) / cfg.n_trajectories


def dump_windows_csv(rec: CountRecord) -> str:
    """Raw per-window dump: trajectory_index,window_index,count lines."""
    lines = ["trajectory_index,window_index,count"]
    n_traj, n_win = rec.counts.shape
    for i in range(n_traj):
        for j in range(n_win):
            lines.append(f"{i},{j},{rec.counts[i, j]}")
    return "\n".join(lines) + "\n"
