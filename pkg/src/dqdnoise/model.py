"""Singlet-sector eigenstructure, jump operators and phonon rates.

The three singlet levels are ordered (s0, s1, s2) with energies
(-J, U, U+J).  All operators are built directly in this eigenbasis as
3x3 complex matrices; entries are real and non-negative by the phase
convention of the eigenstates.  Jump operators carry units of
sqrt(1/ns), so L rho L^dag terms are rates.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .params import HBAR_MEV_NS, KB_MEV_PER_K, ModelParams, effective_couplings

DIM = 3


def ketbra(i: int, j: int) -> np.ndarray:
    """|s_i><s_j| as a dense complex matrix."""
    m = np.zeros((DIM, DIM), dtype=complex)
    m[i, j] = 1.0
    return m


@dataclass(frozen=True)
class EigenStructure:
    theta: float          # mixing angle, rad
    xi: float             # sin(theta/2)/sqrt(2)
    xi_prime: float       # cos(theta/2)/sqrt(2)
    delta: float          # inter-dot tunneling amplitude, meV
    energies: tuple[float, float, float]   # (-J, U, U+J) in meV


@dataclass(frozen=True)
class PhononRates:
    """Temperature-dependent phonon transition rates.

    gamma_ij is the rate of the j -> i transition (jump operator
    |s_i><s_j|): gamma_02 and gamma_12 are downward (emission),
    gamma_20 and gamma_21 upward (absorption).  omega_a and omega_b are
    the energy quanta of the s0<->s2 and s1<->s2 transitions.
    """

    gamma_02: float
    gamma_20: float
    gamma_12: float
    gamma_21: float
    omega_a: float
    omega_b: float


@dataclass(frozen=True)
class OperatorSet:
    """Hamiltonian plus the seven jump operators.

    counted_ops are the detector channels [C1, C2, C3] whose jumps carry
    one electron each; uncounted_ops are the phonon channels
    [B_20, B_02, B_21, B_12] (B_ij induces the j -> i transition).
    """

    H: np.ndarray
    counted_ops: list[np.ndarray]
    uncounted_ops: list[np.ndarray]

    @property
    def all_ops(self) -> list[np.ndarray]:
        return list(self.counted_ops) + list(self.uncounted_ops)


def delta_from_splitting(U: float, J: float) -> float:
    """Tunneling amplitude Delta reproducing a given exchange splitting J.

    Inverts J = (sqrt(U^2 + 16 Delta^2) - U)/2.
    """
    if not U > 0:
        raise ParameterError(f"U must be positive, got {U}")
    if J < 0:
        raise ParameterError(f"J must be non-negative, got {J}")
    return math.sqrt(J * (U + J)) / 2.0


def splitting_from_delta(U: float, delta: float) -> float:
    """Exchange splitting J(U, Delta); inverse of delta_from_splitting."""
    return 0.5 * (math.sqrt(U * U + 16.0 * delta * delta) - U)


def eigenstructure(p: ModelParams) -> EigenStructure:
    delta = delta_from_splitting(p.U, p.J)
    theta = math.atan(4.0 * delta / p.U)
    return EigenStructure(
        theta=theta,
        xi=math.sin(theta / 2.0) / math.sqrt(2.0),
        xi_prime=math.cos(theta / 2.0) / math.sqrt(2.0),
        delta=delta,
        energies=(-p.J, p.U, p.U + p.J),
    )


def bose_occupation(energy: float, temperature: float) -> float:
    """Bose distribution n(E, T); 0 at T = 0 by continuous extension."""
    if not energy > 0:
        raise ParameterError(
            f"bose_occupation expects a positive energy, got {energy}")
    if temperature < 0:
        raise ParameterError(
            f"temperature must be non-negative, got {temperature}")
    if temperature == 0.0:
        return 0.0
    x = energy / (KB_MEV_PER_K * temperature)
    if x > 700.0:    # exp would overflow; occupation is zero anyway
        return 0.0
    return 1.0 / math.expm1(x)


def phonon_gaps(p: ModelParams) -> tuple[float, float]:
    """Energy quanta (omega_a, omega_b) of the two phonon transitions."""
    omega_a = p.U + 2.0 * p.J if p.gap_convention == "spectral" else p.U + p.J
    return omega_a, p.J


def phonon_rates(p: ModelParams) -> PhononRates:
    """Detailed-balance rates: downward ~ (n+1), upward ~ n."""
    omega_a, omega_b = phonon_gaps(p)
    na = bose_occupation(omega_a, p.temperature) if p.gamma_a0 > 0 else 0.0
    nb = bose_occupation(omega_b, p.temperature) if p.gamma_b0 > 0 else 0.0
    return PhononRates(
        gamma_02=p.gamma_a0 * (na + 1.0),
        gamma_20=p.gamma_a0 * na,
        gamma_12=p.gamma_b0 * (nb + 1.0),
        gamma_21=p.gamma_b0 * nb,
        omega_a=omega_a,
        omega_b=omega_b,
    )


def hamiltonian(p: ModelParams) -> np.ndarray:
    """diag(-J, U, U+J) in meV."""
    return np.diag([-p.J, p.U, p.U + p.J]).astype(complex)


def build_qpc_operators(p: ModelParams) -> list[np.ndarray]:
    """Detector jump operators [C1, C2, C3] in sqrt(1/ns) units.

    C1 = nu sqrt((V-(U+J))/hbar) sin(theta/2) |s2><s0|,
    C2 = nu sqrt((V+(U+J))/hbar) sin(theta/2) |s0><s2|,
    C3 = sqrt(V/hbar) [(T+nu) I + nu cos(theta/2) (|s1><s2| + |s2><s1|)].
    """
    if not p.V > p.U + p.J:
        raise ParameterError(
            f"high-bias condition violated: V = {p.V} must exceed "
            f"U + J = {p.U + p.J}")
    t_eff, nu_eff = effective_couplings(p)
    es = eigenstructure(p)
    s = math.sin(es.theta / 2.0)
    c = math.cos(es.theta / 2.0)
    gap = p.U + p.J
    c1 = nu_eff * math.sqrt((p.V - gap) / HBAR_MEV_NS) * s * ketbra(2, 0)
    c2 = nu_eff * math.sqrt((p.V + gap) / HBAR_MEV_NS) * s * ketbra(0, 2)
    root_v = math.sqrt(p.V / HBAR_MEV_NS)
    c3 = root_v * ((t_eff + nu_eff) * np.eye(DIM, dtype=complex)
                   + nu_eff * c * (ketbra(1, 2) + ketbra(2, 1)))
    return [c1, c2, c3]


def build_phonon_operators(r: PhononRates) -> list[np.ndarray]:
    """Phonon jump operators [B_20, B_02, B_21, B_12], B_ij = sqrt(g_ij)|i><j|."""
    return [
        math.sqrt(r.gamma_20) * ketbra(2, 0),
        math.sqrt(r.gamma_02) * ketbra(0, 2),
        math.sqrt(r.gamma_21) * ketbra(2, 1),
        math.sqrt(r.gamma_12) * ketbra(1, 2),
    ]


def qpc_amplitudes(p: ModelParams) -> tuple[float, float, float]:
    """Scalar jump amplitudes (A_plus, A_minus, A_0) in sqrt(1/ns).

    A_minus is the coefficient of C1, A_plus that of C2 and A_0 the
    off-diagonal coefficient of C3; they are the quantities entering the
    closed-form steady state.
    """
    if not p.V > p.U + p.J:
        raise ParameterError(
            f"high-bias condition violated: V = {p.V} must exceed "
            f"U + J = {p.U + p.J}")
    _, nu_eff = effective_couplings(p)
    es = eigenstructure(p)
    s = math.sin(es.theta / 2.0)
    c = math.cos(es.theta / 2.0)
    gap = p.U + p.J
    a_plus = nu_eff * math.sqrt((p.V + gap) / HBAR_MEV_NS) * s
    a_minus = nu_eff * math.sqrt((p.V - gap) / HBAR_MEV_NS) * s
    a_0 = nu_eff * math.sqrt(p.V / HBAR_MEV_NS) * c
    return a_plus, a_minus, a_0


def build_operator_set(p: ModelParams) -> OperatorSet:
    """Assemble the Hamiltonian and all seven jump operators."""
    return OperatorSet(
        H=hamiltonian(p),
        counted_ops=build_qpc_operators(p),
        uncounted_ops=build_phonon_operators(phonon_rates(p)),
    )
