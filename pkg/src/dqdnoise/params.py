"""Unit system and model parameters.

Fixed units: energies in meV, times in ns, temperatures in K.  The
elementary charge is 1, so currents are electron counting rates in 1/ns
and noise powers come out in units of e^2/ns.
"""

from dataclasses import dataclass, fields, replace

from .errors import ParameterError

HBAR_MEV_NS = 6.582119569e-4    # meV ns
KB_MEV_PER_K = 8.617333262e-2   # meV / K
E_CHARGE = 1.0                  # counts are single electrons

GAP_CONVENTIONS = ("spectral", "qpc")


@dataclass(frozen=True)
class ModelParams:
    """Physical inputs of the double-dot + detector + phonon model.

    ``U`` (meV) is the on-site charging energy, ``J`` (meV) the exchange
    splitting, ``V`` (meV) the detector bias.  ``tunneling_T`` and
    ``tunneling_nu`` are the unconditional and occupation-conditioned
    detector tunneling constants at ``alpha = 1``; the working couplings
    are obtained by dividing by ``alpha`` (see :func:`effective_couplings`),
    so sweeps over ``alpha`` never mutate the stored base values.
    ``gamma_a0`` and ``gamma_b0`` (1/ns) are the spontaneous phonon
    emission rates of the s2->s0 and s2->s1 transitions.

    ``gap_convention`` selects the energy quantum assigned to the s0<->s2
    phonon transition: ``"spectral"`` uses the eigenenergy difference
    U + 2J, ``"qpc"`` uses U + J (the value appearing inside the detector
    operators).  It exists for sensitivity analysis only.
    """

    U: float = 1.0
    J: float = 0.1
    V: float = 2.0
    tunneling_T: float = 0.1
    tunneling_nu: float = 2.25e-3
    gamma_a0: float = 1.15e-3
    gamma_b0: float = 6.01e-8
    temperature: float = 0.0
    alpha: float = 1.0
    gap_convention: str = "spectral"

    def __post_init__(self):
        if not self.U > 0:
            raise ParameterError(f"U must be positive, got {self.U}")
        if not self.V > 0:
            raise ParameterError(f"V must be positive, got {self.V}")
        if self.J < 0:
            raise ParameterError(f"J must be non-negative, got {self.J}")
        if self.temperature < 0:
            raise ParameterError(
                f"temperature must be non-negative, got {self.temperature}")
        if not self.alpha > 0:
            raise ParameterError(f"alpha must be positive, got {self.alpha}")
        if self.tunneling_T < 0 or self.tunneling_nu < 0:
            raise ParameterError("tunneling constants must be non-negative")
        if self.gamma_a0 < 0 or self.gamma_b0 < 0:
            raise ParameterError("phonon rates must be non-negative")
        # High-bias validity: all square roots in the detector operators
        # must stay real.
        if not self.V > self.U + self.J:
            raise ParameterError(
                f"high-bias condition violated: V = {self.V} must exceed "
                f"U + J = {self.U + self.J}")
        if self.gap_convention not in GAP_CONVENTIONS:
            raise ParameterError(
                f"gap_convention must be one of {GAP_CONVENTIONS}, "
                f"got {self.gap_convention!r}")


def default_params() -> ModelParams:
    """GaAs-structure defaults at zero temperature and alpha = 1."""
    return ModelParams()


def effective_couplings(p: ModelParams) -> tuple[float, float]:
    """Working tunneling constants (T_eff, nu_eff) = (T0, nu0) / alpha."""
    if not p.alpha > 0:
        raise ParameterError(f"alpha must be positive, got {p.alpha}")
    return p.tunneling_T / p.alpha, p.tunneling_nu / p.alpha


# Config file keys <-> ModelParams fields.  The key spelling is part of the
# external interface; do not rename.
_KEY_TO_FIELD = {
    "U_meV": "U",
    "J_meV": "J",
    "V_meV": "V",
    "T0": "tunneling_T",
    "nu0": "tunneling_nu",
    "gamma_a0_per_ns": "gamma_a0",
    "gamma_b0_per_ns": "gamma_b0",
    "temperature_K": "temperature",
    "alpha": "alpha",
    "gap_convention": "gap_convention",
}
_FIELD_TO_KEY = {v: k for k, v in _KEY_TO_FIELD.items()}


def parse_config(text: str, base: ModelParams | None = None) -> ModelParams:
    """Parse ``key = value`` lines into a validated ModelParams.

    Unknown keys, non-numeric values and invariant violations raise
    :class:`ParameterError` naming the offending key.  Keys that are not
    mentioned keep their default (or ``base``) values.  ``#`` starts a
    comment; blank lines are ignored.
    """
    overrides = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(
                f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KEY_TO_FIELD:
            raise ParameterError(f"config line {lineno}: unknown key {key!r}")
        field = _KEY_TO_FIELD[key]
        if field == "gap_convention":
            overrides[field] = value
        else:
            try:
                overrides[field] = float(value)
            except ValueError:
                raise ParameterError(
                    f"config line {lineno}: non-numeric value {value!r} "
                    f"for key {key!r}") from None
    base = base if base is not None else default_params()
    return replace(base, **overrides)


def format_config(p: ModelParams) -> str:
    """Serialize to the config format; parse_config round-trips exactly."""
    lines = []
    for f in fields(ModelParams):
        value = getattr(p, f.name)
        key = _FIELD_TO_KEY[f.name]
        if isinstance(value, float):
            lines.append(f"{key} = {value!r}")
        else:
            lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def as_dict(p: ModelParams) -> dict:
    """Parameters keyed by their config-file names (for JSON echoes)."""
    return {_FIELD_TO_KEY[f.name]: getattr(p, f.name) for f in fields(ModelParams)}
