"""The one-interference C-Phase gate: operators, partial interference, HOM scans.

Both photons meet at the overlap beam splitter; a coincidence is registered
either when both are transmitted or both are reflected. Those two amplitude
paths give the matrices ``M_tt`` and ``M_rr``. With interference quality
``Q'`` the post-selected map is

    E(ρ) = Q' (M_tt + M_rr) ρ (M_tt + M_rr)† + (1 - Q') (M_tt ρ M_tt† + M_rr ρ M_rr†)

Amplitudes are real and non-negative; the reflection phase i·i = -1 is
carried by the sign of ``M_rr``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .core import density
from .exceptions import DegeneratePostSelectionError, InvalidInputError

CONFIG_SCHEMA = "cphase-gate-config/1"
PRESETS = ("ideal", "paper-experimental")

_FWHM_TO_SIGMA = 1.0 / (2.0 * np.sqrt(2.0 * np.log(2.0)))


def _check_amplitude(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0):
        raise InvalidInputError(f"{name} = {value} outside [0, 1]")


@dataclass(frozen=True)
class ModeSplitting:
    """Transmission/reflection amplitudes of the overlap splitter for one input mode."""

    t_h: float
    t_v: float
    r_h: float
    r_v: float

    def __post_init__(self):
        for name in ("t_h", "t_v", "r_h", "r_v"):
            _check_amplitude(name, getattr(self, name))

    def is_lossless(self, tol: float = 1e-9) -> bool:
        return abs(self.t_h**2 + self.r_h**2 - 1) <= tol and abs(self.t_v**2 + self.r_v**2 - 1) <= tol


@dataclass(frozen=True)
class PDBSParams:
    a: ModeSplitting
    b: ModeSplitting
    lossless: bool = False

    def __post_init__(self):
        if self.lossless and not (self.a.is_lossless() and self.b.is_lossless()):
            raise InvalidInputError("lossless PDBS requires t^2 + r^2 = 1 per polarization and mode")


@dataclass(frozen=True)
class AttenuatorParams:
    """Transmission amplitudes of the output-mode attenuating splitters."""

    a_h: float
    a_v: float
    b_h: float
    b_v: float

    def __post_init__(self):
        for name in ("a_h", "a_v", "b_h", "b_v"):
            _check_amplitude(name, getattr(self, name))


@dataclass(frozen=True)
class GateConfig:
    pdbs: PDBSParams
    att: AttenuatorParams
    quality: float = 1.0
    coherence_length: float = 150.0  # µm, taken as the FWHM of the HOM envelope

    def __post_init__(self):
        if not (0.0 <= self.quality <= 1.0):
            raise InvalidInputError(f"quality Q' = {self.quality} outside [0, 1]")
        if not self.coherence_length > 0:
            raise InvalidInputError("coherence_length must be positive")

    def with_quality(self, quality: float) -> "GateConfig":
        return replace(self, quality=quality)

    @property
    def sigma(self) -> float:
        """Gaussian width of the HOM envelope in µm."""
        return self.coherence_length * _FWHM_TO_SIGMA

    def to_dict(self) -> dict:
        return {
            "schema": CONFIG_SCHEMA,
            "pdbs": {
                "a": asdict(self.pdbs.a),
                "b": asdict(self.pdbs.b),
                "lossless": self.pdbs.lossless,
            },
            "attenuators": asdict(self.att),
            "quality": self.quality,
            "coherence_length_um": self.coherence_length,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GateConfig":
        schema = data.get("schema")
        if schema != CONFIG_SCHEMA:
            raise InvalidInputError(f"unsupported config schema {schema!r}, expected {CONFIG_SCHEMA!r}")
        try:
            pdbs = data["pdbs"]
            return cls(
                pdbs=PDBSParams(
                    a=ModeSplitting(**pdbs["a"]),
                    b=ModeSplitting(**pdbs["b"]),
                    lossless=bool(pdbs.get("lossless", False)),
                ),
                att=AttenuatorParams(**data["attenuators"]),
                quality=float(data.get("quality", 1.0)),
                coherence_length=float(data.get("coherence_length_um", 150.0)),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed gate config: {exc}") from exc


def symmetric_config(ratio: float = 2.0, quality: float = 1.0, coherence_length: float = 150.0) -> GateConfig:
    """Lossless symmetric gate with (r_V/t_V)^2 = ratio in each mode.

    H is fully transmitted at the overlap splitter and the output attenuators
    balance it against V (t_H a_H = t_V a_V).
    """
    t_v = np.sqrt(1.0 / (1.0 + ratio))
    r_v = np.sqrt(ratio / (1.0 + ratio))
    mode = ModeSplitting(t_h=1.0, t_v=float(t_v), r_h=0.0, r_v=float(r_v))
    att = AttenuatorParams(a_h=float(t_v), a_v=1.0, b_h=float(t_v), b_v=1.0)
    return GateConfig(PDBSParams(mode, mode, lossless=True), att, quality, coherence_length)


def ideal_config(quality: float = 1.0) -> GateConfig:
    return symmetric_config(2.0, quality)


def load_config(source: str | Path) -> GateConfig:
    """Read a config from a JSON file path or a shipped preset name."""
    if str(source) in PRESETS:
        text = resources.files("cphase").joinpath("presets").joinpath(f"{source}.json").read_text()
    else:
        text = Path(source).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"config {source} is not valid JSON: {exc}") from exc
    return GateConfig.from_dict(data)


@dataclass(frozen=True)
class GateOperators:
    m_tt: np.ndarray
    m_rr: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.m_tt + self.m_rr


def build_operators(cfg: GateConfig) -> GateOperators:
    a, b = cfg.pdbs.a, cfg.pdbs.b
    att = cfg.att
    m_tt = np.diag([
        a.t_h * b.t_h * att.a_h * att.b_h,
        a.t_h * b.t_v * att.a_h * att.b_v,
        a.t_v * b.t_h * att.a_v * att.b_h,
        a.t_v * b.t_v * att.a_v * att.b_v,
    ])
    m_rr = np.zeros((4, 4))
    # reflection swaps the polarizations between the two spatial modes
    m_rr[0, 0] = -a.r_h * b.r_h * att.a_h * att.b_h
    m_rr[1, 2] = -a.r_v * b.r_h * att.a_h * att.b_v
    m_rr[2, 1] = -a.r_h * b.r_v * att.a_v * att.b_h
    m_rr[3, 3] = -a.r_v * b.r_v * att.a_v * att.b_v
    return GateOperators(m_tt, m_rr)


@dataclass(frozen=True)
class AlignmentReport:
    ratio_ok: bool
    reflection_h_ok: bool
    attenuation_ok: bool
    ratio_residual: float
    reflection_h_residual: float
    attenuation_residual: float
    ratio: float = field(default=float("nan"))

    @property
    def all_ok(self) -> bool:
        return self.ratio_ok and self.reflection_h_ok and self.attenuation_ok


def check_alignment(cfg: GateConfig, tol: float = 1e-9) -> AlignmentReport:
    """Check the three conditions under which the general gate equals an ideal C-Phase."""
    a, b, att = cfg.pdbs.a, cfg.pdbs.b, cfg.att
    denom = a.t_v * b.t_v
    if denom == 0:
        ratio = float("inf")
        ratio_res = float("inf")
    else:
        ratio = a.r_v * b.r_v / denom
        ratio_res = abs(ratio - 2.0)
    rh_res = max(a.r_h, b.r_h)
    att_res = max(abs(a.t_h * att.a_h - a.t_v * att.a_v), abs(b.t_h * att.b_h - b.t_v * att.b_v))
    return AlignmentReport(
        ratio_ok=ratio_res <= tol,
        reflection_h_ok=rh_res <= tol,
        attenuation_ok=att_res <= tol,
        ratio_residual=ratio_res,
        reflection_h_residual=rh_res,
        attenuation_residual=att_res,
        ratio=ratio,
    )


def ideal_cphase(psi: np.ndarray) -> np.ndarray:
    out = np.array(psi, dtype=complex)
    out[3] = -out[3]
    return out


def _as_density(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.shape == (4,):
        return density(state)
    if state.shape == (4, 4):
        return state
    raise InvalidInputError(f"expected a ket (4,) or density matrix (4, 4), got {state.shape}")


def channel(rho: np.ndarray, ops: GateOperators, quality: float) -> np.ndarray:
    """Unnormalized post-selected output for a given interference quality."""
    m = ops.total
    coherent = m @ rho @ m.T
    incoherent = ops.m_tt @ rho @ ops.m_tt.T + ops.m_rr @ rho @ ops.m_rr.T
    return quality * coherent + (1.0 - quality) * incoherent


def kraus_form(ops: GateOperators, quality: float) -> list[np.ndarray]:
    """Operator-sum form of the partial-interference channel."""
    return [
        np.sqrt(quality) * ops.total,
        np.sqrt(1.0 - quality) * ops.m_tt,
        np.sqrt(1.0 - quality) * ops.m_rr,
    ]


def apply_gate(rho_in: np.ndarray, cfg: GateConfig) -> tuple[np.ndarray, float]:
    """Return (unnormalized output, success probability)."""
    out = channel(_as_density(rho_in), build_operators(cfg), cfg.quality)
    return out, float(np.trace(out).real)


def apply_gate_normalized(rho_in: np.ndarray, cfg: GateConfig) -> np.ndarray:
    out, p = apply_gate(rho_in, cfg)
    if p <= 0.0:
        raise DegeneratePostSelectionError("gate output has zero coincidence probability")
    return out / p


def effective_quality(cfg: GateConfig, delay: float) -> float:
    return cfg.quality * float(np.exp(-(delay**2) / (2.0 * cfg.sigma**2)))


def hom_scan(cfg: GateConfig, state: np.ndarray, delays) -> np.ndarray:
    """Coincidence probability versus relative delay (µm).

    An infinite delay gives the fully distinguishable limit.
    """
    rho = _as_density(state)
    ops = build_operators(cfg)
    probs = []
    for d in np.asarray(delays, dtype=float):
        q = 0.0 if np.isinf(d) else effective_quality(cfg, d)
        probs.append(np.trace(channel(rho, ops, q)).real)
    return np.array(probs)


def visibility(c0: float, c_inf: float) -> float:
    if c_inf <= 0:
        raise InvalidInputError("c_inf must be positive")
    return (c_inf - c0) / c_inf


def overlap_quality(v_exp: float, v_th: float) -> float:
    if v_th <= 0:
        raise InvalidInputError("theoretical visibility must be positive")
    return v_exp / v_th


def hom_visibility(cfg: GateConfig, state: np.ndarray) -> float:
    c0, c_inf = hom_scan(cfg, state, [0.0, np.inf])
    return visibility(c0, c_inf)
