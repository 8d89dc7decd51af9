"""Photon-counting forward model and detector-efficiency correction.

Each arm carries a quarter-wave plate, a half-wave plate and a polarizing
beam splitter with one detector per output port. An analyzer setting
therefore projects each arm onto an orthogonal pair of polarizations, and
one setting yields four coincidence channels (hh, hv, vh, vv) named by the
PBS port hit in arm a and arm b.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .exceptions import InvalidInputError

RNG_NAME = "numpy.PCG64"
CHANNELS = ("hh", "hv", "vh", "vv")

# waveplate angles (HWP, QWP) in degrees; the QWP at 0° is diag(1, i), so X needs it at 45°
BASIS_ANGLES = {"Z": (0.0, 0.0), "X": (22.5, 45.0), "Y": (0.0, 45.0)}


def hwp(theta_deg: float) -> np.ndarray:
    t = np.deg2rad(2 * theta_deg)
    return np.array([[np.cos(t), np.sin(t)], [np.sin(t), -np.cos(t)]], dtype=complex)


def qwp(theta_deg: float) -> np.ndarray:
    t = np.deg2rad(theta_deg)
    c, s = np.cos(t), np.sin(t)
    return np.array(
        [[c**2 + 1j * s**2, (1 - 1j) * s * c], [(1 - 1j) * s * c, s**2 + 1j * c**2]], dtype=complex
    )


def analyzer_kets(hwp_deg: float, qwp_deg: float) -> tuple[np.ndarray, np.ndarray]:
    """Kets detected at the transmitted (H) and reflected (V) PBS ports.

    Light passes the QWP first, then the HWP.
    """
    u = hwp(hwp_deg) @ qwp(qwp_deg)
    udag = u.conj().T
    return udag[:, 0], udag[:, 1]


@dataclass(frozen=True)
class AnalyzerSetting:
    hwp_a: float
    qwp_a: float
    hwp_b: float
    qwp_b: float

    @classmethod
    def from_bases(cls, basis_a: str, basis_b: str) -> "AnalyzerSetting":
        try:
            ha, qa = BASIS_ANGLES[basis_a]
            hb, qb = BASIS_ANGLES[basis_b]
        except KeyError as exc:
            raise InvalidInputError(f"unknown analyzer basis {exc.args[0]!r}") from None
        return cls(ha, qa, hb, qb)

    @staticmethod
    def _arm_label(h: float, q: float) -> str:
        for name, angles in BASIS_ANGLES.items():
            if angles == (h, q):
                return name
        return f"hwp{h:g}/qwp{q:g}"

    @property
    def label_a(self) -> str:
        return self._arm_label(self.hwp_a, self.qwp_a)

    @property
    def label_b(self) -> str:
        return self._arm_label(self.hwp_b, self.qwp_b)

    def projectors(self) -> np.ndarray:
        """Two-qubit projectors for the four channels (hh, hv, vh, vv), shape (4, 4, 4)."""
        ka = analyzer_kets(self.hwp_a, self.qwp_a)
        kb = analyzer_kets(self.hwp_b, self.qwp_b)
        out = []
        for xa in ka:
            for xb in kb:
                v = np.kron(xa, xb)
                out.append(np.outer(v, v.conj()))
        return np.array(out)


@dataclass(frozen=True)
class DetectorEfficiencies:
    eta_ah: float = 1.0
    eta_av: float = 1.0
    eta_bh: float = 1.0
    eta_bv: float = 1.0

    def __post_init__(self):
        for name in ("eta_ah", "eta_av", "eta_bh", "eta_bv"):
            value = getattr(self, name)
            if not (0.0 < value <= 1.0):
                raise InvalidInputError(f"{name} = {value} outside (0, 1]")

    def channel_factors(self) -> np.ndarray:
        """η_a η_b for the channels (hh, hv, vh, vv)."""
        return np.array([
            self.eta_ah * self.eta_bh,
            self.eta_ah * self.eta_bv,
            self.eta_av * self.eta_bh,
            self.eta_av * self.eta_bv,
        ])


@dataclass(frozen=True)
class CountRecord:
    setting: AnalyzerSetting
    counts: tuple[int, int, int, int]
    pairs: int
    efficiencies: DetectorEfficiencies = field(default_factory=DetectorEfficiencies)
    seed: int | None = None
    rng: str = RNG_NAME

    def __post_init__(self):
        if any(int(c) != c or c < 0 for c in self.counts):
            raise InvalidInputError("counts must be non-negative integers")

    def to_dict(self) -> dict:
        s, e = self.setting, self.efficiencies
        return {
            "setting": {"a": s.label_a, "b": s.label_b, "hwp_a": s.hwp_a, "qwp_a": s.qwp_a,
                        "hwp_b": s.hwp_b, "qwp_b": s.qwp_b},
            "counts": dict(zip(CHANNELS, (int(c) for c in self.counts))),
            "pairs": self.pairs,
            "efficiencies": {"eta_ah": e.eta_ah, "eta_av": e.eta_av, "eta_bh": e.eta_bh, "eta_bv": e.eta_bv},
            "seed": self.seed,
            "rng": self.rng,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CountRecord":
        s = data["setting"]
        return cls(
            setting=AnalyzerSetting(s["hwp_a"], s["qwp_a"], s["hwp_b"], s["qwp_b"]),
            counts=tuple(int(data["counts"][c]) for c in CHANNELS),
            pairs=int(data["pairs"]),
            efficiencies=DetectorEfficiencies(**data["efficiencies"]),
            seed=data.get("seed"),
            rng=data.get("rng", RNG_NAME),
        )


def expected_counts(rho: np.ndarray, setting: AnalyzerSetting, eff: DetectorEfficiencies, pairs: int) -> np.ndarray:
    """λ = N Tr(ρ P_a⊗P_b) η_a η_b for the four channels."""
    probs = np.einsum("kab,ba->k", setting.projectors(), np.asarray(rho, dtype=complex)).real
    return pairs * np.clip(probs, 0.0, None) * eff.channel_factors()


def simulate_counts(rho: np.ndarray, setting: AnalyzerSetting, eff: DetectorEfficiencies,
                    pairs: int, seed: int) -> CountRecord:
    """Draw Poisson coincidence counts for one analyzer setting."""
    if pairs <= 0:
        raise InvalidInputError("number of pairs must be positive")
    lam = expected_counts(rho, setting, eff, pairs)
    rng = np.random.Generator(np.random.PCG64(seed))
    counts = rng.poisson(lam)
    return CountRecord(setting, tuple(int(c) for c in counts), int(pairs), eff, int(seed))


def correct_efficiencies(rec: CountRecord) -> tuple[np.ndarray, np.ndarray]:
    """Efficiency-corrected rates and their Poisson standard errors.

    Zero counts get the error of a single count.
    """
    factors = rec.efficiencies.channel_factors()
    if np.any(factors <= 0):
        raise InvalidInputError("detector efficiencies must be positive")
    raw = np.asarray(rec.counts, dtype=float)
    return raw / factors, np.sqrt(np.maximum(raw, 1.0)) / factors


def derive_seed(seed: int, *path: int) -> int:
    """Deterministic per-call seed from a base seed and an index path."""
    return int(np.random.SeedSequence([seed, *path]).generate_state(1)[0])


def write_jsonl(records: Iterable[CountRecord], path: str | Path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")


def read_jsonl(path: str | Path) -> list[CountRecord]:
    with open(path) as fh:
        return [CountRecord.from_dict(json.loads(line)) for line in fh if line.strip()]


CSV_COLUMNS = ("setting_a", "setting_b", "n_hh", "n_hv", "n_vh", "n_vv",
               "eta_ah", "eta_av", "eta_bh", "eta_bv", "seed")


def write_csv(records: Iterable[CountRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for rec in records:
            e = rec.efficiencies
            w.writerow([rec.setting.label_a, rec.setting.label_b, *rec.counts,
                        e.eta_ah, e.eta_av, e.eta_bh, e.eta_bv, rec.seed])
