"""Stochastic Pauli noise: mixtures, scaling p -> r*p, presets and sampling.

A PauliMixture lists error terms over the support of the operation it will be
bound to (qubit 0 = first support qubit). Binding a mixture to a concrete
fault location embeds each term into the circuit register, so a sampled
FaultConfig always holds global PauliTerms. Gate and preparation noise act
after the ideal operation; measurement noise acts before it.

The scale factor r is stored on the model and applied lazily as r*p, which
keeps scale(scale(m, a), b) == scale(m, a*b) exact on probabilities.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .circuit import Circuit, FaultLocation, fault_locations
from .pauli import PauliTerm

__all__ = [
    "NoiseError", "ScalingOverflowError", "PauliMixture", "NoiseModel",
    "FaultConfig", "scale_model", "standard_injection", "depolarizing1",
    "depolarizing2", "measurement_flip", "device_preset", "sample_fault_config",
    "derive_seed", "PRESETS",
]


class NoiseError(ValueError):
    pass


class ScalingOverflowError(NoiseError):
    """r * total_p would exceed 1 somewhere; amplification is unphysical."""


_PAULI2_LABELS = [a + b for a in "IXYZ" for b in "IXYZ" if a + b != "II"]


@dataclass(frozen=True)
class PauliMixture:
    """Pauli error channel: with probability p_i apply terms[i], else identity.

    Terms live on `support` local qubits. The identity is never listed.
    """

    support: int
    terms: tuple[tuple[PauliTerm, float], ...] = ()

    def __post_init__(self):
        for term, p in self.terms:
            if term.n_qubits != self.support:
                raise NoiseError("mixture term size differs from support")
            if term.x_mask == 0 and term.z_mask == 0:
                raise NoiseError("identity listed as an error term")
            if p < 0:
                raise NoiseError("negative probability")
        if self.total_p > 1 + 1e-12:
            raise NoiseError(f"total probability {self.total_p} exceeds 1")

    @property
    def total_p(self) -> float:
        return sum(p for _, p in self.terms)

    @property
    def is_trivial(self) -> bool:
        return not self.terms

    def scaled(self, r: float) -> "PauliMixture":
        return PauliMixture(self.support,
                            tuple((t, r * p) for t, p in self.terms))

    def to_json(self) -> dict:
        return {"support": self.support,
                "terms": [[str(t), p] for t, p in self.terms]}

    @staticmethod
    def from_json(obj: dict) -> "PauliMixture":
        support = int(obj["support"])
        terms = tuple((PauliTerm.parse(k, support), float(v))
                      for k, v in obj["terms"])
        return PauliMixture(support, terms)


def standard_injection(p: float) -> PauliMixture:
    """Uniform single-qubit injection {X: p/3, Y: p/3, Z: p/3}."""
    if not 0 <= p <= 1:
        raise NoiseError(f"probability {p} outside [0, 1]")
    if p == 0:
        return PauliMixture(1)
    return PauliMixture(1, tuple(
        (PauliTerm.single(1, l, 0), p / 3) for l in "XYZ"))


def depolarizing1(p: float) -> PauliMixture:
    return standard_injection(p)


def depolarizing2(p: float) -> PauliMixture:
    """Uniform 15-term two-qubit depolarizing mixture with total p."""
    if not 0 <= p <= 1:
        raise NoiseError(f"probability {p} outside [0, 1]")
    if p == 0:
        return PauliMixture(2)
    terms = []
    for label in _PAULI2_LABELS:
        assignment = {q: l for q, l in enumerate(label) if l != "I"}
        terms.append((PauliTerm.from_letters(2, assignment), p / 15))
    return PauliMixture(2, tuple(terms))


def measurement_flip(p: float) -> PauliMixture:
    """Readout error: X applied before a Z-basis measurement."""
    if not 0 <= p <= 1:
        raise NoiseError(f"probability {p} outside [0, 1]")
    if p == 0:
        return PauliMixture(1)
    return PauliMixture(1, ((PauliTerm.single(1, "X", 0), p),))


@dataclass(frozen=True)
class NoiseModel:
    """Per-operation-kind channels plus site-bound injection channels."""

    per_opkind: tuple[tuple[str, PauliMixture], ...] = ()
    injection: tuple[tuple[str, PauliMixture], ...] = ()
    r: float = 1.0

    def __post_init__(self):
        if self.r <= 0:
            raise NoiseError("scale factor must be positive")
        for _, mix in list(self.per_opkind) + list(self.injection):
            if self.r * mix.total_p > 1 + 1e-12:
                raise ScalingOverflowError(
                    f"r={self.r} puts total probability at {self.r * mix.total_p}")

    @staticmethod
    def build(per_opkind: dict[str, PauliMixture] | None = None,
              injection: dict[str, PauliMixture] | None = None,
              r: float = 1.0) -> "NoiseModel":
        return NoiseModel(tuple(sorted((per_opkind or {}).items())),
                          tuple(sorted((injection or {}).items())),
                          r)

    @property
    def opkind_map(self) -> dict[str, PauliMixture]:
        return dict(self.per_opkind)

    @property
    def injection_map(self) -> dict[str, PauliMixture]:
        return dict(self.injection)

    @property
    def is_ideal(self) -> bool:
        return all(m.is_trivial for _, m in self.per_opkind) and \
            all(m.is_trivial for _, m in self.injection)

    def channel_for(self, loc: FaultLocation) -> PauliMixture | None:
        """Mixture bound to a fault location, or None."""
        if loc.kind == "inject":
            mix = self.injection_map.get(loc.site)
        else:
            mix = self.opkind_map.get(loc.kind)
        if mix is None or mix.is_trivial:
            return None
        if mix.support != len(loc.qubits):
            raise NoiseError(
                f"channel support {mix.support} does not fit location {loc}")
        return mix

    def effective_terms(self, loc: FaultLocation, n_qubits: int) \
            -> list[tuple[PauliTerm, float]]:
        """Embedded error terms with scaled probabilities at a location."""
        mix = self.channel_for(loc)
        if mix is None:
            return []
        qmap = {i: q for i, q in enumerate(loc.qubits)}
        out = []
        for term, p in mix.terms:
            pe = self.r * p
            if pe > 0:
                out.append((term.embed(n_qubits, qmap), pe))
        return out

    def to_json(self) -> str:
        return json.dumps({
            "opkinds": {k: m.to_json() for k, m in self.per_opkind},
            "injection": {s: m.to_json() for s, m in self.injection},
            "r": self.r,
        }, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "NoiseModel":
        obj = json.loads(text)
        return NoiseModel.build(
            {k: PauliMixture.from_json(v) for k, v in obj["opkinds"].items()},
            {s: PauliMixture.from_json(v) for s, v in obj["injection"].items()},
            float(obj["r"]))


def scale_model(m: NoiseModel, r: float) -> NoiseModel:
    """Boost every error probability by r (p -> r*p), keeping Pauli weights.

    Raises ScalingOverflowError if any channel would exceed total probability 1.
    """
    if r <= 0:
        raise NoiseError("scale factor must be positive")
    return NoiseModel(m.per_opkind, m.injection, m.r * r)


@dataclass(frozen=True)
class FaultConfig:
    """Assignment of Pauli errors to fault locations (absent = no error)."""

    assignment: tuple[tuple[FaultLocation, PauliTerm], ...] = ()

    @staticmethod
    def build(mapping: dict[FaultLocation, PauliTerm]) -> "FaultConfig":
        return FaultConfig(tuple(sorted(mapping.items(), key=lambda kv: kv[0].index)))

    @property
    def as_dict(self) -> dict[FaultLocation, PauliTerm]:
        return dict(self.assignment)

    @property
    def n_faults(self) -> int:
        return len(self.assignment)

    @property
    def is_empty(self) -> bool:
        return not self.assignment


# Table S1 medians: (1q Pauli error, 2q Pauli error, readout method 1, method 2)
PRESETS = {
    "processor1": (0.00085, 0.0056, 0.0047, 0.0087),
    "processor2": (0.00055, 0.0037, 0.0087, None),
    "ideal": (0.0, 0.0, 0.0, None),
}


def device_preset(name: str, readout_method: int = 1) -> NoiseModel:
    """Median device noise: depolarizing gates plus a readout bit-flip.

    readout_method selects between the two readout calibrations where the
    device reports both; preparation is left noiseless.
    """
    try:
        p1, p2, ro1, ro2 = PRESETS[name]
    except KeyError:
        raise NoiseError(f"unknown preset {name!r}") from None
    if readout_method == 1:
        ro = ro1
    elif readout_method == 2:
        if ro2 is None:
            raise NoiseError(f"{name} has no method-2 readout calibration")
        ro = ro2
    else:
        raise NoiseError("readout_method must be 1 or 2")
    per = {}
    if p1:
        per["gate1"] = depolarizing1(p1)
    if p2:
        per["gate2"] = depolarizing2(p2)
    if ro:
        per["measure"] = measurement_flip(ro)
    return NoiseModel.build(per)


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from heterogeneous parts (never Python hash())."""
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(repr(p).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


def sample_fault_config(c: Circuit, m: NoiseModel,
                        policy: str = "injection_only",
                        rng_seed: int = 0,
                        *,
                        locations: list[FaultLocation] | None = None,
                        rng: np.random.Generator | None = None) -> FaultConfig:
    """Draw one independent error per location with its scaled probability.

    Deterministic for a fixed seed. `locations` restricts the draw (used when
    part of the configuration is frozen by a circuit instance).
    """
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(rng_seed))
    locs = fault_locations(c, policy) if locations is None else locations
    picked: dict[FaultLocation, PauliTerm] = {}
    for loc in locs:
        mix = m.channel_for(loc)
        if mix is None:
            continue
        p_eff = m.r * mix.total_p
        if p_eff > 1 + 1e-12:
            raise ScalingOverflowError(f"scaled probability {p_eff} exceeds 1 at {loc}")
        u = rng.random()
        if u >= p_eff:
            continue
        # Conditional draw over the mixture terms.
        target = rng.random() * mix.total_p
        acc = 0.0
        chosen = mix.terms[-1][0]
        for term, p in mix.terms:
            acc += p
            if target < acc:
                chosen = term
                break
        qmap = {i: q for i, q in enumerate(loc.qubits)}
        picked[loc] = chosen.embed(c.n_qubits, qmap)
    return FaultConfig.build(picked)
