"""Builders for the experiment circuits.

Three families:

* a five-qubit feedback example (data qubits 0/2/4 on a line, syndrome
  qubits 1/3) with numeric-style in-circuit feedback and post-selection;
* repetition codes, d data qubits and d-1 syndrome qubits alternating on a
  chain, M rounds of injection + parity extraction, a final injection layer
  and transversal data readout;
* the distance-3 rotated surface code (9 data + 8 syndrome qubits) with
  arbitrary logical state preparation, one parity-check round between two
  injection layers, and Z- or X-basis transversal readout.

Detector expectations are taken from a noiseless reference shot; every
detector parity is deterministic on these circuits even when individual bits
are not. Syndrome qubits are passively re-prepared between rounds.
"""

from __future__ import annotations

import json
import math
import pathlib
from dataclasses import dataclass, field

from .circuit import (Circuit, DecodedLogical, Feedback, Gate1, Gate2, Inject,
                      Measure, Operation, PostSelect, Prep, RecordParity,
                      serialize_circuit)
from .engine import ShotRunner
from .noise import NoiseModel, PauliMixture, standard_injection
from .pauli import PauliTerm

__all__ = [
    "Detector", "LogicalDef", "LogicalStateSpec", "BuiltCode",
    "build_fig2_example", "build_repetition", "prep_logical_state_circuit",
    "build_surface_d3", "strip_classical_correction", "experiment_model",
    "surface_stabilizers", "surface_logicals",
    "SURFACE_Z_STABS", "SURFACE_X_STABS", "SURFACE_N_QUBITS",
]

_IDEAL = NoiseModel.build()


@dataclass(frozen=True)
class Detector:
    """Parity of a record set that is deterministic on the noiseless circuit."""

    det_id: str
    labels: tuple[str, ...]
    expected: int
    sector: str = ""


@dataclass(frozen=True)
class LogicalDef:
    """Records whose (decoder-corrected) parity reads out the logical operator."""

    labels: tuple[str, ...]
    basis: str
    sector: str = ""


@dataclass(frozen=True)
class LogicalStateSpec:
    """alpha|0_L> + beta|1_L>; amplitudes are real by construction."""

    alpha: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        if abs(self.alpha ** 2 + self.beta ** 2 - 1.0) > 1e-10:
            raise ValueError("state amplitudes must be normalized")

    @staticmethod
    def zero() -> "LogicalStateSpec":
        return LogicalStateSpec(1.0, 0.0)

    @staticmethod
    def plus() -> "LogicalStateSpec":
        return LogicalStateSpec(1 / math.sqrt(2), 1 / math.sqrt(2))

    @property
    def is_zero(self) -> bool:
        return self.beta == 0.0

    @property
    def theta(self) -> float:
        return 2.0 * math.atan2(self.beta, self.alpha)


@dataclass(frozen=True)
class BuiltCode:
    """A circuit plus the classical structure needed to run an experiment."""

    circuit: Circuit
    detectors: tuple[Detector, ...]
    logical: LogicalDef
    injection_layers: tuple[tuple[str, ...], ...]
    aux_sites: tuple[str, ...]
    d: int
    M: int
    meta: dict = field(default_factory=dict)

    @property
    def injection_sites(self) -> tuple[str, ...]:
        return tuple(s for layer in self.injection_layers for s in layer)

    def export(self, directory) -> dict[str, str]:
        """Write circuit text, detector file, logical line and a JSON manifest."""
        directory = pathlib.Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        files = {}
        (directory / "circuit.lzc").write_text(serialize_circuit(self.circuit))
        files["circuit"] = "circuit.lzc"
        det_lines = [f"DET {d.det_id} = {'^'.join(d.labels)} expect {d.expected}"
                     for d in self.detectors]
        logical = f"LOGICAL {self.logical.basis} = {'^'.join(self.logical.labels)}"
        (directory / "detectors.txt").write_text("\n".join(det_lines + [logical]) + "\n")
        files["detectors"] = "detectors.txt"
        manifest = {"d": self.d, "M": self.M,
                    "injection_layers": [list(l) for l in self.injection_layers],
                    "aux_sites": list(self.aux_sites),
                    "basis": self.logical.basis, "meta": self.meta}
        (directory / "code.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
        files["manifest"] = "code.json"
        return files


def _reference_bits(circuit: Circuit, seeds=(0, 1, 2)) -> list[dict[str, int]]:
    runner = ShotRunner(circuit, _IDEAL)
    outs = []
    for s in seeds:
        bits, _ = runner.run(s)
        outs.append(dict(zip(circuit.records, bits)))
    return outs


def _expected_parities(circuit: Circuit, groups: dict[str, tuple[str, ...]]) \
        -> dict[str, int]:
    """Noiseless parity of each record group; asserts shot-to-shot determinism."""
    refs = _reference_bits(circuit)
    out = {}
    for name, labels in groups.items():
        vals = {sum(ref[l] for l in labels) % 2 for ref in refs}
        if len(vals) != 1:
            raise AssertionError(f"detector {name} is not deterministic noiselessly")
        out[name] = vals.pop()
    return out


# ---------------------------------------------------------------------------
# Feedback example
# ---------------------------------------------------------------------------

def build_fig2_example(theta0: float, theta2: float, theta4: float,
                       p: float = 0.088) -> BuiltCode:
    """Five-qubit encode/inject/decode circuit with feedback correction.

    Data qubits 0/2/4 start in RY(theta_j)|0>; four CNOTs copy neighbor
    parities onto syndrome qubits 1/3, Pauli injection may strike each data
    qubit, and the same four CNOTs uncompute so the syndromes hold the error
    parities. The kept records are the two syndromes and the Z readout of
    qubit 0, post-selected on a quiet syndrome 3 with a numeric feedback X on
    qubit 0 when syndrome 1 fired.
    """
    ops: list[Operation] = [Prep("Z", q) for q in range(5)]
    ops += [Gate1("RY", 0, theta0), Gate1("RY", 2, theta2), Gate1("RY", 4, theta4)]
    enc = [Gate2("CNOT", 0, 1), Gate2("CNOT", 2, 1),
           Gate2("CNOT", 2, 3), Gate2("CNOT", 4, 3)]
    ops += enc
    ops += [Inject(0, "inj_d0"), Inject(2, "inj_d2"), Inject(4, "inj_d4")]
    ops += enc
    ops += [Measure("Z", 1, "m1"), Measure("Z", 3, "m3"),
            Feedback("X", 0, "m1", 1), PostSelect("m3", 0),
            Measure("Z", 0, "m0")]
    circuit = Circuit(5, tuple(ops), observable=RecordParity(("m0",)))
    logical = LogicalDef(("m0",), "Z")
    return BuiltCode(circuit, (), logical, (("inj_d0", "inj_d2", "inj_d4"),), (),
                     d=1, M=1,
                     meta={"family": "fig2", "p": p,
                           "thetas": (theta0, theta2, theta4)})


def strip_classical_correction(c: Circuit) -> Circuit:
    """Variant without FEEDBACK/POSTSELECT ops (the uncorrected data path)."""
    ops = tuple(op for op in c.ops if not isinstance(op, (Feedback, PostSelect)))
    return Circuit(c.n_qubits, ops, metadata=c.metadata, observable=c.observable)


# ---------------------------------------------------------------------------
# Repetition code
# ---------------------------------------------------------------------------

def build_repetition(d: int, M: int, p: float = 0.036) -> BuiltCode:
    """Distance-d repetition code with M parity-measurement rounds.

    Layout on a chain: data qubit i at index 2i, syndrome qubit i at 2i+1.
    Each round: data injection layer, CNOT parity extraction (left neighbors
    then right neighbors), syndrome readout, passive syndrome reset. The
    final injection layer precedes the transversal data readout. Detectors
    are first-round syndromes, consecutive-round syndrome XORs, and the final
    data parities against the last syndrome round; fault locations under the
    injection policy number d*(M+1).
    """
    if d not in (3, 5, 7):
        raise ValueError("supported distances: 3, 5, 7")
    if not 1 <= M <= 4:
        raise ValueError("supported rounds: 1..4")
    data = [2 * i for i in range(d)]
    synd = [2 * i + 1 for i in range(d - 1)]
    n = 2 * d - 1

    ops: list[Operation] = [Prep("Z", q) for q in range(n)]
    layers: list[tuple[str, ...]] = []
    groups: dict[str, tuple[str, ...]] = {}
    sectors: dict[str, str] = {}

    for m in range(1, M + 1):
        layer = tuple(f"r{m}_d{i}" for i in range(d))
        layers.append(layer)
        ops += [Inject(data[i], layer[i]) for i in range(d)]
        ops += [Gate2("CNOT", data[i], synd[i]) for i in range(d - 1)]
        ops += [Gate2("CNOT", data[i + 1], synd[i]) for i in range(d - 1)]
        ops += [Measure("Z", synd[i], f"s{m}_{i}") for i in range(d - 1)]
        if m < M:
            ops += [Prep("Z", synd[i]) for i in range(d - 1)]
        for i in range(d - 1):
            if m == 1:
                groups[f"t1_{i}"] = (f"s1_{i}",)
            else:
                groups[f"t{m}_{i}"] = (f"s{m}_{i}", f"s{m - 1}_{i}")

    final_layer = tuple(f"f_d{i}" for i in range(d))
    layers.append(final_layer)
    ops += [Inject(data[i], final_layer[i]) for i in range(d)]
    ops += [Measure("Z", data[i], f"d{i}") for i in range(d)]
    for i in range(d - 1):
        groups[f"tf_{i}"] = (f"d{i}", f"d{i + 1}", f"s{M}_{i}")

    circuit = Circuit(n, tuple(ops), observable=DecodedLogical("mwpm", ("d0",)))
    expected = _expected_parities(circuit, groups)
    detectors = tuple(Detector(name, labels, expected[name], sectors.get(name, ""))
                      for name, labels in groups.items())
    logical = LogicalDef(("d0",), "Z")
    return BuiltCode(circuit, detectors, logical, tuple(layers), (),
                     d=d, M=M, meta={"family": "repetition", "p": p})


# ---------------------------------------------------------------------------
# Distance-3 rotated surface code
# ---------------------------------------------------------------------------

# Data qubits D1..D9 are indices 0..8 on a 3x3 grid (row major); X_L runs down
# the left column (D1 D4 D7) and the Z_L representative is D3 D4 D5.
SURFACE_N_QUBITS = 17
_D = list(range(9))
SURFACE_Z_STABS = ((0, 1, 3, 4), (4, 5, 7, 8), (2, 5), (3, 6))
SURFACE_X_STABS = ((1, 2, 4, 5), (3, 4, 6, 7), (0, 1), (7, 8))
_Z_ANC = (9, 10, 11, 12)
_X_ANC = (13, 14, 15, 16)
_ZL_SUPPORT = (2, 3, 4)    # D3 D4 D5
_XL_SUPPORT = (0, 3, 6)    # D1 D4 D7
# Representative (pivot) data qubit per X stabilizer, used by the encoder.
_X_PIVOTS = {(0, 1): 1, (1, 2, 4, 5): 5, (3, 4, 6, 7): 7, (7, 8): 8}
# Fan-out order: a later pivot must not lie inside an earlier support, or the
# earlier stabilizer would keep spreading through the later CNOT controls.
_X_ENCODE_ORDER = ((0, 1), (1, 2, 4, 5), (3, 4, 6, 7), (7, 8))


def surface_stabilizers() -> list[PauliTerm]:
    terms = [PauliTerm.from_letters(SURFACE_N_QUBITS, {q: "Z" for q in s})
             for s in SURFACE_Z_STABS]
    terms += [PauliTerm.from_letters(SURFACE_N_QUBITS, {q: "X" for q in s})
              for s in SURFACE_X_STABS]
    return terms


def surface_logicals() -> tuple[PauliTerm, PauliTerm]:
    zl = PauliTerm.from_letters(SURFACE_N_QUBITS, {q: "Z" for q in _ZL_SUPPORT})
    xl = PauliTerm.from_letters(SURFACE_N_QUBITS, {q: "X" for q in _XL_SUPPORT})
    return zl, xl


def prep_logical_state_circuit(spec: LogicalStateSpec) -> tuple[Operation, ...]:
    """Encoder fragment preparing alpha|0_L> + beta|1_L> on the 17-qubit layout.

    An RY on D4 sets the amplitudes, six CNOTs routed through the two
    adjacent syndrome qubits copy them into a GHZ-like state on the vertical
    line D1-D4-D7, and Hadamards on the four representative qubits followed
    by CNOT fan-outs project onto the X stabilizers. For |0_L> the six
    routed CNOTs (and the RY) are omitted.
    """
    ops: list[Operation] = [Prep("Z", q) for q in range(SURFACE_N_QUBITS)]
    pivots = [_X_PIVOTS[s] for s in SURFACE_X_STABS]
    ops += [Gate1("H", p) for p in sorted(pivots)]
    if not spec.is_zero:
        ops.append(Gate1("RY", 3, spec.theta))
        # D4 -> D1 through the Z(D1 D2 D4 D5) ancilla, D4 -> D7 through the
        # X(D4 D5 D7 D8) ancilla; each copy is a three-CNOT relay.
        for anc, target in ((9, 0), (14, 6)):
            ops += [Gate2("CNOT", 3, anc), Gate2("CNOT", anc, target),
                    Gate2("CNOT", 3, anc)]
    for stab in _X_ENCODE_ORDER:
        pivot = _X_PIVOTS[stab]
        ops += [Gate2("CNOT", pivot, q) for q in stab if q != pivot]
    return tuple(ops)


def build_surface_d3(spec: LogicalStateSpec, basis: str = "Z",
                     p: float = 0.036) -> BuiltCode:
    """Distance-3 surface code experiment: prep, two injection layers around
    one parity-check round, transversal readout in the chosen basis.

    Z stabilizers are extracted with data->ancilla CNOTs, X stabilizers with
    an H-CNOT-H ancilla sandwich; plaquette CNOTs run in support order
    (Z plaquettes first). The `prep_q*` aux sites carry model-calibrated
    noise only; the `i1_*`/`i2_*` layers are the amplified injection sites.
    """
    if basis not in ("Z", "X"):
        raise ValueError("basis must be Z or X")
    ops = list(prep_logical_state_circuit(spec))
    aux = tuple(f"prep_q{q}" for q in range(SURFACE_N_QUBITS))
    ops += [Inject(q, aux[q]) for q in range(SURFACE_N_QUBITS)]

    layer1 = tuple(f"i1_d{k}" for k in range(9))
    ops += [Inject(k, layer1[k]) for k in range(9)]

    groups: dict[str, tuple[str, ...]] = {}
    sectors: dict[str, str] = {}
    for j, stab in enumerate(SURFACE_Z_STABS):
        anc = _Z_ANC[j]
        ops += [Gate2("CNOT", q, anc) for q in stab]
        ops.append(Measure("Z", anc, f"sz{j}"))
        groups[f"rz{j}"] = (f"sz{j}",)
        sectors[f"rz{j}"] = "Z"
    for j, stab in enumerate(SURFACE_X_STABS):
        anc = _X_ANC[j]
        ops.append(Gate1("H", anc))
        ops += [Gate2("CNOT", anc, q) for q in stab]
        ops.append(Gate1("H", anc))
        ops.append(Measure("Z", anc, f"sx{j}"))
        groups[f"rx{j}"] = (f"sx{j}",)
        sectors[f"rx{j}"] = "X"

    layer2 = tuple(f"i2_d{k}" for k in range(9))
    ops += [Inject(k, layer2[k]) for k in range(9)]

    if basis == "X":
        ops += [Gate1("H", k) for k in range(9)]
    ops += [Measure("Z", k, f"d{k}") for k in range(9)]

    stabs = SURFACE_Z_STABS if basis == "Z" else SURFACE_X_STABS
    syn = "sz" if basis == "Z" else "sx"
    for j, stab in enumerate(stabs):
        name = f"f{syn[1]}{j}"
        groups[name] = tuple(f"d{k}" for k in stab) + (f"{syn}{j}",)
        sectors[name] = basis

    support = _ZL_SUPPORT if basis == "Z" else _XL_SUPPORT
    logical = LogicalDef(tuple(f"d{k}" for k in support), basis, sector=basis)
    circuit = Circuit(SURFACE_N_QUBITS, tuple(ops),
                      observable=DecodedLogical("mwpm", logical.labels))
    expected = _expected_parities(circuit, groups)
    detectors = tuple(Detector(name, labels, expected[name], sectors[name])
                      for name, labels in groups.items())
    return BuiltCode(circuit, detectors, logical, (layer1, layer2), aux,
                     d=3, M=1,
                     meta={"family": "surface", "basis": basis, "p": p,
                           "alpha": spec.alpha, "beta": spec.beta})


# ---------------------------------------------------------------------------
# Model binding
# ---------------------------------------------------------------------------

def experiment_model(code: BuiltCode, *, injection_p: float | None = None,
                     preset: NoiseModel | None = None,
                     aux_mixture: PauliMixture | None = None,
                     r: float = 1.0) -> NoiseModel:
    """Noise model for a code: standard injection at the amplified sites,
    an optional mixture at the aux sites, and optional per-opkind noise."""
    injection = {}
    pin = code.meta.get("p") if injection_p is None else injection_p
    if pin:
        for site in code.injection_sites:
            injection[site] = standard_injection(pin)
    if aux_mixture is not None and not aux_mixture.is_trivial:
        for site in code.aux_sites:
            injection[site] = aux_mixture
    per = preset.opkind_map if preset is not None else {}
    return NoiseModel.build(per_opkind=per, injection=injection, r=r)
