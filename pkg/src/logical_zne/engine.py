"""State-vector execution of circuits under stochastic Pauli noise.

Three evaluation routes share one operational semantics:

* run_shot: Monte Carlo trajectory with sampled faults, Born-sampled
  measurements, feedback and post-selection.
* exact_expectation: depth-first enumeration over measurement branches and
  fault assignments, renormalized over accepted branches.
* expectation_polynomial: the same enumeration with per-path weights kept as
  polynomials in the noise scale r, which yields the exact expansion
  coefficients (the deviation caused by k simultaneous faults carries r^k).

Branch weights of sibling fault branches that lead to the same quantum state
(up to global phase) are merged, which keeps the enumeration tree small on
stabilizer-like circuits without giving up exactness.

Post-selection makes the normalized expectation a ratio of two polynomials;
the polynomial result therefore carries numerator and denominator
coefficients, with the denominator omitted when the circuit never
post-selects.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .circuit import (Circuit, DecodedLogical, Feedback, Gate1, Gate2, Inject,
                      Measure, PostSelect, Prep, RecordParity, fault_locations)
from .noise import FaultConfig, NoiseModel, ScalingOverflowError, derive_seed
from .pauli import PauliTerm

__all__ = [
    "CapacityError", "EnumerationCapacityError", "PostSelectionStarvationError",
    "ShotOutcome", "RawEstimate", "ExpectationPolynomial",
    "run_shot", "estimate_raw", "exact_expectation", "exact_expectation_multi",
    "expectation_polynomial", "write_shots_csv", "compile_observable",
]

MAX_QUBITS = 24
DEFAULT_BUDGET = 2 ** 24
_BRANCH_TOL = 1e-14
_MERGE_TOL = 1e-10

_SQ = 1.0 / math.sqrt(2.0)


class CapacityError(RuntimeError):
    """Circuit exceeds the state-vector qubit bound."""


class EnumerationCapacityError(CapacityError):
    """Exact enumeration would exceed the branch budget."""


class PostSelectionStarvationError(RuntimeError):
    """No shot (or no branch weight) survived post-selection."""


@dataclass(frozen=True)
class ShotOutcome:
    bits: dict
    accepted: bool


@dataclass(frozen=True)
class RawEstimate:
    mean: float
    stderr: float
    acceptance_rate: float


# ---------------------------------------------------------------------------
# State-vector primitives. Qubit q maps to axis q of state.reshape((2,)*n),
# i.e. bit (n-1-q) of the flat index.
# ---------------------------------------------------------------------------

def _halves(vec: np.ndarray, n: int, q: int):
    view = vec.reshape(1 << q, 2, 1 << (n - q - 1))
    return view[:, 0, :], view[:, 1, :]


def _apply_x(vec, n, q):
    v0, v1 = _halves(vec, n, q)
    tmp = v0.copy()
    v0[...] = v1
    v1[...] = tmp


def _apply_y(vec, n, q):
    v0, v1 = _halves(vec, n, q)
    tmp = v0.copy()
    v0[...] = -1j * v1
    v1[...] = 1j * tmp


def _apply_z(vec, n, q):
    _, v1 = _halves(vec, n, q)
    v1 *= -1.0


def _apply_s(vec, n, q, dag=False):
    _, v1 = _halves(vec, n, q)
    v1 *= -1j if dag else 1j


def _apply_h(vec, n, q):
    v0, v1 = _halves(vec, n, q)
    tmp = (v0 + v1) * _SQ
    v1[...] = (v0 - v1) * _SQ
    v0[...] = tmp


def _apply_mat(vec, n, q, mat):
    v0, v1 = _halves(vec, n, q)
    tmp = mat[0, 0] * v0 + mat[0, 1] * v1
    v1[...] = mat[1, 0] * v0 + mat[1, 1] * v1
    v0[...] = tmp


def _pair_view(vec, n, a, b):
    """Reshape so qubits a<b become separate axes; returns the 5-d view."""
    return vec.reshape(1 << a, 2, 1 << (b - a - 1), 2, 1 << (n - b - 1))


def _apply_cnot(vec, n, c, t):
    if c < t:
        view = _pair_view(vec, n, c, t)
        s0, s1 = view[:, 1, :, 0, :], view[:, 1, :, 1, :]
    else:
        view = _pair_view(vec, n, t, c)
        s0, s1 = view[:, 0, :, 1, :], view[:, 1, :, 1, :]
    tmp = s0.copy()
    s0[...] = s1
    s1[...] = tmp


def _apply_cz(vec, n, a, b):
    lo, hi = (a, b) if a < b else (b, a)
    view = _pair_view(vec, n, lo, hi)
    view[:, 1, :, 1, :] *= -1.0


def _prob_one(vec, n, q) -> float:
    _, v1 = _halves(vec, n, q)
    return float(np.real(np.vdot(v1, v1)))


def _project(vec, n, q, bit, prob) -> None:
    v0, v1 = _halves(vec, n, q)
    (v0 if bit else v1)[...] = 0.0
    vec *= 1.0 / math.sqrt(prob)


_RY = lambda th: np.array([[math.cos(th / 2), -math.sin(th / 2)],
                           [math.sin(th / 2), math.cos(th / 2)]], dtype=complex)
_RZ = lambda th: np.array([[np.exp(-0.5j * th), 0], [0, np.exp(0.5j * th)]],
                          dtype=complex)


def _apply_gate1(vec, n, op: Gate1):
    k = op.kind
    if k == "I":
        return
    if k == "X":
        _apply_x(vec, n, op.qubit)
    elif k == "Y":
        _apply_y(vec, n, op.qubit)
    elif k == "Z":
        _apply_z(vec, n, op.qubit)
    elif k == "H":
        _apply_h(vec, n, op.qubit)
    elif k == "S":
        _apply_s(vec, n, op.qubit)
    elif k == "RY":
        _apply_mat(vec, n, op.qubit, _RY(op.theta))
    elif k == "RZ":
        _apply_mat(vec, n, op.qubit, _RZ(op.theta))
    else:  # pragma: no cover
        raise ValueError(f"unknown gate {k!r}")


def _basis_in(vec, n, q, basis):
    """Rotate so that a Z measurement reads the requested basis."""
    if basis == "X":
        _apply_h(vec, n, q)
    elif basis == "Y":
        _apply_s(vec, n, q, dag=True)
        _apply_h(vec, n, q)


def _basis_out(vec, n, q, basis):
    if basis == "X":
        _apply_h(vec, n, q)
    elif basis == "Y":
        _apply_h(vec, n, q)
        _apply_s(vec, n, q)


def _apply_pauli(vec, n, term: PauliTerm):
    """Apply a Pauli operator; the global phase i^phase_exp is irrelevant."""
    x, z = term.x_mask, term.z_mask
    q = 0
    both = x | z
    while both >> q:
        if (both >> q) & 1:
            xq, zq = (x >> q) & 1, (z >> q) & 1
            if xq and zq:
                _apply_y(vec, n, q)
            elif xq:
                _apply_x(vec, n, q)
            else:
                _apply_z(vec, n, q)
        q += 1


# ---------------------------------------------------------------------------
# Trajectory state backends. The dense backend wraps the primitives above;
# the sparse backend keeps (basis index, amplitude) arrays, which is orders
# of magnitude faster on stabilizer-like circuits whose states stay sparse,
# and densifies itself if the support ever grows past a quarter of the space.
# Amplitudes are double precision in both.
# ---------------------------------------------------------------------------

class _DenseState:
    __slots__ = ("n", "vec")

    def __init__(self, n, vec=None):
        self.n = n
        if vec is None:
            vec = np.zeros(1 << n, dtype=complex)
            vec[0] = 1.0
        self.vec = vec

    def gate1(self, op):
        _apply_gate1(self.vec, self.n, op)

    def gate2(self, op):
        if op.kind == "CNOT":
            _apply_cnot(self.vec, self.n, op.control, op.target)
        else:
            _apply_cz(self.vec, self.n, op.control, op.target)

    def pauli(self, term):
        _apply_pauli(self.vec, self.n, term)

    def _collapse(self, q, basis, rng):
        _basis_in(self.vec, self.n, q, basis)
        p1 = min(max(_prob_one(self.vec, self.n, q), 0.0), 1.0)
        bit = 1 if rng.random() < p1 else 0
        prob = p1 if bit else 1.0 - p1
        if prob < _BRANCH_TOL:
            bit ^= 1
            prob = 1.0 - prob
        v0, v1 = _halves(self.vec, self.n, q)
        (v0 if bit else v1)[...] = 0.0
        if prob < 1.0 - 1e-15:
            self.vec *= 1.0 / math.sqrt(prob)
        return bit

    def measure(self, q, basis, rng):
        bit = self._collapse(q, basis, rng)
        _basis_out(self.vec, self.n, q, basis)
        return bit

    def prep(self, q, basis, rng):
        bit = self._collapse(q, basis, rng)
        if bit:
            _apply_x(self.vec, self.n, q)
        _basis_out(self.vec, self.n, q, basis)
        return self


class _SparseState:
    """State vector over its nonzero computational-basis support."""

    __slots__ = ("n", "keys", "amps")
    _PRUNE = 1e-16

    def __init__(self, n, keys=None, amps=None):
        self.n = n
        self.keys = np.zeros(1, dtype=np.int64) if keys is None else keys
        self.amps = np.ones(1, dtype=complex) if amps is None else amps

    def _mask(self, q):
        return np.int64(1) << np.int64(self.n - 1 - q)

    def _merge(self, keys, amps):
        uniq, inv = np.unique(keys, return_inverse=True)
        merged = np.zeros(len(uniq), dtype=complex)
        np.add.at(merged, inv, amps)
        keep = np.abs(merged) > self._PRUNE
        self.keys, self.amps = uniq[keep], merged[keep]

    def _split(self, q, m00, m01, m10, m11):
        """Apply a general 1-qubit matrix by splitting the support."""
        mask = self._mask(q)
        on = (self.keys & mask) != 0
        src0, src1 = self.keys[~on], self.keys[on]
        a0, a1 = self.amps[~on], self.amps[on]
        keys = np.concatenate([src0, src0 | mask, src1 & ~mask, src1])
        amps = np.concatenate([m00 * a0, m10 * a0, m01 * a1, m11 * a1])
        self._merge(keys, amps)

    def gate1(self, op):
        k, q = op.kind, op.qubit
        if k == "I":
            return
        mask = self._mask(q)
        if k == "X":
            self.keys = self.keys ^ mask
        elif k == "Z":
            self.amps = np.where((self.keys & mask) != 0, -self.amps, self.amps)
        elif k == "Y":
            on = (self.keys & mask) != 0
            self.amps = np.where(on, -1j * self.amps, 1j * self.amps)
            self.keys = self.keys ^ mask
        elif k == "S":
            self.amps = np.where((self.keys & mask) != 0, 1j * self.amps, self.amps)
        elif k == "RZ":
            ph = np.where((self.keys & mask) != 0,
                          np.exp(0.5j * op.theta), np.exp(-0.5j * op.theta))
            self.amps = self.amps * ph
        elif k == "H":
            self._split(q, _SQ, _SQ, _SQ, -_SQ)
        elif k == "RY":
            c, s = math.cos(op.theta / 2), math.sin(op.theta / 2)
            self._split(q, c, -s, s, c)
        else:  # pragma: no cover
            raise ValueError(f"unknown gate {k!r}")

    def _sdg(self, q):
        mask = self._mask(q)
        self.amps = np.where((self.keys & mask) != 0, -1j * self.amps, self.amps)

    def gate2(self, op):
        cm, tm = self._mask(op.control), self._mask(op.target)
        if op.kind == "CNOT":
            on = (self.keys & cm) != 0
            self.keys = np.where(on, self.keys ^ tm, self.keys)
        else:
            both = ((self.keys & cm) != 0) & ((self.keys & tm) != 0)
            self.amps = np.where(both, -self.amps, self.amps)

    def pauli(self, term):
        flip = np.int64(0)
        for q in term.support():
            letter = term.letter(q)
            mask = self._mask(q)
            if letter in ("X", "Y"):
                flip |= mask
            if letter == "Z":
                self.amps = np.where((self.keys & mask) != 0, -self.amps, self.amps)
            elif letter == "Y":
                on = (self.keys & mask) != 0
                self.amps = np.where(on, -1j * self.amps, 1j * self.amps)
        if flip:
            self.keys = self.keys ^ flip

    def _basis_in(self, q, basis):
        if basis == "X":
            self.gate1(Gate1("H", q))
        elif basis == "Y":
            self._sdg(q)
            self.gate1(Gate1("H", q))

    def _basis_out(self, q, basis):
        if basis == "X":
            self.gate1(Gate1("H", q))
        elif basis == "Y":
            self.gate1(Gate1("H", q))
            self.gate1(Gate1("S", q))

    def _collapse(self, q, basis, rng):
        self._basis_in(q, basis)
        on = (self.keys & self._mask(q)) != 0
        p1 = float(np.sum(np.abs(self.amps[on]) ** 2))
        p1 = min(max(p1, 0.0), 1.0)
        bit = 1 if rng.random() < p1 else 0
        prob = p1 if bit else 1.0 - p1
        if prob < _BRANCH_TOL:
            bit ^= 1
            prob = 1.0 - prob
        keep = on if bit else ~on
        self.keys = self.keys[keep]
        self.amps = self.amps[keep] * (1.0 / math.sqrt(prob))
        return bit

    def measure(self, q, basis, rng):
        bit = self._collapse(q, basis, rng)
        self._basis_out(q, basis)
        return bit

    def prep(self, q, basis, rng):
        bit = self._collapse(q, basis, rng)
        if bit:
            self.keys = self.keys ^ self._mask(q)
        self._basis_out(q, basis)
        return self._maybe_densify()

    def _maybe_densify(self):
        if len(self.keys) > 4096 and len(self.keys) * 4 > (1 << self.n):
            vec = np.zeros(1 << self.n, dtype=complex)
            vec[self.keys] = self.amps
            return _DenseState(self.n, vec)
        return self


# ---------------------------------------------------------------------------
# Fault plumbing shared by trajectory and enumeration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _LocChannel:
    terms: tuple        # embedded PauliTerms
    probs: tuple        # scaled probabilities (model.r folded in)
    total: float


def _channel_table(circuit: Circuit, model: NoiseModel,
                   frozen: frozenset = frozenset()) -> dict:
    """op index -> _LocChannel for sampled noise (frozen locations excluded)."""
    table = {}
    for loc in fault_locations(circuit, "all_ops"):
        if loc in frozen or (loc.site is not None and loc.site in frozen):
            continue
        terms = model.effective_terms(loc, circuit.n_qubits)
        if terms:
            total = model.r * model.channel_for(loc).total_p
            if total > 1 + 1e-12:
                raise ScalingOverflowError(f"scaled probability {total} exceeds 1 at {loc}")
            table[loc.index] = _LocChannel(tuple(t for t, _ in terms),
                                           tuple(p for _, p in terms), total)
    return table


def _fixed_table(circuit: Circuit, fixed: FaultConfig | dict | None) -> dict:
    """op index -> PauliTerm for faults forced by a circuit instance."""
    if not fixed:
        return {}
    items = fixed.assignment if isinstance(fixed, FaultConfig) else fixed.items()
    out = {}
    for loc, term in items:
        t = term if term.n_qubits == circuit.n_qubits else \
            term.embed(circuit.n_qubits, {i: q for i, q in enumerate(loc.qubits)})
        out[loc.index] = t
    return out


def _frozen_indexes(circuit: Circuit, frozen) -> frozenset:
    """Normalize frozen spec (FaultLocations or site ids) to a location set."""
    if not frozen:
        return frozenset()
    sites = {f for f in frozen if isinstance(f, str)}
    locs = {f for f in frozen if not isinstance(f, str)}
    for loc in fault_locations(circuit, "all_ops"):
        if loc.site is not None and loc.site in sites:
            locs.add(loc)
    return frozenset(locs)


# ---------------------------------------------------------------------------
# Trajectory
# ---------------------------------------------------------------------------

def run_shot(c: Circuit, m: NoiseModel, seed: int = 0, *,
             fixed_faults: FaultConfig | dict | None = None,
             frozen_locations=None,
             rng: np.random.Generator | None = None) -> ShotOutcome:
    """Simulate one pure-state trajectory; deterministic for a fixed seed.

    fixed_faults forces specific Pauli errors at their locations; locations in
    frozen_locations (site ids or FaultLocations) are exempt from sampling,
    which is how a circuit instance pins its injection pattern.
    """
    bits, accepted = _run_shot_indexed(c, m, seed, fixed_faults=fixed_faults,
                                       frozen_locations=frozen_locations, rng=rng)
    return ShotOutcome(dict(zip(c.records, bits)), accepted)


def _run_shot_indexed(c: Circuit, m: NoiseModel, seed: int, *,
                      fixed_faults=None, frozen_locations=None, rng=None,
                      _cache=None):
    if c.n_qubits > MAX_QUBITS:
        raise CapacityError(f"{c.n_qubits} qubits exceeds the {MAX_QUBITS}-qubit bound")
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(seed))
    if _cache is not None:
        channels, fixed = _cache
    else:
        frozen = _frozen_indexes(c, frozen_locations)
        channels = _channel_table(c, m, frozen)
        fixed = _fixed_table(c, fixed_faults)

    n = c.n_qubits
    # Stabilizer-style circuits keep tiny basis support; the sparse backend
    # exploits that above the small-register regime and densifies if needed.
    state = _SparseState(n) if n > 10 else _DenseState(n)
    bits: list[int] = []
    index_of = {}
    accepted = True

    def fault(i):
        t = fixed.get(i)
        if t is not None:
            state.pauli(t)
            return
        ch = channels.get(i)
        if ch is None:
            return
        if rng.random() < ch.total:
            target = rng.random() * ch.total
            acc = 0.0
            chosen = ch.terms[-1]
            for term, p in zip(ch.terms, ch.probs):
                acc += p
                if target < acc:
                    chosen = term
                    break
            state.pauli(chosen)

    for i, op in enumerate(c.ops):
        if isinstance(op, Measure):
            fault(i)  # measurement noise precedes the ideal measurement
            bit = state.measure(op.qubit, op.basis, rng)
            index_of[op.label] = len(bits)
            bits.append(bit)
        elif isinstance(op, Gate1):
            state.gate1(op)
            fault(i)
        elif isinstance(op, Gate2):
            state.gate2(op)
            fault(i)
        elif isinstance(op, Prep):
            state = state.prep(op.qubit, op.basis, rng)
            fault(i)
        elif isinstance(op, Inject):
            fault(i)
        elif isinstance(op, Feedback):
            if bits[index_of[op.label]] == op.bit:
                state.pauli(PauliTerm.single(n, op.gate, op.qubit))
        elif isinstance(op, PostSelect):
            if bits[index_of[op.label]] != op.bit:
                accepted = False
    return bits, accepted


class ShotRunner:
    """Reusable trajectory runner with the channel tables resolved once."""

    def __init__(self, c: Circuit, m: NoiseModel, *, frozen_locations=None):
        self.circuit = c
        self.model = m
        frozen = _frozen_indexes(c, frozen_locations)
        self._channels = _channel_table(c, m, frozen)

    def run(self, seed: int, fixed_faults=None) -> tuple[list, bool]:
        fixed = _fixed_table(self.circuit, fixed_faults)
        return _run_shot_indexed(self.circuit, self.model, seed,
                                 _cache=(self._channels, fixed))


def compile_observable(obs, c: Circuit):
    """Turn an observable spec into f(bits_tuple) -> float."""
    order = {lab: i for i, lab in enumerate(c.records)}
    if isinstance(obs, RecordParity):
        idx = tuple(order[lab] for lab in obs.labels)
        sign = obs.sign

        def f(bits):
            par = 0
            for i in idx:
                par ^= bits[i]
            return sign * (1.0 - 2.0 * par)
        return f
    if hasattr(obs, "compile"):
        return obs.compile(c.records)
    if isinstance(obs, DecodedLogical):
        raise ValueError("DecodedLogical must be bound to a decoder first "
                         "(see decoder.DecodedObservable)")
    raise TypeError(f"unsupported observable {obs!r}")


def estimate_raw(c: Circuit, m: NoiseModel, obs, shots: int, seed: int = 0) -> RawEstimate:
    """Monte Carlo mean over accepted shots with its sample standard error."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    f = compile_observable(obs, c)
    runner = ShotRunner(c, m)
    values = []
    for s in range(shots):
        bits, ok = runner.run(derive_seed(seed, s))
        if ok:
            values.append(f(tuple(bits)))
    if not values:
        raise PostSelectionStarvationError(f"0 of {shots} shots accepted")
    arr = np.asarray(values)
    mean = float(arr.mean())
    stderr = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
    return RawEstimate(mean, stderr, len(arr) / shots)


def write_shots_csv(path, c: Circuit, rows) -> None:
    """Stream shot outcomes: instance_id, shot_id, accepted, <record bits...>.

    rows yields (instance_id, shot_id, bits_sequence, accepted).
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["instance_id", "shot_id", "accepted", *c.records])
        for instance_id, shot_id, bits, accepted in rows:
            w.writerow([instance_id, shot_id, int(accepted), *map(int, bits)])


# ---------------------------------------------------------------------------
# Exact enumeration (scalar weights) and polynomial extraction (vector weights)
# ---------------------------------------------------------------------------

class _Budget:
    __slots__ = ("left",)

    def __init__(self, budget):
        self.left = budget

    def spend(self):
        self.left -= 1
        if self.left < 0:
            raise EnumerationCapacityError("enumeration budget exhausted")


def _enumerate(c: Circuit, m: NoiseModel, sink, *, poly_locs=None,
               fixed_faults=None, frozen_locations=None,
               budget: int = DEFAULT_BUDGET, born_tol: float = 1e-12):
    """Depth-first exact traversal.

    Scalar mode (poly_locs None): path weight is a float.
    Polynomial mode: weight is a coefficient vector over r^0..r^N where only
    the locations in poly_locs contribute powers of r (their probabilities are
    taken at the model's current scale). sink(bits, accepted, weight) is
    called at every leaf.
    """
    if c.n_qubits > MAX_QUBITS:
        raise CapacityError(f"{c.n_qubits} qubits exceeds the {MAX_QUBITS}-qubit bound")
    frozen = _frozen_indexes(c, frozen_locations)
    channels = _channel_table(c, m, frozen)
    fixed = _fixed_table(c, fixed_faults)

    poly_mode = poly_locs is not None
    if poly_mode:
        poly_index = {loc.index for loc in poly_locs}
        ncoef = len(poly_locs) + 1
        bad = [i for i in channels if i not in poly_index and i not in fixed]
        if bad:
            raise ValueError(
                "model binds channels outside the polynomial's location policy "
                f"(op indexes {sorted(bad)})")
        w0 = np.zeros(ncoef)
        w0[0] = 1.0
    else:
        w0 = 1.0

    n = c.n_qubits
    counter = _Budget(budget)
    ops = c.ops
    n_ops = len(ops)

    def branch_children(vec, ch):
        """Fault branches at one location, merged by resulting state."""
        kept: list[list] = []   # [state, weight]
        if poly_mode:
            wid = np.zeros(2)
            wid[0], wid[1] = 1.0, -ch.total
        else:
            wid = 1.0 - ch.total
        kept.append([vec, wid])
        for term, p in zip(ch.terms, ch.probs):
            nv = vec.copy()
            _apply_pauli(nv, n, term)
            if poly_mode:
                wt = np.zeros(2)
                wt[1] = p
            else:
                wt = p
            for entry in kept:
                if abs(np.vdot(entry[0], nv)) > 1.0 - _MERGE_TOL:
                    entry[1] = entry[1] + wt
                    break
            else:
                kept.append([nv, wt])
        return kept

    def mul_weight(w, factor):
        """weight *= factor, where factor is scalar or a degree-1 poly."""
        if poly_mode and isinstance(factor, np.ndarray):
            out = np.zeros(len(w))
            out += factor[0] * w
            out[1:] += factor[1] * w[:-1]
            return out
        return w * factor

    def walk(i, vec, w, bits, index_of, accepted):
        while i < n_ops:
            op = ops[i]
            if isinstance(op, Measure):
                t = fixed.get(i)
                ch = channels.get(i)
                if t is not None:
                    _apply_pauli(vec, n, t)
                elif ch is not None:
                    for state, wt in branch_children(vec, ch):
                        counter.spend()
                        walk_measure(i, state, mul_weight(w, wt), bits, index_of, accepted)
                    return
                walk_measure(i, vec, w, bits, index_of, accepted)
                return
            if isinstance(op, Prep):
                _basis_in(vec, n, op.qubit, op.basis)
                p1 = min(max(_prob_one(vec, n, op.qubit), 0.0), 1.0)
                p0 = 1.0 - p1
                if abs(p0 + p1 - 1.0) > born_tol:  # pragma: no cover
                    raise AssertionError("Born weights do not normalize")
                branches = []
                if p0 >= _BRANCH_TOL:
                    branches.append((0, p0))
                if p1 >= _BRANCH_TOL:
                    branches.append((1, p1))
                if len(branches) == 2:
                    for bit, prob in branches:
                        counter.spend()
                        nv = vec.copy()
                        _project(nv, n, op.qubit, bit, prob)
                        if bit:
                            _apply_x(nv, n, op.qubit)
                        _basis_out(nv, n, op.qubit, op.basis)
                        _after_prep(i, nv, mul_weight(w, prob), bits, index_of, accepted)
                    return
                bit, prob = branches[0]
                _project(vec, n, op.qubit, bit, prob)
                if bit:
                    _apply_x(vec, n, op.qubit)
                _basis_out(vec, n, op.qubit, op.basis)
                w = mul_weight(w, prob)
                t = fixed.get(i)
                ch = channels.get(i)
                if t is not None:
                    _apply_pauli(vec, n, t)
                elif ch is not None:
                    for state, wt in branch_children(vec, ch):
                        counter.spend()
                        walk(i + 1, state, mul_weight(w, wt), bits, index_of, accepted)
                    return
                i += 1
                continue
            if isinstance(op, (Gate1, Gate2, Inject)):
                if isinstance(op, Gate1):
                    _apply_gate1(vec, n, op)
                elif isinstance(op, Gate2):
                    if op.kind == "CNOT":
                        _apply_cnot(vec, n, op.control, op.target)
                    else:
                        _apply_cz(vec, n, op.control, op.target)
                t = fixed.get(i)
                ch = channels.get(i)
                if t is not None:
                    _apply_pauli(vec, n, t)
                elif ch is not None:
                    for state, wt in branch_children(vec, ch):
                        counter.spend()
                        walk(i + 1, state, mul_weight(w, wt), bits, index_of, accepted)
                    return
                i += 1
                continue
            if isinstance(op, Feedback):
                if bits[index_of[op.label]] == op.bit:
                    _apply_pauli(vec, n, PauliTerm.single(n, op.gate, op.qubit))
                i += 1
                continue
            if isinstance(op, PostSelect):
                if bits[index_of[op.label]] != op.bit:
                    accepted = False
                i += 1
                continue
            raise ValueError(f"unknown op {op!r}")  # pragma: no cover
        sink(tuple(bits), accepted, w)

    def _after_prep(i, vec, w, bits, index_of, accepted):
        t = fixed.get(i)
        ch = channels.get(i)
        if t is not None:
            _apply_pauli(vec, n, t)
        elif ch is not None:
            for state, wt in branch_children(vec, ch):
                counter.spend()
                walk(i + 1, state, mul_weight(w, wt), bits, index_of, accepted)
            return
        walk(i + 1, vec, w, bits, index_of, accepted)

    def walk_measure(i, vec, w, bits, index_of, accepted):
        op = ops[i]
        _basis_in(vec, n, op.qubit, op.basis)
        p1 = min(max(_prob_one(vec, n, op.qubit), 0.0), 1.0)
        p0 = 1.0 - p1
        if abs(p0 + p1 - 1.0) > born_tol:  # pragma: no cover
            raise AssertionError("Born weights do not normalize")
        branches = [(b, p) for b, p in ((0, p0), (1, p1)) if p >= _BRANCH_TOL]
        last = len(branches) - 1
        for k, (bit, prob) in enumerate(branches):
            counter.spend()
            nv = vec if k == last else vec.copy()
            _project(nv, n, op.qubit, bit, prob)
            _basis_out(nv, n, op.qubit, op.basis)
            nbits = bits + [bit]
            nindex = dict(index_of)
            nindex[op.label] = len(bits)
            walk(i + 1, nv, mul_weight(w, prob), nbits, nindex, accepted)

    init = np.zeros(1 << n, dtype=complex)
    init[0] = 1.0
    walk(0, init, w0, [], {}, True)


def exact_expectation_multi(c: Circuit, m: NoiseModel, observables, *,
                            fixed_faults=None, frozen_locations=None,
                            budget: int = DEFAULT_BUDGET) -> list[float]:
    """Exact values of several observables in one enumeration pass."""
    fns = [compile_observable(o, c) for o in observables]
    num = [0.0] * len(fns)
    den = 0.0

    def sink(bits, accepted, w):
        nonlocal den
        if not accepted:
            return
        den += w
        for j, f in enumerate(fns):
            num[j] += f(bits) * w

    _enumerate(c, m, sink, fixed_faults=fixed_faults,
               frozen_locations=frozen_locations, budget=budget)
    if den <= 0.0:
        raise PostSelectionStarvationError("no branch weight survived post-selection")
    return [v / den for v in num]


def exact_expectation(c: Circuit, m: NoiseModel, obs, *,
                      fixed_faults=None, frozen_locations=None,
                      budget: int = DEFAULT_BUDGET) -> float:
    """Exact expectation by full branch-and-configuration enumeration."""
    return exact_expectation_multi(c, m, [obs], fixed_faults=fixed_faults,
                                   frozen_locations=frozen_locations,
                                   budget=budget)[0]


@dataclass(frozen=True)
class ExpectationPolynomial:
    """<O>(r) = sum_k coeffs[k] r^k, divided by the matching denominator
    polynomial when the circuit post-selects (denom None means exactly 1)."""

    coeffs: tuple[float, ...]
    n_locations: int
    denom: tuple[float, ...] | None = None

    def evaluate(self, r: float) -> float:
        num = 0.0
        for a in reversed(self.coeffs):
            num = num * r + a
        if self.denom is None:
            return num
        den = 0.0
        for a in reversed(self.denom):
            den = den * r + a
        return num / den

    @property
    def ideal(self) -> float:
        return self.evaluate(0.0)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1


def expectation_polynomial(c: Circuit, m: NoiseModel, obs,
                           policy: str = "injection_only", *,
                           budget: int = DEFAULT_BUDGET,
                           max_locations: int = 20) -> ExpectationPolynomial:
    """Exact expansion coefficients of <O> in the noise scale r.

    The k-th coefficient aggregates every k-fault subset of the policy's
    locations with the identity-branch factors (1 - r p) expanded exactly, so
    evaluating at any r reproduces exact_expectation(scale_model(m, r)).
    """
    locs = fault_locations(c, policy)
    if len(locs) > max_locations:
        raise EnumerationCapacityError(
            f"{len(locs)} fault locations exceed the {max_locations}-location bound")
    fns = [compile_observable(obs, c)]
    ncoef = len(locs) + 1
    num = np.zeros(ncoef)
    den = np.zeros(ncoef)
    has_postselect = any(isinstance(op, PostSelect) for op in c.ops)

    def sink(bits, accepted, w):
        if not accepted:
            return
        den[...] += w
        num[...] += fns[0](bits) * w

    _enumerate(c, m, sink, poly_locs=locs, budget=budget)

    if has_postselect:
        return ExpectationPolynomial(tuple(num), len(locs), tuple(den))
    # Without post-selection the denominator must be the constant 1.
    if abs(den[0] - 1.0) > 1e-9 or np.max(np.abs(den[1:]), initial=0.0) > 1e-9:
        raise AssertionError("denominator failed to collapse to 1")
    return ExpectationPolynomial(tuple(num), len(locs), None)
