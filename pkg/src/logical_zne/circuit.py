"""Circuit IR, line-oriented text format and validation.

Circuits carry mid-circuit measurement, classical feedback, post-selection
and tagged fault-injection sites. Measurement outcomes are stored as bits
b in {0,1}; the eigenvalue convention mu = (-1)^b is applied only when an
observable is evaluated, so there is a single bit-level source of truth.

Grammar (one operation per line, '#' comments, case-insensitive opcodes):

    QUBITS <n>
    PREP <X|Y|Z> <q>
    <I|X|Y|Z|H|S> <q>
    RY <q> theta=<float>
    RZ <q> theta=<float>
    CNOT <c> <t>
    CZ <a> <b>
    MEASURE <X|Y|Z> <q> -> <label>
    FEEDBACK <X|Y|Z> <q> IF <label>==<0|1>
    POSTSELECT <label>==<0|1>
    INJECT <q> site=<id>
    OBS PARITY <label>...
    OBS DECODED <decoder_id>
"""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = [
    "Prep", "Gate1", "Gate2", "Measure", "Feedback", "PostSelect", "Inject",
    "Operation", "Circuit", "RecordParity", "DecodedLogical", "ObservableSpec",
    "CircuitError", "ParseSyntaxError", "UnknownOpcodeError",
    "UndefinedRecordError", "QubitRangeError", "ValidationError",
    "FaultLocation", "parse_circuit", "serialize_circuit", "fault_locations",
]


class CircuitError(ValueError):
    """Base for circuit construction/parsing problems."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + where)


class ParseSyntaxError(CircuitError):
    pass


class UnknownOpcodeError(CircuitError):
    pass


class UndefinedRecordError(CircuitError):
    pass


class QubitRangeError(CircuitError):
    pass


class ValidationError(CircuitError):
    pass


_BASES = ("X", "Y", "Z")
_GATE1_KINDS = ("I", "X", "Y", "Z", "H", "S", "RY", "RZ")
_GATE2_KINDS = ("CNOT", "CZ")


@dataclass(frozen=True)
class Prep:
    basis: str
    qubit: int


@dataclass(frozen=True)
class Gate1:
    kind: str
    qubit: int
    theta: float = 0.0


@dataclass(frozen=True)
class Gate2:
    kind: str
    control: int
    target: int


@dataclass(frozen=True)
class Measure:
    basis: str
    qubit: int
    label: str


@dataclass(frozen=True)
class Feedback:
    gate: str            # Pauli applied when the condition holds
    qubit: int
    label: str
    bit: int


@dataclass(frozen=True)
class PostSelect:
    label: str
    bit: int


@dataclass(frozen=True)
class Inject:
    qubit: int
    site: str


Operation = Prep | Gate1 | Gate2 | Measure | Feedback | PostSelect | Inject


@dataclass(frozen=True)
class RecordParity:
    labels: tuple[str, ...]
    sign: int = 1


@dataclass(frozen=True)
class DecodedLogical:
    decoder_id: str
    labels: tuple[str, ...] = ()


ObservableSpec = RecordParity | DecodedLogical


@dataclass(frozen=True)
class FaultLocation:
    """A spot where a stochastic Pauli error may strike.

    index is the op position (program order); kind is the op class name
    ('prep', 'gate1', 'gate2', 'measure', 'inject'); site is set for INJECT.
    """

    index: int
    kind: str
    qubits: tuple[int, ...]
    site: str | None = None


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    ops: tuple[Operation, ...]
    metadata: tuple[tuple[str, str], ...] = ()
    observable: ObservableSpec | None = None

    def __post_init__(self):
        _validate(self)

    @property
    def records(self) -> tuple[str, ...]:
        return tuple(op.label for op in self.ops if isinstance(op, Measure))

    @property
    def n_measurements(self) -> int:
        return sum(1 for op in self.ops if isinstance(op, Measure))

    def meta(self) -> dict[str, str]:
        return dict(self.metadata)


def _validate(c: Circuit) -> None:
    seen: set[str] = set()
    sites: set[str] = set()

    def check_q(q: int) -> None:
        if not 0 <= q < c.n_qubits:
            raise QubitRangeError(f"qubit {q} out of range 0..{c.n_qubits - 1}")

    for op in c.ops:
        if isinstance(op, Prep):
            if op.basis not in _BASES:
                raise ValidationError(f"bad prep basis {op.basis!r}")
            check_q(op.qubit)
        elif isinstance(op, Gate1):
            if op.kind not in _GATE1_KINDS:
                raise ValidationError(f"bad gate kind {op.kind!r}")
            check_q(op.qubit)
        elif isinstance(op, Gate2):
            if op.kind not in _GATE2_KINDS:
                raise ValidationError(f"bad gate kind {op.kind!r}")
            check_q(op.control)
            check_q(op.target)
            if op.control == op.target:
                raise ValidationError("two-qubit gate needs distinct qubits")
        elif isinstance(op, Measure):
            if op.basis not in _BASES:
                raise ValidationError(f"bad measure basis {op.basis!r}")
            check_q(op.qubit)
            if op.label in seen:
                raise ValidationError(f"record {op.label!r} produced twice")
            seen.add(op.label)
        elif isinstance(op, Feedback):
            if op.gate not in ("X", "Y", "Z"):
                raise ValidationError(f"feedback gate must be Pauli, got {op.gate!r}")
            check_q(op.qubit)
            if op.label not in seen:
                raise UndefinedRecordError(f"feedback references undefined record {op.label!r}")
            if op.bit not in (0, 1):
                raise ValidationError("feedback condition bit must be 0 or 1")
        elif isinstance(op, PostSelect):
            if op.label not in seen:
                raise UndefinedRecordError(f"post-selection references undefined record {op.label!r}")
            if op.bit not in (0, 1):
                raise ValidationError("post-selection bit must be 0 or 1")
        elif isinstance(op, Inject):
            check_q(op.qubit)
            if op.site in sites:
                raise ValidationError(f"duplicate injection site {op.site!r}")
            sites.add(op.site)
        else:
            raise ValidationError(f"unknown operation {op!r}")

    if c.observable is not None:
        if isinstance(c.observable, RecordParity):
            for lab in c.observable.labels:
                if lab not in seen:
                    raise UndefinedRecordError(f"observable references undefined record {lab!r}")
            if c.observable.sign not in (1, -1):
                raise ValidationError("observable sign must be +-1")


# ----------------------------------------------------------------------------
# Parsing
# ----------------------------------------------------------------------------

def _int(tok: str, line: int, col: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseSyntaxError(f"expected {what}, got {tok!r}", line, col) from None


def _float_kv(tok: str, key: str, line: int, col: int) -> float:
    if not tok.lower().startswith(key + "="):
        raise ParseSyntaxError(f"expected {key}=<float>, got {tok!r}", line, col)
    try:
        return float(tok.split("=", 1)[1])
    except ValueError:
        raise ParseSyntaxError(f"bad float in {tok!r}", line, col) from None


def _cond(tok: str, line: int, col: int) -> tuple[str, int]:
    if "==" not in tok:
        raise ParseSyntaxError(f"expected <label>==<0|1>, got {tok!r}", line, col)
    label, bit = tok.split("==", 1)
    if bit not in ("0", "1") or not label:
        raise ParseSyntaxError(f"expected <label>==<0|1>, got {tok!r}", line, col)
    return label, int(bit)


def parse_circuit(text: str) -> Circuit:
    """Parse the text grammar into a validated Circuit.

    Every failure raises a CircuitError subclass carrying line/column.
    """
    n_qubits: int | None = None
    ops: list[Operation] = []
    observable: ObservableSpec | None = None
    defined: set[str] = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        toks = line.split()
        cols = []
        pos = 0
        for t in toks:
            pos = line.index(t, pos)
            cols.append(pos + 1)
            pos += len(t)
        op = toks[0].upper()

        def want(n: int) -> None:
            if len(toks) != n:
                raise ParseSyntaxError(
                    f"{op} expects {n - 1} field(s), got {len(toks) - 1}", lineno, cols[0])

        def qub(i: int) -> int:
            q = _int(toks[i], lineno, cols[i], "a qubit index")
            if n_qubits is None:
                raise ParseSyntaxError("QUBITS must come first", lineno, cols[0])
            if not 0 <= q < n_qubits:
                raise QubitRangeError(f"qubit {q} out of range 0..{n_qubits - 1}",
                                      lineno, cols[i])
            return q

        if op == "QUBITS":
            want(2)
            if n_qubits is not None:
                raise ParseSyntaxError("duplicate QUBITS line", lineno, cols[0])
            n_qubits = _int(toks[1], lineno, cols[1], "a qubit count")
            if n_qubits <= 0:
                raise ParseSyntaxError("qubit count must be positive", lineno, cols[1])
        elif op == "PREP":
            want(3)
            basis = toks[1].upper()
            if basis not in _BASES:
                raise ParseSyntaxError(f"bad basis {toks[1]!r}", lineno, cols[1])
            ops.append(Prep(basis, qub(2)))
        elif op in ("I", "X", "Y", "Z", "H", "S"):
            want(2)
            ops.append(Gate1(op, qub(1)))
        elif op in ("RY", "RZ"):
            want(3)
            q = qub(1)
            theta = _float_kv(toks[2], "theta", lineno, cols[2])
            ops.append(Gate1(op, q, theta))
        elif op in ("CNOT", "CZ"):
            want(3)
            a, b = qub(1), qub(2)
            if a == b:
                raise ParseSyntaxError("two-qubit gate needs distinct qubits", lineno, cols[2])
            ops.append(Gate2(op, a, b))
        elif op == "MEASURE":
            want(5)
            basis = toks[1].upper()
            if basis not in _BASES:
                raise ParseSyntaxError(f"bad basis {toks[1]!r}", lineno, cols[1])
            q = qub(2)
            if toks[3] != "->":
                raise ParseSyntaxError("expected '->'", lineno, cols[3])
            label = toks[4]
            if label in defined:
                raise ParseSyntaxError(f"record {label!r} produced twice", lineno, cols[4])
            defined.add(label)
            ops.append(Measure(basis, q, label))
        elif op == "FEEDBACK":
            want(5)
            gate = toks[1].upper()
            if gate not in ("X", "Y", "Z"):
                raise ParseSyntaxError(f"feedback gate must be Pauli, got {toks[1]!r}",
                                       lineno, cols[1])
            q = qub(2)
            if toks[3].upper() != "IF":
                raise ParseSyntaxError("expected 'IF'", lineno, cols[3])
            label, bit = _cond(toks[4], lineno, cols[4])
            if label not in defined:
                raise UndefinedRecordError(f"undefined record {label!r}", lineno, cols[4])
            ops.append(Feedback(gate, q, label, bit))
        elif op == "POSTSELECT":
            want(2)
            label, bit = _cond(toks[1], lineno, cols[1])
            if label not in defined:
                raise UndefinedRecordError(f"undefined record {label!r}", lineno, cols[1])
            ops.append(PostSelect(label, bit))
        elif op == "INJECT":
            want(3)
            q = qub(1)
            if not toks[2].lower().startswith("site="):
                raise ParseSyntaxError(f"expected site=<id>, got {toks[2]!r}", lineno, cols[2])
            ops.append(Inject(q, toks[2].split("=", 1)[1]))
        elif op == "OBS":
            if len(toks) < 2:
                raise ParseSyntaxError("OBS expects PARITY or DECODED", lineno, cols[0])
            mode = toks[1].upper()
            if mode == "PARITY":
                if len(toks) < 3:
                    raise ParseSyntaxError("OBS PARITY expects labels", lineno, cols[1])
                for i, lab in enumerate(toks[2:], start=2):
                    if lab not in defined:
                        raise UndefinedRecordError(f"undefined record {lab!r}", lineno, cols[i])
                observable = RecordParity(tuple(toks[2:]))
            elif mode == "DECODED":
                if len(toks) != 3:
                    raise ParseSyntaxError("OBS DECODED expects a decoder id", lineno, cols[1])
                observable = DecodedLogical(toks[2])
            else:
                raise ParseSyntaxError(f"unknown OBS mode {toks[1]!r}", lineno, cols[1])
        else:
            raise UnknownOpcodeError(f"unknown opcode {toks[0]!r}", lineno, cols[0])

    if n_qubits is None:
        raise ParseSyntaxError("missing QUBITS line", 1, 1)
    try:
        return Circuit(n_qubits, tuple(ops), observable=observable)
    except CircuitError:
        raise
    except Exception as exc:  # pragma: no cover - defensive
        raise ValidationError(str(exc)) from exc


def serialize_circuit(c: Circuit) -> str:
    """Canonical text: one op per line, theta with 12 significant digits."""
    out = [f"QUBITS {c.n_qubits}"]
    for op in c.ops:
        if isinstance(op, Prep):
            out.append(f"PREP {op.basis} {op.qubit}")
        elif isinstance(op, Gate1):
            if op.kind in ("RY", "RZ"):
                out.append(f"{op.kind} {op.qubit} theta={op.theta:.12g}")
            else:
                out.append(f"{op.kind} {op.qubit}")
        elif isinstance(op, Gate2):
            out.append(f"{op.kind} {op.control} {op.target}")
        elif isinstance(op, Measure):
            out.append(f"MEASURE {op.basis} {op.qubit} -> {op.label}")
        elif isinstance(op, Feedback):
            out.append(f"FEEDBACK {op.gate} {op.qubit} IF {op.label}=={op.bit}")
        elif isinstance(op, PostSelect):
            out.append(f"POSTSELECT {op.label}=={op.bit}")
        elif isinstance(op, Inject):
            out.append(f"INJECT {op.qubit} site={op.site}")
    if isinstance(c.observable, RecordParity):
        out.append("OBS PARITY " + " ".join(c.observable.labels))
    elif isinstance(c.observable, DecodedLogical):
        out.append(f"OBS DECODED {c.observable.decoder_id}")
    return "\n".join(out) + "\n"


def fault_locations(c: Circuit, policy: str = "injection_only") -> list[FaultLocation]:
    """Ordered fault locations.

    policy 'injection_only': INJECT sites in program order.
    policy 'all_ops': every PREP/Gate/MEASURE plus INJECT sites.
    """
    if policy not in ("injection_only", "all_ops"):
        raise ValueError(f"unknown policy {policy!r}")
    locs: list[FaultLocation] = []
    for i, op in enumerate(c.ops):
        if isinstance(op, Inject):
            locs.append(FaultLocation(i, "inject", (op.qubit,), op.site))
        elif policy == "all_ops":
            if isinstance(op, Prep):
                locs.append(FaultLocation(i, "prep", (op.qubit,)))
            elif isinstance(op, Gate1):
                locs.append(FaultLocation(i, "gate1", (op.qubit,)))
            elif isinstance(op, Gate2):
                locs.append(FaultLocation(i, "gate2", (op.control, op.target)))
            elif isinstance(op, Measure):
                locs.append(FaultLocation(i, "measure", (op.qubit,)))
    return locs
