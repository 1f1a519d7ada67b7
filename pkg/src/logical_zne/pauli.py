"""Exact multi-qubit Pauli algebra.

A term is stored in the symplectic representation: an X bit-mask, a Z bit-mask
and a phase exponent e with the operator equal to i^e * X(x_mask) * Z(z_mask).
Python integers give arbitrary-width masks, so the same code covers the <=64
qubit fast path and anything a decoder might index.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import reduce

__all__ = [
    "PauliTerm",
    "PauliError",
    "pauli_mul",
    "commutes",
    "weight",
    "symplectic_parity",
]


class PauliError(ValueError):
    """Dimension mismatch or malformed Pauli text."""


_SINGLE = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_PHASE_TEXT = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_TERM_RE = re.compile(r"([XYZ])(\d+)")
_HEAD_RE = re.compile(r"^([+-]?)(i?)(.*)$")


@dataclass(frozen=True)
class PauliTerm:
    """Signed Pauli operator i^phase_exp * X(x_mask) * Z(z_mask) on n_qubits."""

    n_qubits: int
    x_mask: int
    z_mask: int
    phase_exp: int = 0

    def __post_init__(self):
        if self.n_qubits < 0:
            raise PauliError("negative qubit count")
        if self.phase_exp not in (0, 1, 2, 3):
            raise PauliError(f"phase exponent {self.phase_exp} outside 0..3")
        full = (1 << self.n_qubits) - 1
        if self.x_mask & ~full or self.z_mask & ~full:
            raise PauliError("mask exceeds qubit count")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def identity(n_qubits: int) -> "PauliTerm":
        return PauliTerm(n_qubits, 0, 0, 0)

    @staticmethod
    def single(n_qubits: int, letter: str, qubit: int) -> "PauliTerm":
        """Single-qubit X/Y/Z (or I) embedded in an n-qubit register."""
        if not 0 <= qubit < n_qubits:
            raise PauliError(f"qubit {qubit} outside register of {n_qubits}")
        try:
            x, z = _SINGLE[letter.upper()]
        except KeyError:
            raise PauliError(f"unknown Pauli letter {letter!r}") from None
        # Y = i * X * Z, so carry the +i explicitly to keep products exact.
        phase = 1 if (x and z) else 0
        return PauliTerm(n_qubits, x << qubit if x else 0, z << qubit if z else 0, phase)

    @staticmethod
    def from_letters(n_qubits: int, assignment: dict[int, str]) -> "PauliTerm":
        """Product of single-qubit letters keyed by qubit index."""
        terms = [PauliTerm.single(n_qubits, p, q) for q, p in sorted(assignment.items())]
        return reduce(pauli_mul, terms, PauliTerm.identity(n_qubits))

    @staticmethod
    def parse(text: str, n_qubits: int) -> "PauliTerm":
        """Parse the rendered form, e.g. '+iX0Z3' or 'Y2'."""
        m = _HEAD_RE.match(text.strip())
        if m is None:
            raise PauliError(f"cannot parse Pauli text {text!r}")
        sign, imag, body = m.groups()
        phase = {"": 0, "+": 0, "-": 2}[sign] + (1 if imag else 0)
        body = body.strip()
        if body in ("", "I"):
            term = PauliTerm(n_qubits, 0, 0, 0)
        else:
            consumed = 0
            factors = []
            for mm in _TERM_RE.finditer(body):
                if mm.start() != consumed:
                    raise PauliError(f"unexpected text in {text!r}")
                consumed = mm.end()
                factors.append(PauliTerm.single(n_qubits, mm.group(1), int(mm.group(2))))
            if consumed != len(body):
                raise PauliError(f"unexpected text in {text!r}")
            term = reduce(pauli_mul, factors)
        return PauliTerm(n_qubits, term.x_mask, term.z_mask, (term.phase_exp + phase) % 4)

    # -- queries -----------------------------------------------------------

    @property
    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0 and self.phase_exp == 0

    def letter(self, qubit: int) -> str:
        x = (self.x_mask >> qubit) & 1
        z = (self.z_mask >> qubit) & 1
        return "IXZY"[x + 2 * z] if not (x and z) else "Y"

    def support(self) -> tuple[int, ...]:
        return tuple(
            q for q in range(self.n_qubits)
            if (self.x_mask | self.z_mask) >> q & 1
        )

    def embed(self, n_qubits: int, qubit_map: dict[int, int]) -> "PauliTerm":
        """Re-index into another register, mapping local qubit -> global qubit.

        The symplectic masks are permuted bit by bit; the phase is unchanged
        because i^e * X(x)Z(z) does not care how its qubits are labelled.
        """
        x = z = 0
        for q in self.support():
            g = qubit_map[q]
            if not 0 <= g < n_qubits:
                raise PauliError(f"mapped qubit {g} outside register of {n_qubits}")
            x |= ((self.x_mask >> q) & 1) << g
            z |= ((self.z_mask >> q) & 1) << g
        return PauliTerm(n_qubits, x, z, self.phase_exp)

    def __str__(self) -> str:
        body = "".join(f"{self.letter(q)}{q}" for q in self.support())
        # Each printed Y stands for i*XZ, so the leading phase sheds one i per Y.
        shown = (self.phase_exp - bin(self.x_mask & self.z_mask).count("1")) % 4
        return _PHASE_TEXT[shown] + (body or "I")


def pauli_mul(a: PauliTerm, b: PauliTerm) -> PauliTerm:
    """Group product a*b with the exact i-power phase."""
    if a.n_qubits != b.n_qubits:
        raise PauliError(f"size mismatch: {a.n_qubits} vs {b.n_qubits}")
    # (i^e1 X1 Z1)(i^e2 X2 Z2): moving Z1 past X2 picks up (-1)^|Z1 & X2|.
    swaps = bin(a.z_mask & b.x_mask).count("1")
    phase = (a.phase_exp + b.phase_exp + 2 * swaps) % 4
    return PauliTerm(a.n_qubits, a.x_mask ^ b.x_mask, a.z_mask ^ b.z_mask, phase)


def symplectic_parity(a: PauliTerm, b: PauliTerm) -> int:
    """Parity of the symplectic form; 1 means the operators anticommute."""
    if a.n_qubits != b.n_qubits:
        raise PauliError(f"size mismatch: {a.n_qubits} vs {b.n_qubits}")
    return (bin(a.x_mask & b.z_mask).count("1")
            + bin(a.z_mask & b.x_mask).count("1")) % 2


def commutes(a: PauliTerm, b: PauliTerm) -> bool:
    return symplectic_parity(a, b) == 0


def weight(a: PauliTerm) -> int:
    """Number of qubits the term acts on non-trivially."""
    return bin(a.x_mask | a.z_mask).count("1")
