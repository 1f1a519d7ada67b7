"""Weighted circuit-instance generation and expectation estimation.

Instead of sampling injected errors per shot, the experiment enumerates
"circuit instances" (fixed injection patterns) stratified by error count k.
Level k carries probability weight P(k) = C(n,k) (rp)^k (1-rp)^(n-k); the
instance budget is split by largest-remainder rounding of P(k)*N, clipped to
the number of distinct instances, raised to a minimum floor (1% of the budget
by default) so rare levels keep statistical support, and the residual budget
is re-spread cyclically in largest-remainder order.

The estimate over shot outcomes O_{k,c,s} is
    mean = (1/S) sum_{k,c,s} P(k) O_{k,c,s} / C(k)
with the standard error taken over the per-shot-index means.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .circuit import FaultLocation, fault_locations
from .codes import BuiltCode
from .noise import FaultConfig
from .pauli import PauliTerm

__all__ = [
    "EstimatorError", "IncompleteDataError", "InstancePlan", "Instance",
    "InstanceSet", "plan_instances", "draw_instances", "estimate_expectation",
    "estimate_ratio", "instances_to_json", "instances_from_json",
    "estimate_from_csv",
]

_LETTERS = ("X", "Y", "Z")
_ENUM_CAP = 200_000


class EstimatorError(ValueError):
    pass


class IncompleteDataError(EstimatorError):
    """Shot table does not provide S outcomes for every instance."""


def _binom(n: int, k: int) -> int:
    return math.comb(n, k)


@dataclass(frozen=True)
class InstancePlan:
    n_loc: int
    rp: float
    n_total: int
    min_frac: float
    quotas: dict[int, int]
    weights: dict[int, float]
    available: dict[int, int]

    @property
    def covered_weight(self) -> float:
        return sum(self.weights[k] for k, c in self.quotas.items() if c > 0)

    @property
    def uncovered_weight(self) -> float:
        """Probability mass of levels that received no instances (reported,
        never silently dropped)."""
        return sum(w for k, w in self.weights.items()
                   if self.quotas.get(k, 0) == 0)


def plan_instances(n_loc: int, rp: float, n_total: int,
                   min_frac: float = 0.01) -> InstancePlan:
    """Assign per-error-count instance quotas for a total budget."""
    if not 0 <= rp < 1:
        raise EstimatorError(f"per-location probability {rp} outside [0, 1)")
    if n_total < 1:
        raise EstimatorError("instance budget must be positive")

    weights = {}
    for k in range(n_loc + 1):
        w = _binom(n_loc, k) * rp ** k * (1 - rp) ** (n_loc - k)
        if w > 0.0:
            weights[k] = w
    avail = {k: _binom(n_loc, k) * 3 ** k for k in weights}

    raw = {k: w * n_total for k, w in weights.items()}
    base = {k: int(raw[k]) for k in raw}
    order = sorted(raw, key=lambda k: (-(raw[k] - base[k]), k))
    leftover = n_total - sum(base.values())
    quotas = dict(base)
    for k in order[:leftover]:
        quotas[k] += 1

    # Floors and the budget re-spread stay on the levels the rounding itself
    # targeted; negligible-weight levels join only once those saturate, so a
    # large location count never forces absurd error-count instances.
    eligible = sorted(k for k in quotas if quotas[k] > 0)
    for k in quotas:
        quotas[k] = min(quotas[k], avail[k])
    floor_q = math.ceil(min_frac * n_total) if min_frac > 0 else 0
    for k in eligible:
        quotas[k] = max(quotas[k], min(floor_q, avail[k]))

    residual = n_total - sum(quotas.values())
    spread_order = [k for k in order if k in set(eligible)]
    while residual > 0:
        progressed = False
        for k in spread_order:
            if residual == 0:
                break
            if quotas[k] < avail[k]:
                quotas[k] += 1
                residual -= 1
                progressed = True
        if not progressed:
            extra = [k for k in sorted(quotas) if k not in set(spread_order)
                     and quotas[k] < avail[k]]
            if not extra:
                break   # whole instance space exhausted
            spread_order.append(extra[0])
    if residual < 0:
        # Floors overflowed a tiny budget: shrink the least likely levels.
        for k in sorted(quotas, key=lambda k: (weights[k], -k)):
            while residual < 0 and quotas[k] > 0:
                quotas[k] -= 1
                residual += 1
    return InstancePlan(n_loc, rp, n_total, min_frac, quotas, weights, avail)


@dataclass(frozen=True)
class Instance:
    """k injected errors: (site id, Pauli letter) per struck location."""

    k: int
    pattern: tuple[tuple[str, str], ...]

    def fault_config(self, code: BuiltCode) -> FaultConfig:
        lookup = _site_locations(code)
        n = code.circuit.n_qubits
        mapping = {}
        for site, letter in self.pattern:
            loc = lookup[site]
            mapping[loc] = PauliTerm.single(n, letter, loc.qubits[0])
        return FaultConfig.build(mapping)


def _site_locations(code: BuiltCode) -> dict[str, FaultLocation]:
    return {loc.site: loc for loc in fault_locations(code.circuit, "injection_only")}


@dataclass(frozen=True)
class InstanceSet:
    instances: tuple[Instance, ...]
    shots_per_instance: int = 1


def draw_instances(plan: InstancePlan, code: BuiltCode, seed: int = 0,
                   shots_per_instance: int = 1) -> InstanceSet:
    """Uniform sampling without replacement within each error-count level.

    A level whose quota covers its whole space is enumerated instead of
    sampled; drawing is deterministic per seed.
    """
    sites = code.injection_sites
    if len(sites) != plan.n_loc:
        raise EstimatorError(
            f"plan was made for {plan.n_loc} locations, code has {len(sites)}")
    rng = np.random.Generator(np.random.PCG64(seed))
    out: list[Instance] = []
    for k in sorted(plan.quotas):
        quota = plan.quotas[k]
        if quota == 0:
            continue
        if k == 0:
            out.append(Instance(0, ()))
            continue
        if quota >= plan.available[k]:
            if plan.available[k] > _ENUM_CAP:
                raise EstimatorError("exhaustive level too large to enumerate")
            from itertools import combinations, product
            for subset in combinations(range(plan.n_loc), k):
                for letters in product(range(3), repeat=k):
                    out.append(Instance(k, tuple(
                        (sites[i], _LETTERS[l]) for i, l in zip(subset, letters))))
            continue
        seen = set()
        while len(seen) < quota:
            subset = tuple(sorted(rng.choice(plan.n_loc, size=k, replace=False)))
            letters = tuple(int(x) for x in rng.integers(0, 3, size=k))
            key = (subset, letters)
            if key in seen:
                continue
            seen.add(key)
            out.append(Instance(k, tuple(
                (sites[i], _LETTERS[l]) for i, l in zip(*key))))
    return InstanceSet(tuple(out), shots_per_instance)


def _weight_table(inst_set: InstanceSet, plan: InstancePlan) -> np.ndarray:
    counts: dict[int, int] = {}
    for inst in inst_set.instances:
        counts[inst.k] = counts.get(inst.k, 0) + 1
    for k, c in counts.items():
        if plan.quotas.get(k, 0) != c:
            raise EstimatorError(
                f"instance set has {c} instances at k={k}, plan says "
                f"{plan.quotas.get(k, 0)}")
    return np.array([plan.weights[i.k] / counts[i.k] for i in inst_set.instances])


def _as_matrix(inst_set: InstanceSet, shot_results) -> np.ndarray:
    arr = np.asarray(shot_results, dtype=float)
    want = (len(inst_set.instances), inst_set.shots_per_instance)
    if arr.shape != want:
        raise IncompleteDataError(f"shot table shape {arr.shape}, expected {want}")
    return arr


def estimate_expectation(inst_set: InstanceSet, plan: InstancePlan,
                         shot_results) -> tuple[float, float]:
    """Weighted mean and its standard error over the per-shot-index means."""
    arr = _as_matrix(inst_set, shot_results)
    w = _weight_table(inst_set, plan)
    per_shot = w @ arr                        # sum_{k,c} P(k) O_{.,s} / C(k)
    s = inst_set.shots_per_instance
    mean = float(per_shot.mean())
    if s > 1:
        stderr = float(np.sqrt(np.sum((per_shot - mean) ** 2) / (s * (s - 1))))
    else:
        stderr = 0.0
    return mean, stderr


def estimate_ratio(inst_set: InstanceSet, plan: InstancePlan,
                   shot_results, accepted) -> tuple[float, float]:
    """Post-selected variant: weighted accepted mean over weighted acceptance.

    Rejected shots contribute to neither numerator nor denominator; the
    standard error is taken over the per-shot-index ratio estimates.
    """
    arr = _as_matrix(inst_set, shot_results)
    acc = _as_matrix(inst_set, accepted)
    w = _weight_table(inst_set, plan)
    num_s = w @ (arr * acc)
    den_s = w @ acc
    num, den = float(num_s.sum()), float(den_s.sum())
    if den <= 0:
        raise EstimatorError("no accepted weight")
    keep = den_s > 0
    ratios = num_s[keep] / den_s[keep]
    mean = num / den
    s = int(keep.sum())
    if s > 1:
        stderr = float(np.sqrt(np.sum((ratios - ratios.mean()) ** 2) / (s * (s - 1))))
    else:
        stderr = 0.0
    return mean, stderr


def instances_to_json(inst_set: InstanceSet, plan: InstancePlan) -> str:
    return json.dumps({
        "n_loc": plan.n_loc, "rp": plan.rp, "n_total": plan.n_total,
        "min_frac": plan.min_frac,
        "quotas": {str(k): v for k, v in sorted(plan.quotas.items())},
        "shots_per_instance": inst_set.shots_per_instance,
        "instances": [{"k": i.k, "sites": [list(p) for p in i.pattern]}
                      for i in inst_set.instances],
    })


def instances_from_json(text: str) -> tuple[InstanceSet, InstancePlan]:
    obj = json.loads(text)
    plan = plan_instances(obj["n_loc"], obj["rp"], obj["n_total"], obj["min_frac"])
    insts = tuple(Instance(e["k"], tuple((s, l) for s, l in e["sites"]))
                  for e in obj["instances"])
    return InstanceSet(insts, obj["shots_per_instance"]), plan


def estimate_from_csv(path, inst_set: InstanceSet, plan: InstancePlan,
                      records, value_fn) -> tuple[float, float]:
    """Estimate from a sim-engine shot CSV (columns instance_id, shot_id,
    accepted, record bits in `records` order)."""
    s = inst_set.shots_per_instance
    table = np.full((len(inst_set.instances), s), np.nan)
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if header[:3] != ["instance_id", "shot_id", "accepted"]:
            raise EstimatorError("unexpected CSV header")
        for row in rd:
            inst, shot = int(row[0]), int(row[1])
            bits = tuple(int(b) for b in row[3:])
            table[inst, shot] = value_fn(bits)
    if np.isnan(table).any():
        raise IncompleteDataError("CSV is missing shots")
    return estimate_expectation(inst_set, plan, table)
