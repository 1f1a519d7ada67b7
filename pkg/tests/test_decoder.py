import itertools
import math
import random

import numpy as np
import pytest

from logical_zne.circuit import fault_locations, parse_circuit
from logical_zne.codes import (LogicalStateSpec, build_repetition,
                               build_surface_d3, experiment_model)
from logical_zne.decoder import (DecodedObservable, DecoderError,
                                 DefectCapacityError, DetectorGraph, GraphEdge,
                                 NonCliffordFrameError, build_detector_graph,
                                 build_lookup_d3, decode_lookup_d3, decode_mwpm,
                                 decode_mwpm_detail, mechanism_flips,
                                 propagate_flips, serialize_graph,
                                 verify_distance)
from logical_zne.engine import ShotRunner
from logical_zne.noise import NoiseModel, device_preset, standard_injection
from logical_zne.pauli import PauliTerm


def rep_code(d=3, M=1, p=0.036):
    code = build_repetition(d, M, p)
    model = experiment_model(code, injection_p=p)
    return code, model, build_detector_graph(code, model)


class TestFramePropagation:
    def test_matches_statevector_on_basis_circuit(self):
        code = build_repetition(3, 1)
        c = code.circuit
        runner = ShotRunner(c, NoiseModel.build(),
                            frozen_locations=set(code.injection_sites))
        ref_bits, _ = runner.run(0)
        for loc in fault_locations(c, "injection_only"):
            for letter in "XYZ":
                term = PauliTerm.single(c.n_qubits, letter, loc.qubits[0])
                flips = propagate_flips(c, {loc.index: term})
                bits, _ = runner.run(0, fixed_faults={loc: term})
                for i, lab in enumerate(c.records):
                    assert bits[i] == ref_bits[i] ^ flips[lab], (loc, letter)

    def test_detector_parity_flips_on_rotated_state(self):
        # Individual bits are random for an arbitrary logical state, but the
        # frame still predicts detector and logical parity flips exactly.
        spec = LogicalStateSpec(math.cos(0.4), math.sin(0.4))
        code = build_surface_d3(spec, "Z")
        c = code.circuit
        order = {lab: i for i, lab in enumerate(c.records)}
        runner = ShotRunner(c, NoiseModel.build(),
                            frozen_locations=set(code.injection_sites))
        rng = random.Random(3)
        locs = fault_locations(c, "injection_only")
        for trial in range(10):
            loc = rng.choice(locs)
            letter = rng.choice("XYZ")
            term = PauliTerm.single(17, letter, loc.qubits[0])
            fired, lflip = mechanism_flips(code, {loc.index: term})
            bits, _ = runner.run(100 + trial, fixed_faults={loc: term})
            for det in code.detectors:
                par = 0
                for lab in det.labels:
                    par ^= bits[order[lab]]
                assert (par != det.expected) == (det.det_id in fired)

    def test_non_clifford_guard(self):
        c = parse_circuit("QUBITS 1\nPREP Z 0\nINJECT 0 site=s0\n"
                          "RY 0 theta=0.7\nMEASURE Z 0 -> m\n")
        loc = fault_locations(c)[0]
        with pytest.raises(NonCliffordFrameError):
            propagate_flips(c, {loc.index: PauliTerm.single(1, "X", 0)})
        # Y commutes with RY and passes through.
        flips = propagate_flips(c, {loc.index: PauliTerm.single(1, "Y", 0)})
        assert flips["m"] == 1


class TestGraphBuild:
    def test_d3_path_structure(self):
        code, model, g = rep_code()
        assert set(g.nodes) == {"t1_0", "t1_1", "tf_0", "tf_1"}
        pairs = {(e.a, e.b) for e in g.edges}
        assert ("t1_0", "t1_1") in pairs and ("tf_0", "tf_1") in pairs
        boundary = {e.a for e in g.edges if e.b is None}
        assert boundary == {"t1_0", "t1_1", "tf_0", "tf_1"}
        # Only the edges touching the logical data qubit carry a flip.
        flips = {(e.a, e.b): e.flip for e in g.edges}
        assert flips[("t1_0", None)] == 1 and flips[("tf_0", None)] == 1
        assert flips[("t1_0", "t1_1")] == 0

    def test_middle_qubit_fires_both(self):
        code, model, g = rep_code()
        loc = [l for l in fault_locations(code.circuit, "injection_only")
               if l.site == "r1_d1"][0]
        fired, flip = mechanism_flips(
            code, {loc.index: PauliTerm.single(5, "X", loc.qubits[0])})
        assert fired == frozenset({"t1_0", "t1_1"}) and flip == 0

    def test_surface_d4_x_fires_adjacent_z_detectors(self):
        code = build_surface_d3(LogicalStateSpec.zero(), "Z")
        loc = [l for l in fault_locations(code.circuit, "injection_only")
               if l.site == "i1_d3"][0]
        fired, flip = mechanism_flips(code, {loc.index: PauliTerm.single(17, "X", 3)})
        assert fired == frozenset({"rz0", "rz3"})   # Z(D1D2D4D5) and Z(D4D7)
        assert flip == 1

    def test_ideal_model_empty(self):
        code = build_repetition(3, 1)
        g = build_detector_graph(code, NoiseModel.build())
        assert g.edges == ()

    def test_y_fault_splits_sectors(self):
        code = build_surface_d3(LogicalStateSpec.zero(), "Z")
        model = experiment_model(code, injection_p=0.036)
        g = build_detector_graph(code, model)
        sector = {d.det_id: d.sector for d in code.detectors}
        for e in g.edges:
            ends = {sector[x] for x in (e.a, e.b) if x is not None}
            assert len(ends) == 1   # no edge straddles sectors

    def test_serialization(self):
        _, _, g = rep_code()
        text = serialize_graph(g)
        assert text.count("NODE ") == 4
        assert "EDGE t1_0 BOUNDARY" in text and "flip=1" in text


class TestMwpm:
    def test_empty_syndrome(self):
        _, _, g = rep_code()
        assert decode_mwpm(g, frozenset()) == 0

    def test_d5_weight2_decodes(self):
        code, model, g = rep_code(5)
        locs = {l.site: l for l in fault_locations(code.circuit, "injection_only")}
        faults = {locs["r1_d0"].index: PauliTerm.single(9, "X", 0),
                  locs["r1_d1"].index: PauliTerm.single(9, "X", 2)}
        fired, lflip = mechanism_flips(code, faults)
        assert decode_mwpm(g, fired) == lflip == 1  # decoder flips d0 back

    def test_d3_weight2_fails_as_expected(self):
        code, model, g = rep_code(3)
        locs = {l.site: l for l in fault_locations(code.circuit, "injection_only")}
        faults = {locs["r1_d0"].index: PauliTerm.single(5, "X", 0),
                  locs["r1_d1"].index: PauliTerm.single(5, "X", 2)}
        fired, lflip = mechanism_flips(code, faults)
        # Two of three data qubits flipped: majority vote goes the wrong way.
        assert decode_mwpm(g, fired) != lflip

    def test_determinism(self):
        code, model, g = rep_code(5)
        syn = frozenset({"t1_0", "t1_2", "tf_1"})
        assert decode_mwpm(g, syn) == decode_mwpm(g, syn)

    def test_unknown_detector(self):
        _, _, g = rep_code()
        with pytest.raises(DecoderError):
            decode_mwpm(g, frozenset({"nope"}))

    def test_capacity(self):
        n = 30   # one interacting cluster past the per-cluster cap
        nodes = tuple(f"n{i}" for i in range(n))
        edges = tuple(GraphEdge(f"n{i}", f"n{j}", 1.0, 0)
                      for i in range(n) for j in range(i + 1, n))
        g = DetectorGraph(nodes, edges)
        with pytest.raises(DefectCapacityError):
            decode_mwpm(g, frozenset(nodes))


def brute_force_matching(dists, boundary, k):
    """Minimum weight over all ways to pair defects or send them to boundary."""
    best = math.inf

    def rec(remaining, acc):
        nonlocal best
        if not remaining:
            best = min(best, acc)
            return
        if acc >= best:
            return
        i = remaining[0]
        rest = remaining[1:]
        rec(rest, acc + boundary[i])
        for idx, j in enumerate(rest):
            rec(rest[:idx] + rest[idx + 1:], acc + dists[i][j])

    rec(tuple(range(k)), 0.0)
    return best


class TestMatchingOptimality:
    @pytest.mark.parametrize("seed", range(12))
    def test_random_graphs_match_brute_force(self, seed):
        rng = random.Random(seed)
        n = rng.randint(4, 10)
        nodes = tuple(f"v{i}" for i in range(n))
        edges = []
        for i in range(n):
            edges.append(GraphEdge(nodes[i], None, rng.uniform(0.5, 4.0),
                                   rng.randint(0, 1)))
            for j in range(i + 1, n):
                if rng.random() < 0.6:
                    edges.append(GraphEdge(nodes[i], nodes[j],
                                           rng.uniform(0.2, 3.0), rng.randint(0, 1)))
        g = DetectorGraph(nodes, tuple(edges))
        defects = [nodes[i] for i in range(n) if rng.random() < 0.8]
        if not defects:
            defects = [nodes[0], nodes[1]]
        k = len(defects)
        dists = [[g.shortest(a)[0].get(b, math.inf) for b in defects]
                 for a in defects]
        bnd = [g.shortest(a)[0].get("BOUNDARY", math.inf) for a in defects]
        _, weight = decode_mwpm_detail(g, defects)
        assert weight == pytest.approx(brute_force_matching(dists, bnd, k))


@pytest.fixture(scope="module")
def surface():
    code = build_surface_d3(LogicalStateSpec.zero(), "Z")
    model = experiment_model(code, injection_p=0.036)
    g = build_detector_graph(code, model)
    return code, g, build_lookup_d3(g)


class TestLookup:
    def test_empty(self, surface):
        _, g, table = surface
        assert decode_lookup_d3(frozenset(), table, g) == 0

    def test_matches_mwpm_on_reachable_syndromes(self, surface):
        _, g, table = surface
        assert len(table) > 10
        for syn in table:
            assert decode_lookup_d3(syn, table, g) == decode_mwpm(g, syn)

    def test_single_detector_boundary_match(self, surface):
        _, g, table = surface
        for node in g.nodes:
            syn = frozenset({node})
            if syn in table:
                assert table[syn] == decode_mwpm(g, syn)

    def test_fallback(self, surface):
        _, g, table = surface
        syn = frozenset({"rz0", "rz1", "rz2"})
        got = decode_lookup_d3(syn, {}, g)
        assert got == decode_mwpm(g, syn)
        with pytest.raises(DecoderError):
            decode_lookup_d3(syn, {})


class TestDistance:
    def test_d3_t1(self):
        code, model, g = rep_code(3)
        rpt = verify_distance(code, model, 1, graph=g)
        assert rpt.passed and rpt.patterns_checked == 18

    def test_d5_t2(self):
        code, model, g = rep_code(5)
        rpt = verify_distance(code, model, 2, graph=g)
        assert rpt.passed and rpt.patterns_checked == 30 + 405

    def test_d7_t2(self):
        code, model, g = rep_code(7)
        rpt = verify_distance(code, model, 2, graph=g)
        assert rpt.passed

    def test_d3_t2_reports_failing_weight(self):
        code, model, g = rep_code(3)
        rpt = verify_distance(code, model, 2, graph=g)
        assert not rpt.passed and rpt.min_failing_weight == 2

    def test_surface_t1_both_bases(self):
        for basis, spec in (("Z", LogicalStateSpec.zero()),
                            ("X", LogicalStateSpec.plus())):
            code = build_surface_d3(spec, basis)
            model = experiment_model(code, injection_p=0.036)
            rpt = verify_distance(code, model, 1)
            assert rpt.passed, basis


class TestMonotoneFailure:
    def test_logical_error_rate_nonincreasing_in_d(self):
        rates = {}
        shots = 4000
        for d in (3, 5, 7):
            code = build_repetition(d, 1, 0.036)
            for r in (1.0, 2.0, 3.0):
                model = experiment_model(code, injection_p=0.036, r=r)
                g = build_detector_graph(code, model)
                obs = DecodedObservable(code, g)
                f = obs.compile(code.circuit.records)
                runner = ShotRunner(code.circuit, model)
                bad = 0
                for s in range(shots):
                    bits, _ = runner.run(s)
                    if f(tuple(bits)) < 0:
                        bad += 1
                rates[(d, r)] = bad / shots
        for r in (1.0, 2.0, 3.0):
            assert rates[(3, r)] >= rates[(5, r)] >= rates[(7, r)]
