import math

import numpy as np
import pytest

from logical_zne.circuit import (Feedback, Inject, PostSelect, fault_locations,
                                 parse_circuit, serialize_circuit)
from logical_zne.codes import (LogicalStateSpec, build_fig2_example,
                               build_repetition, build_surface_d3,
                               experiment_model, prep_logical_state_circuit,
                               strip_classical_correction, surface_logicals,
                               surface_stabilizers, SURFACE_N_QUBITS)
from logical_zne.decoder import DecodedObservable, build_detector_graph
from logical_zne.engine import (ShotRunner, exact_expectation,
                                exact_expectation_multi)
from logical_zne.noise import (NoiseModel, PauliMixture, standard_injection)
from logical_zne.pauli import PauliTerm, commutes, pauli_mul

IDEAL = NoiseModel.build()


def detectors_quiet(code, shots=1000, model=IDEAL, seed=0):
    runner = ShotRunner(code.circuit, model)
    order = {lab: i for i, lab in enumerate(code.circuit.records)}
    for s in range(shots):
        bits, _ = runner.run(seed + s)
        for det in code.detectors:
            par = 0
            for lab in det.labels:
                par ^= bits[order[lab]]
            if par != det.expected:
                return False
    return True


class TestFig2:
    def test_structure(self):
        code = build_fig2_example(0.0, 0.0, 0.0)
        c = code.circuit
        assert c.n_qubits == 5
        assert len(c.records) == 3
        assert sum(isinstance(o, Feedback) for o in c.ops) == 1
        assert sum(isinstance(o, PostSelect) for o in c.ops) == 1
        assert len(fault_locations(c, "injection_only")) == 3
        assert serialize_circuit(parse_circuit(serialize_circuit(c))) == \
            serialize_circuit(c)

    def test_ideal_identity(self):
        code = build_fig2_example(0.0, 0.0, 0.0)
        val = exact_expectation(code.circuit, IDEAL, code.circuit.observable)
        assert val == pytest.approx(1.0, abs=1e-12)
        unc = strip_classical_correction(code.circuit)
        assert exact_expectation(unc, IDEAL, unc.observable) == pytest.approx(1.0)

    def test_feedback_repairs_deterministic_x(self):
        # A certain X on the first data qubit is detected by syndrome 1 and
        # undone by the feedback, restoring the ideal value exactly.
        theta = -0.4 * math.pi
        code = build_fig2_example(theta, 0.0, 0.0)
        locs = fault_locations(code.circuit, "injection_only")
        fixed = {locs[0]: PauliTerm.single(5, "X", 0)}
        frozen = set(code.injection_sites)
        val = exact_expectation(code.circuit, IDEAL, code.circuit.observable,
                                fixed_faults=fixed, frozen_locations=frozen)
        assert val == pytest.approx(math.cos(theta), abs=1e-12)
        unc = strip_classical_correction(code.circuit)
        raw = exact_expectation(unc, IDEAL, unc.observable,
                                fixed_faults=fixed, frozen_locations=frozen)
        assert raw == pytest.approx(-math.cos(theta), abs=1e-12)

    def test_corrected_declines_slower(self):
        theta = -0.4 * math.pi
        code = build_fig2_example(theta, 0.0, 0.0, p=0.088)
        unc = strip_classical_correction(code.circuit)
        ideal = math.cos(theta)
        last_gap = None
        for r in (1.0, 2.0, 3.0):
            m = experiment_model(code, injection_p=0.088, r=r)
            corr = exact_expectation(code.circuit, m, code.circuit.observable)
            raw = exact_expectation(unc, m, unc.observable)
            assert abs(corr - ideal) < abs(raw - ideal)
            if last_gap is not None:   # both decline monotonically with r
                assert abs(corr - ideal) > last_gap
            last_gap = abs(corr - ideal)


class TestRepetition:
    def test_counts_d3(self):
        code = build_repetition(3, 1)
        assert code.circuit.n_qubits == 5
        assert len(code.injection_sites) == 6
        assert len(code.detectors) == 4
        assert len(code.injection_layers) == code.M + 1

    def test_counts_d7_m4(self):
        code = build_repetition(7, 4)
        assert code.circuit.n_qubits == 13
        assert len(code.injection_sites) == 7 * 5
        assert len(code.detectors) == 5 * 6

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            build_repetition(4, 1)
        with pytest.raises(ValueError):
            build_repetition(3, 5)

    @pytest.mark.parametrize("d,M", [(3, 1), (3, 2), (5, 1), (7, 1)])
    def test_ideal_detectors_and_logical(self, d, M):
        code = build_repetition(d, M)
        assert detectors_quiet(code, shots=200)
        g = build_detector_graph(code, experiment_model(code))
        obs = DecodedObservable(code, g)
        assert exact_expectation(code.circuit, IDEAL, obs) == pytest.approx(1.0)

    def test_fault_tolerance_weight_one_exact(self):
        # Every single injected Pauli leaves the decoded value at +1.
        code = build_repetition(3, 1)
        m = experiment_model(code, injection_p=0.036)
        g = build_detector_graph(code, m)
        obs = DecodedObservable(code, g)
        frozen = set(code.injection_sites)
        for loc in fault_locations(code.circuit, "injection_only"):
            for letter in "XYZ":
                fixed = {loc: PauliTerm.single(5, letter, loc.qubits[0])}
                val = exact_expectation(code.circuit, IDEAL, obs,
                                        fixed_faults=fixed, frozen_locations=frozen)
                assert val == pytest.approx(1.0, abs=1e-12)


class TestSurfacePrep:
    def test_zero_state(self):
        code = build_surface_d3(LogicalStateSpec.zero(), "Z")
        assert code.circuit.n_qubits == 17
        assert detectors_quiet(code, shots=100)
        g = build_detector_graph(code, experiment_model(code))
        obs = DecodedObservable(code, g)
        assert exact_expectation(code.circuit, IDEAL, obs) == pytest.approx(1.0)

    def test_plus_state(self):
        code = build_surface_d3(LogicalStateSpec.plus(), "X")
        assert detectors_quiet(code, shots=100)
        g = build_detector_graph(code, experiment_model(code))
        obs = DecodedObservable(code, g)
        assert exact_expectation(code.circuit, IDEAL, obs) == pytest.approx(1.0)

    def test_plus_state_z_value(self):
        code = build_surface_d3(LogicalStateSpec.plus(), "Z")
        obs = DecodedObservable(code, build_detector_graph(
            code, experiment_model(code)))
        assert exact_expectation(code.circuit, IDEAL, obs) == \
            pytest.approx(0.0, abs=1e-12)

    def test_arbitrary_amplitudes(self):
        spec = LogicalStateSpec(math.cos(math.pi / 6), math.sin(math.pi / 6))
        cz = build_surface_d3(spec, "Z")
        obs_z = DecodedObservable(cz, build_detector_graph(cz, experiment_model(cz)))
        assert exact_expectation(cz.circuit, IDEAL, obs_z) == \
            pytest.approx(0.5, abs=1e-10)
        cx = build_surface_d3(spec, "X")
        obs_x = DecodedObservable(cx, build_detector_graph(cx, experiment_model(cx)))
        assert exact_expectation(cx.circuit, IDEAL, obs_x) == \
            pytest.approx(math.sin(math.pi / 3), abs=1e-10)

    def test_normalization_required(self):
        with pytest.raises(ValueError):
            LogicalStateSpec(0.9, 0.9)

    def test_zero_omits_ghz_relay(self):
        frag_zero = prep_logical_state_circuit(LogicalStateSpec.zero())
        frag_psi = prep_logical_state_circuit(LogicalStateSpec.plus())
        assert len(frag_psi) == len(frag_zero) + 7   # RY + six routed CNOTs


class TestLogicalAlgebra:
    def test_anticommuting_logicals(self):
        zl, xl = surface_logicals()
        assert not commutes(zl, xl)

    def test_logicals_commute_with_stabilizers(self):
        zl, xl = surface_logicals()
        for s in surface_stabilizers():
            assert commutes(zl, s) and commutes(xl, s)

    def test_stabilizers_mutually_commute(self):
        stabs = surface_stabilizers()
        for i, a in enumerate(stabs):
            for b in stabs[i + 1:]:
                assert commutes(a, b)


class TestExport:
    def test_files_roundtrip(self, tmp_path):
        code = build_repetition(3, 1)
        files = code.export(tmp_path)
        text = (tmp_path / files["circuit"]).read_text()
        parsed = parse_circuit(text)
        assert parsed.ops == code.circuit.ops
        assert parsed.n_qubits == code.circuit.n_qubits
        # The text form names the decoder only; logical labels live in the
        # detectors file.
        assert parsed.observable.decoder_id == "mwpm"
        det = (tmp_path / files["detectors"]).read_text()
        assert det.count("DET ") == 4 and "LOGICAL Z = d0" in det
        manifest = (tmp_path / files["manifest"]).read_text()
        assert '"d": 3' in manifest
