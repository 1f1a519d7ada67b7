"""Zero-noise extrapolation on error-corrected circuits, at desk scale.

Subpackages build fault-tolerant circuit fixtures, inject scalable stochastic
Pauli noise, decode syndromes, estimate logical observables through weighted
circuit instances, and extrapolate to the zero-noise limit with bias and
overhead accounting.
"""

from .pauli import PauliTerm, commutes, pauli_mul, weight
from .circuit import Circuit, fault_locations, parse_circuit, serialize_circuit
from .noise import (FaultConfig, NoiseModel, PauliMixture, device_preset,
                    sample_fault_config, scale_model, standard_injection)
from .engine import (ExpectationPolynomial, exact_expectation, estimate_raw,
                     expectation_polynomial, run_shot)

__version__ = "0.1.0"
