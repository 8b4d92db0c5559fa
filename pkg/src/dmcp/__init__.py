"""Detuning-modulated composite pulses for robust two-level population transfer."""

__version__ = "0.1.0"

from .dynamics import (CompositeSequence, Pulse, StateVector, Unitary2, compose_sequence,
                       evolve_trace, pi_duration, pulse_propagator, transfer_fidelity)
from .cpt import cpt_residual_oracle, cpt_sum_even, cpt_sum_odd
from .design import (DesignResult, DesignSpec, Order, area_derivative, first_order_coefficients,
                     solve_first_order, solve_second_order)
from .errors import InvalidArgumentError, InvalidGeometryError, NumericError
from .robustness import (FidelityGrid, MonteCarloCurve, ScanRange, extract_cut,
                         monte_carlo_infidelity, scan_2d, scan_area_error, threshold_width)
from .waveguide import (DispersionModel, WaveguideDevice, coupling_from_gap, device_error_map,
                        device_from_sequence, simulate_device)
