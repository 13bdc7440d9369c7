"""Kubo-transformed correlation functions from classical ring-polymer dynamics.

RPMD and normal-mode centroid dynamics for 1-D systems, with closed-form
harmonic references and an exact grid-diagonalization Kubo oracle.
"""

from .dynamics import IntegratorConfig, StabilityError, conserved_energy, propagate, step_normal_mode, step_ring_polymer
from .estimators import (CorrelationSeries, DensityHistogram, block_average, centroid, correlation_ensemble,
                         density_histogram, oscillation_envelope)
from .model import (BEAD, NORMAL_MODE, Custom, DoubleWell, Harmonic, MatchedFrequency, ModelError, Observable,
                    Physical, Polynomial, Quartic, RepresentationError, RingPolymerState, SystemSpec,
                    validate_system)
from .normal_modes import NormalModeBasis, build_basis, from_modes, to_modes
from .oracles import (EigenSolution, GridError, GridSpec, analytic_kubo_q2, analytic_kubo_qq, analytic_nm_ccd_q2,
                      analytic_rpmd_q2, kubo_correlation, solve_schrodinger)
from .potentials import potential_gradient, potential_value
from .sampler import (SamplerConfig, SamplerTuningError, sample_momenta, sample_positions_harmonic,
                      sample_positions_metropolis)

__version__ = "0.1.0"
