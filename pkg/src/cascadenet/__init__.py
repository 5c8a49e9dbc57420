"""Cascaded quantum networks: environment coefficients, master equations and a collision-model oracle."""

from .coefficients import CoefficientSet, check_stability, fock_coefficients, gaussian_coefficients
from .collision import CollisionConfig, collide, first_order_drift
from .dynamics import Observable, Trajectory, evolve, expectation, upstream_autonomy_check
from .errors import (CascadeError, InconsistentCoefficients, InvalidDimension, NegativeRate,
                     NetworkValidationError, NotHermitian, PhysicalityViolation,
                     TruncationInsufficient, UnsupportedCoupling)
from .gksl import (CoefficientGenerator, GkslGenerator, assemble_gksl, build_coefficient_generator,
                   kappa_closed_form_mz)
from .network import (BeamSplitter, ChannelSpec, Coupling, NetworkSpec, NodeSpec, PhaseShift, StageMap,
                      load_network, validate)
from .presets import ScenarioPreset, mach_zehnder, three_node

__all__ = [name for name in dir() if not name.startswith("_")]
