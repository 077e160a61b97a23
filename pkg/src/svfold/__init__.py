"""Flatten single-vertex origami by straightening spherical chains."""

__version__ = "0.1.0"

from .chain import (
    ChainClass,
    IntrinsicChain,
    SphericalChain,
    betas,
    classify,
    origami_to_chain,
    random_chain,
    self_intersects,
    turning_angles,
)
from .errors import CertificationError, DocumentError, DomainError, InvariantError, StepUnderflowError
from .expander import Event, PinnedSubchain, check_expansive_trace, expansive_velocity, integrate_phase
from .geometry import Arc, GreatCircle, arcs_intersect, circle_crosses_arc, dual, max_inscribed_circle
from .io import ChainDocument, TrajectoryDocument, parse_chain, parse_trajectory
from .measure import crossing_count, estimate_class_measures, verify_measure_inequality
from .planner import PhaseKind, PhaseRecord, Trajectory, choose_moving_side, flatten, phase_bound, verify_trajectory
from .separation import Belt, SeparationResult, find_separation
from .tolerances import DEFAULT, Tolerances
