from dataclasses import dataclass, replace

EPS_GEOM = 1e-10
EPS_FLAT = 1e-7
EPS_HEMI = 1e-9
EPS_BELT = 1e-6
EPS_EVENT = 1e-9
EPS_STRAIGHT = 1e-8
LENGTH_TOL = 1e-9
MONOTONE_SLACK = 1e-7


@dataclass(frozen=True)
class Tolerances:
    geom: float = EPS_GEOM
    flat: float = EPS_FLAT
    hemi: float = EPS_HEMI
    belt: float = EPS_BELT
    event: float = EPS_EVENT
    straight: float = EPS_STRAIGHT
    length: float = LENGTH_TOL
    # integrator
    h_init: float = 1e-2
    h_max: float = 1e-2
    h_min: float = 1e-8
    # per-step decrease allowed for strut distances; well inside MONOTONE_SLACK
    step_slack: float = 1e-10
    # |turning angle| below which a joint is treated as straight and frozen
    freeze: float = EPS_STRAIGHT
    max_steps_per_phase: int = 200_000

    @classmethod
    def profile(cls, name: str) -> "Tolerances":
        if name == "default":
            return cls()
        if name == "strict":
            return replace(cls(), h_init=5e-3, h_max=5e-3, event=1e-10, step_slack=1e-12)
        raise ValueError(f"unknown tolerance profile {name!r}")


DEFAULT = Tolerances()
