"""Flow configuration: energy, metric, stabilization, constraints, SAV shifts, Newton settings."""

from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import InvalidOverride

ENERGY_KINDS = ("length", "helfrich")
NORMAL_METRICS = ("l2", "hminus1")
NORMAL_STABILIZERS = ("laplacian", "biharmonic", "hybrid")
MESH_WEIGHTS = ("uniform", "lagrangian")
CONSTRAINT_KINDS = ("area", "length")


@dataclass(frozen=True)
class FlowConfig:
    """Everything that defines one flow apart from the initial curve.

    The stabilizer kinds select which coefficients act: `laplacian` uses
    beta_nu2, `biharmonic` uses beta_nu4, `hybrid` uses both.  beta_tau
    always scales the tangential Laplacian stabilizer.
    """

    dt: float
    energy: str = "length"
    c0: float = 0.0
    normal_metric: str = "l2"
    normal_stabilizer: str = "laplacian"
    beta_nu2: float = 0.0
    beta_nu4: float = 0.0
    beta_tau: float = 0.0
    mesh_weight: str = "uniform"
    constraints: tuple = ()
    c_g: float = 1.0
    c_m: float = 1.0
    newton_tol: float = 1e-12
    newton_max_iter: int = 20
    warm_start: bool = False

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        self.validate()

    def validate(self):
        if self.energy not in ENERGY_KINDS:
            raise InvalidOverride(f"unknown energy kind {self.energy!r}")
        if self.normal_metric not in NORMAL_METRICS:
            raise InvalidOverride(f"unknown normal metric {self.normal_metric!r}")
        if self.normal_stabilizer not in NORMAL_STABILIZERS:
            raise InvalidOverride(f"unknown normal stabilizer {self.normal_stabilizer!r}")
        if self.mesh_weight not in MESH_WEIGHTS:
            raise InvalidOverride(f"unknown mesh weight {self.mesh_weight!r}")
        for name in self.constraints:
            if name not in CONSTRAINT_KINDS:
                raise InvalidOverride(f"unknown constraint {name!r}")
        if len(set(self.constraints)) != len(self.constraints):
            raise InvalidOverride("duplicate constraint")
        if self.normal_metric == "hminus1" and "area" in self.constraints:
            raise InvalidOverride(
                "the area constraint cannot be combined with the hminus1 metric: "
                "its gradient acts on the excluded constant mode"
            )
        if min(self.beta_nu2, self.beta_nu4, self.beta_tau) < 0.0:
            raise InvalidOverride("stabilization coefficients must be nonnegative")
        if not self.dt > 0.0:
            raise InvalidOverride("dt must be positive")
        if not (self.c_g > 0.0 and self.c_m > 0.0):
            raise InvalidOverride("SAV shifts c_g and c_m must be positive")
        if not self.newton_tol > 0.0:
            raise InvalidOverride("newton_tol must be positive")
        if self.newton_max_iter < 1:
            raise InvalidOverride("newton_max_iter must be at least 1")

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["constraints"] = list(self.constraints)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "FlowConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidOverride(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    def replace(self, **changes) -> "FlowConfig":
        data = self.to_dict()
        data.update(changes)
        return FlowConfig.from_dict(data)
