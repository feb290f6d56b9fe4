"""Run configuration: one TOML document with flat tables for the mesh
source, energy parameters, weight, schedule, and outputs.

Referenced paths must exist at parse time; with a fixed seed, two runs of
the same configuration are bit-identical on one platform.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:                      # Python < 3.11
    import tomli as tomllib

from .distance import ReferenceSurface
from .energy import EnergyParams
from .errors import ConfigError
from .mesh import TriMesh, build_icosphere, load_obj, perturb_radial, \
    rescale_to_area
from .optimize import DEFAULT_P_LIST, Schedule
from .weights import weight_from_dict

_MESH_KEYS = {"source", "subdivisions", "radius", "path", "perturb", "seed"}
_ENERGY_KEYS = {"target_area", "sigma", "reference"}
_SCHEDULE_KEYS = {"p_list", "eps_coeff", "eps_power", "max_iters_per_stage",
                  "step_init", "grad_tol", "armijo_c", "backtrack",
                  "tangential_smoothing"}
_OUTPUT_KEYS = {"directory", "snapshot_every", "figures"}


@dataclass
class RunConfig:
    """Parsed and validated configuration for one continuation run."""

    source: str = "icosphere"
    subdivisions: int = 3
    radius: float = 1.0
    mesh_path: str | None = None
    perturb: float = 0.0
    seed: int = 0

    target_area: float = 4.0 * math.pi
    sigma: float = 0.0
    reference_path: str | None = None

    weight: dict = field(default_factory=lambda: {"kind": "constant",
                                                  "value": 1.0})

    schedule: Schedule = field(default_factory=Schedule)

    output_directory: str = "run_output"
    snapshot_every: int = 0
    figures: bool = True

    def build_weight(self):
        try:
            return weight_from_dict(self.weight)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[weight]: {exc}") from exc

    def build_mesh(self) -> TriMesh:
        if self.source == "icosphere":
            mesh = build_icosphere(self.subdivisions, self.radius)
        else:
            mesh = load_obj(self.mesh_path)
        if self.perturb > 0.0:
            mesh = perturb_radial(mesh, self.perturb, self.seed)
        return rescale_to_area(mesh, self.target_area)

    def build_params(self) -> EnergyParams:
        reference = None
        if self.reference_path is not None:
            reference = ReferenceSurface(load_obj(self.reference_path))
        weight = self.build_weight()
        if weight.needs_penalisation and self.sigma <= 0.0:
            raise ConfigError(
                f"[weight]: kind {self.weight.get('kind')!r} does not grow "
                "in every direction and needs sigma > 0 with a reference")
        try:
            return EnergyParams(p=self.schedule.p_list[0],
                                epsilon=self.schedule.epsilon_for(
                                    self.schedule.p_list[0]),
                                sigma=self.sigma,
                                target_area=self.target_area,
                                weight=weight, reference=reference)
        except ValueError as exc:
            raise ConfigError(f"[energy]: {exc}") from exc

    def to_dict(self) -> dict:
        doc = {
            "mesh": {"source": self.source, "perturb": self.perturb,
                     "seed": self.seed},
            "energy": {"target_area": self.target_area, "sigma": self.sigma},
            "weight": dict(self.weight),
            "schedule": {
                "p_list": list(self.schedule.p_list),
                "eps_coeff": self.schedule.eps_coeff,
                "eps_power": self.schedule.eps_power,
                "max_iters_per_stage": self.schedule.max_iters_per_stage,
                "grad_tol": self.schedule.grad_tol,
                "armijo_c": self.schedule.armijo_c,
                "backtrack": self.schedule.backtrack,
                "tangential_smoothing": self.schedule.tangential_smoothing,
            },
            "output": {"directory": self.output_directory,
                       "snapshot_every": self.snapshot_every,
                       "figures": self.figures},
        }
        if self.source == "icosphere":
            doc["mesh"]["subdivisions"] = self.subdivisions
            doc["mesh"]["radius"] = self.radius
        else:
            doc["mesh"]["path"] = self.mesh_path
        if self.reference_path is not None:
            doc["energy"]["reference"] = self.reference_path
        if self.schedule.step_init is not None:
            doc["schedule"]["step_init"] = self.schedule.step_init
        return doc


def _check_keys(table: dict, allowed: set, name: str):
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"[{name}]: unknown key(s) {sorted(unknown)}")


def load_config(path) -> RunConfig:
    """Parse and validate a TOML run configuration.

    Syntax errors keep tomllib's line/column message; semantic errors name
    the offending table and key.
    """
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    base = os.path.dirname(os.path.abspath(path))

    def resolve(p):
        return p if os.path.isabs(p) else os.path.join(base, p)

    cfg = RunConfig()

    mesh_tab = doc.get("mesh", {})
    _check_keys(mesh_tab, _MESH_KEYS, "mesh")
    cfg.source = mesh_tab.get("source", "icosphere")
    if cfg.source not in ("icosphere", "obj"):
        raise ConfigError(f"[mesh] source must be 'icosphere' or 'obj', "
                          f"got {cfg.source!r}")
    cfg.subdivisions = int(mesh_tab.get("subdivisions", 3))
    cfg.radius = float(mesh_tab.get("radius", 1.0))
    cfg.perturb = float(mesh_tab.get("perturb", 0.0))
    cfg.seed = int(mesh_tab.get("seed", 0))
    if cfg.source == "obj":
        if "path" not in mesh_tab:
            raise ConfigError("[mesh] source 'obj' requires a path")
        cfg.mesh_path = resolve(mesh_tab["path"])
        if not os.path.exists(cfg.mesh_path):
            raise ConfigError(f"[mesh] path does not exist: {cfg.mesh_path}")

    energy_tab = doc.get("energy", {})
    _check_keys(energy_tab, _ENERGY_KEYS, "energy")
    if "target_area" not in energy_tab:
        raise ConfigError("[energy] target_area is required")
    cfg.target_area = float(energy_tab["target_area"])
    cfg.sigma = float(energy_tab.get("sigma", 0.0))
    if "reference" in energy_tab:
        cfg.reference_path = resolve(energy_tab["reference"])
        if not os.path.exists(cfg.reference_path):
            raise ConfigError(
                f"[energy] reference does not exist: {cfg.reference_path}")
    if cfg.sigma > 0.0 and cfg.reference_path is None:
        raise ConfigError("[energy] sigma > 0: reference required")

    weight_tab = doc.get("weight", {"kind": "constant", "value": 1.0})
    cfg.weight = dict(weight_tab)

    sched_tab = doc.get("schedule", {})
    _check_keys(sched_tab, _SCHEDULE_KEYS, "schedule")
    try:
        cfg.schedule = Schedule(
            p_list=tuple(float(p) for p in sched_tab.get("p_list",
                                                         DEFAULT_P_LIST)),
            eps_coeff=float(sched_tab.get("eps_coeff", 1e-2)),
            eps_power=float(sched_tab.get("eps_power", 2.0)),
            max_iters_per_stage=int(sched_tab.get("max_iters_per_stage",
                                                  2000)),
            step_init=(float(sched_tab["step_init"])
                       if "step_init" in sched_tab else None),
            grad_tol=float(sched_tab.get("grad_tol", 1e-4)),
            armijo_c=float(sched_tab.get("armijo_c", 1e-4)),
            backtrack=float(sched_tab.get("backtrack", 0.5)),
            tangential_smoothing=bool(sched_tab.get("tangential_smoothing",
                                                    False)),
        )
    except ValueError as exc:
        raise ConfigError(f"[schedule]: {exc}") from exc

    out_tab = doc.get("output", {})
    _check_keys(out_tab, _OUTPUT_KEYS, "output")
    cfg.output_directory = resolve(out_tab.get("directory", "run_output"))
    cfg.snapshot_every = int(out_tab.get("snapshot_every", 0))
    cfg.figures = bool(out_tab.get("figures", True))

    cfg.build_weight()      # fail early on a malformed weight record
    return cfg
