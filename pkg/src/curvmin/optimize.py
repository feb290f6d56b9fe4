"""Area-constrained normal gradient flow with a p-continuation ladder.

Each stage minimizes the energy at fixed (p, eps) by stepping vertices
along the optimality density G - lambda H in the normal direction, with
Armijo backtracking on the energy evaluated after projecting back onto the
area constraint by uniform rescaling.  Stages hand their mesh to the next
(p, eps) pair warm-started, with eps shrinking as p grows, so one ladder
realizes both regularization limits.

Termination of a stage is one of:

* ``grad_tol``  - the nondimensional flow speed dropped below tolerance;
* ``stalled``   - the line search found no admissible decrease, i.e. the
  mesh is stationary for the discrete energy at this resolution;
* ``max_iters`` - iteration budget exhausted while still descending.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse

from .diffgeo import surface_fields
from .energy import EnergyParams, low_energy_check, total_energy
from .errors import MeshError
from .mesh import TriMesh, area_centroid, rescale_to_area, validate
from .verifier import ELParts, ELReport, el_parts, three_value_report

DEFAULT_P_LIST = (2.0, 4.0, 8.0, 16.0, 32.0, 64.0)


@dataclass(frozen=True)
class Schedule:
    """Continuation ladder and line-search knobs.

    ``epsilon_for(p)`` is ``eps_coeff / p**eps_power``; the default keeps the
    regularization subdominant to the curvature term at every stage.  The
    initial step is resolved at run time to 1e-3 * sqrt(A / 4 pi) unless set.
    """

    p_list: tuple = DEFAULT_P_LIST
    eps_coeff: float = 1e-2
    eps_power: float = 2.0
    max_iters_per_stage: int = 2000
    step_init: float | None = None
    grad_tol: float = 1e-4
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    max_halvings: int = 40
    tangential_smoothing: bool = False

    def __post_init__(self):
        ps = tuple(float(p) for p in self.p_list)
        if not ps:
            raise ValueError("p_list must not be empty")
        if ps[0] < 2.0:
            raise ValueError(f"p_list must start at >= 2, got {ps[0]}")
        if any(b <= a for a, b in zip(ps, ps[1:])):
            raise ValueError(f"p_list must be strictly increasing: {ps}")
        if self.eps_coeff <= 0.0:
            raise ValueError("eps_coeff must be positive")
        if not 0.0 < self.backtrack < 1.0:
            raise ValueError("backtrack factor must be in (0, 1)")
        object.__setattr__(self, "p_list", ps)

    def epsilon_for(self, p: float) -> float:
        return self.eps_coeff / p ** self.eps_power

    def resolved_step_init(self, target_area: float) -> float:
        if self.step_init is not None:
            return self.step_init
        return 1e-3 * math.sqrt(target_area / (4.0 * math.pi))


def el_density(mesh: TriMesh, params: EnergyParams):
    """The lambda-free optimality density G and the coefficient field w."""
    parts = el_parts(mesh, params)
    return parts.G, parts.w


def lambda_estimate(mesh: TriMesh, params: EnergyParams) -> float:
    """Area multiplier of the constrained problem on this mesh."""
    return el_parts(mesh, params).lam


@dataclass
class OptState:
    """One stage's mutable bookkeeping; meshes themselves stay immutable."""

    mesh: TriMesh
    params: EnergyParams
    schedule: Schedule
    stage: int
    iteration: int = 0
    step_size: float = 0.0
    energy: float = math.nan
    parts: ELParts | None = None
    grad_metric: float = math.nan
    energy_history: list = field(default_factory=list)
    lambda_history: list = field(default_factory=list)
    grad_history: list = field(default_factory=list)
    termination: str | None = None


def _prepare(state: OptState) -> None:
    if state.parts is None:
        state.parts = el_parts(state.mesh, state.params)
        fields = state.parts.fields
        phi = state.parts.G - state.parts.lam * fields.H
        speed = math.sqrt(float(np.sum(phi * phi * fields.measure)))
        denom = state.parts.h * math.sqrt(state.params.target_area)
        state.grad_metric = speed / denom
        if math.isnan(state.energy):
            state.energy = total_energy(state.mesh, state.params,
                                        state.parts.fields)


def flow_step(state: OptState) -> OptState:
    """One descent iteration; returns the updated state.

    The trial mesh is rescaled to the target area before the energy is
    compared, so every accepted mesh is exactly feasible.  Acceptance is
    strict (ties back off to the smaller step).
    """
    _prepare(state)
    if state.grad_metric <= state.schedule.grad_tol:
        state.termination = "grad_tol"
        return state

    parts = state.parts
    fields = parts.fields
    phi = parts.G - parts.lam * fields.H
    slope = float(np.sum(phi * phi * fields.measure)) / state.params.target_area
    direction = phi[:, None] * fields.normal

    t = state.step_size
    sched = state.schedule
    for _ in range(sched.max_halvings):
        trial = rescale_to_area(
            state.mesh.with_positions(state.mesh.positions + t * direction),
            state.params.target_area)
        try:
            trial_energy = total_energy(trial, state.params)
        except (MeshError, FloatingPointError):
            t *= sched.backtrack
            continue
        if trial_energy < state.energy - sched.armijo_c * t * slope:
            state.mesh = trial
            state.energy = trial_energy
            state.parts = None
            state.iteration += 1
            state.step_size = min(t / sched.backtrack, state.step_size * 8.0)
            state.energy_history.append(trial_energy)
            state.lambda_history.append(parts.lam)
            state.grad_history.append(state.grad_metric)
            return state
        t *= sched.backtrack
    state.termination = "stalled"
    return state


@dataclass(frozen=True)
class StageResult:
    p: float
    epsilon: float
    iterations: int
    reason: str
    final_energy: float
    final_h: float
    final_lambda: float
    low_energy_value: float
    low_energy_ok: bool
    report: ELReport


@dataclass
class RunResult:
    final_mesh: TriMesh
    stages: list
    rows: list
    start_low_energy_ok: bool
    start_low_energy_value: float
    aborted: bool = False
    abort_message: str = ""

    @property
    def converged(self) -> bool:
        """True when every scheduled stage completed its minimization.

        Hitting the per-stage iteration cap still counts: the ladder ran to
        its end and produced a final report.  A final-stage line-search
        stall does not, and is surfaced as its own exit code by the CLI.
        """
        if self.aborted or not self.stages:
            return False
        return self.stages[-1].reason in ("grad_tol", "max_iters")


def _uniform_adjacency(mesh: TriMesh):
    tri = mesh.triangles
    n = mesh.num_vertices
    rows = np.concatenate([tri[:, 0], tri[:, 1], tri[:, 1], tri[:, 2],
                           tri[:, 2], tri[:, 0]])
    cols = np.concatenate([tri[:, 1], tri[:, 0], tri[:, 2], tri[:, 1],
                           tri[:, 0], tri[:, 2]])
    adj = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)),
                            shape=(n, n)).tocsr()
    adj.data[:] = 1.0  # duplicate entries collapse to simple adjacency
    deg = np.asarray(adj.sum(axis=1)).ravel()
    return adj, deg


def tangential_relax(mesh: TriMesh, params: EnergyParams,
                     relax: float = 0.5) -> TriMesh:
    """Move vertices toward their neighborhood average within the tangent
    plane only; reject the result if the energy rises by more than 0.1%.

    Tangential motion is pure reparametrization for the continuum problem,
    so this is a mesh-quality action, not an optimization step.
    """
    energy_before = total_energy(mesh, params)
    fields = surface_fields(mesh)
    adj, deg = _uniform_adjacency(mesh)
    delta = (adj @ mesh.positions) / deg[:, None] - mesh.positions
    normal_part = np.einsum("ij,ij->i", delta, fields.normal)
    tangential = delta - normal_part[:, None] * fields.normal
    smoothed = rescale_to_area(
        mesh.with_positions(mesh.positions + relax * tangential),
        params.target_area)
    try:
        energy_after = total_energy(smoothed, params)
    except (MeshError, FloatingPointError):
        return mesh
    if energy_after > energy_before * 1.001:
        return mesh
    return smoothed


def continuation_run(mesh: TriMesh, params: EnergyParams, schedule: Schedule,
                     iteration_callback=None, stage_callback=None) -> RunResult:
    """Run the whole ladder; per-iteration rows carry
    (stage, iter, energy, h, lambda, grad_norm, linf * sqrt(A)).
    """
    report = validate(mesh)
    if not report.ok:
        raise MeshError(f"initial mesh failed validation:\n{report}")
    mesh = rescale_to_area(mesh, params.target_area)
    start_ok, start_value = _low_energy(mesh, params)

    rows = []
    stages = []
    aborted = False
    abort_message = ""
    step0 = schedule.resolved_step_init(params.target_area)

    for stage_idx, p in enumerate(schedule.p_list):
        stage_params = params.replace(p=p, epsilon=schedule.epsilon_for(p))
        state = OptState(mesh=mesh, params=stage_params, schedule=schedule,
                         stage=stage_idx, step_size=step0)
        try:
            while state.termination is None:
                _prepare(state)
                _, le_value = _low_energy(state.mesh, stage_params,
                                          state.parts.fields)
                rows.append((stage_idx, state.iteration, state.energy,
                             state.parts.h, state.parts.lam,
                             state.grad_metric, le_value))
                if iteration_callback is not None:
                    iteration_callback(stage_idx, state.iteration, state.mesh)
                if state.iteration >= schedule.max_iters_per_stage:
                    state.termination = "max_iters"
                    break
                flow_step(state)
        except (MeshError, FloatingPointError) as exc:
            aborted = True
            abort_message = f"stage {stage_idx} (p={p}): {exc}"

        mesh = state.mesh
        if not aborted and schedule.tangential_smoothing:
            mesh = tangential_relax(mesh, stage_params)

        stage_report = three_value_report(mesh, stage_params)
        le_ok, le_value = _low_energy(mesh, stage_params)
        stages.append(StageResult(
            p=p, epsilon=stage_params.epsilon, iterations=state.iteration,
            reason=state.termination or "aborted",
            final_energy=total_energy(mesh, stage_params),
            final_h=stage_report.h, final_lambda=stage_report.lam,
            low_energy_value=le_value, low_energy_ok=le_ok,
            report=stage_report))
        if stage_callback is not None:
            stage_callback(stage_idx, p, mesh)
        if aborted:
            break

    return RunResult(final_mesh=mesh, stages=stages, rows=rows,
                     start_low_energy_ok=start_ok,
                     start_low_energy_value=start_value,
                     aborted=aborted, abort_message=abort_message)


def _low_energy(mesh, params, fields=None):
    return low_energy_check(mesh, params, fields)


def sphericity(mesh: TriMesh) -> float:
    """std/mean of vertex distances to the area centroid; 0 on a sphere."""
    r = np.linalg.norm(mesh.positions - area_centroid(mesh), axis=1)
    return float(np.std(r) / np.mean(r))
