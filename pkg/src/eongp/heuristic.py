"""Two-stage allocation driver: route, then assign by relax-and-round.

Stage 1 splits traffic into transponder-sized requests, routes them and
derives the processing order.  Stage 2 solves the continuous relaxation of
the selected assignment formulation, then repeatedly pins spectral
efficiencies to modulation-table values: the acceptance window starts at
zero width and grows by the configured precision until at least one
relaxed efficiency lies within it of a table value; every such request is
pinned in the same round (ties resolve to the smaller table value because
candidates are scanned in ascending order) and the shrunken program is
re-solved with the pinned values substituted.  Each round pins at least
one request, so the loop runs at most once per request.  The closing
solve, with every efficiency pinned, yields the continuous powers,
centers, margins, spacings and spectrum edge.

Rounding failures are not repaired: if any re-solve comes back infeasible
the run aborts with a stage-tagged error carrying the partial trace.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import gp, psa
from .model import (
    InstanceError, ModulationTable, NetworkInstance, PhysicsConstants,
    ScenarioConfig, partition_traffic, select_requests,
)
from .routing import RoutingSolution, solve_routing


class HeuristicError(RuntimeError):
    """Assignment aborted; `stage` names the solve that failed.

    `status` carries the solver verdict so callers can tell a genuinely
    infeasible program from a numerical breakdown.
    """

    def __init__(self, message: str, stage: str, trace=None, status=None):
        super().__init__(message)
        self.stage = stage
        self.trace = trace
        self.status = status


@dataclass(frozen=True)
class FixRecord:
    """One efficiency pinned to a table value."""
    request: int
    relaxed: float
    fixed: float
    width: float


@dataclass(frozen=True)
class RoundingRound:
    """Objective of the solve opening the round plus the fixes it led to."""
    objective: float
    fixes: tuple[FixRecord, ...]


@dataclass(frozen=True)
class HeuristicTrace:
    method: str
    formulation: int
    rounds: tuple[RoundingRound, ...]
    relaxed_objective: float
    final_objective: float

    @property
    def iterations(self) -> int:
        return len(self.rounds)


def _pick_fixes(solution_vars, unfixed, candidates, step: float):
    """Grow the window until at least one request snaps to a table value."""
    width = 0.0
    while True:
        batch = []
        for q in unfixed:
            relaxed = solution_vars[psa.c_var(q)]
            for value in candidates:
                if abs(relaxed - value) <= width + 1e-12:
                    batch.append(FixRecord(q, relaxed, value, width))
                    break
        if batch:
            return batch
        width = round(width + step, 12)


def assign(routing: RoutingSolution, physics: PhysicsConstants,
           scenario: ScenarioConfig,
           modulations: ModulationTable | None = None,
           formulation: int | None = None
           ) -> tuple[psa.Allocation, HeuristicTrace]:
    """Stage 2: relax, iteratively round efficiencies, re-solve."""
    modulations = ModulationTable() if modulations is None else modulations
    formulation = scenario.formulation if formulation is None else formulation
    candidates = [eff for eff, _ in modulations.entries]

    program = psa.build_program(routing, physics, scenario, modulations,
                                formulation)
    start = psa.warm_start(routing, physics, scenario, modulations,
                           formulation)
    tols = dict(gap_tol=scenario.gap_tol, feas_tol=scenario.feas_tol,
                max_iterations=scenario.max_iterations)

    def solve_or_abort(prog, x0, stage, trace):
        sol = gp.solve(prog, x0, **tols)
        if sol.status != "optimal":
            raise HeuristicError(
                f"assignment solve failed ({sol.status}) at {stage}",
                stage, trace, status=sol.status)
        return sol

    solution = solve_or_abort(program, start, "relaxation", None)
    relaxed_objective = solution.objective

    unfixed = list(routing.order)
    fixed: dict[int, float] = {}
    rounds: list[RoundingRound] = []
    while unfixed:
        batch = _pick_fixes(solution.variables, unfixed, candidates,
                            physics.round_step)
        rounds.append(RoundingRound(solution.objective, tuple(batch)))
        for rec in batch:
            program = gp.fix_variable(program, psa.c_var(rec.request),
                                      rec.fixed)
            fixed[rec.request] = rec.fixed
            unfixed.remove(rec.request)
        start = {name: solution.variables[name] for name in program.variables}
        partial = HeuristicTrace(routing.method, formulation, tuple(rounds),
                                 relaxed_objective, float("nan"))
        solution = solve_or_abort(program, start,
                                  f"round {len(rounds)}", partial)

    full = dict(solution.variables)
    for q, value in fixed.items():
        full[psa.c_var(q)] = value
    allocation = psa.extract(full, routing, solution.objective)
    trace = HeuristicTrace(routing.method, formulation, tuple(rounds),
                           relaxed_objective, solution.objective)
    return allocation, trace


def run(instance: NetworkInstance, scenario: ScenarioConfig | None = None
        ) -> tuple[RoutingSolution, psa.Allocation, HeuristicTrace]:
    """Full pipeline: partition traffic, route, order, assign."""
    scenario = instance.scenario if scenario is None else scenario
    requests = partition_traffic(instance.demands,
                                 instance.physics.capacity_bps)
    if scenario.num_requests is not None:
        requests = select_requests(requests, scenario.num_requests,
                                   scenario.seed)
    if not requests:
        raise InstanceError("no requests to allocate")
    routing = solve_routing(instance.topology, requests, scenario.rto_method,
                            span_km=instance.physics.span_km,
                            seed=scenario.seed)
    allocation, trace = assign(routing, instance.physics, scenario,
                               instance.modulations)
    return routing, allocation, trace
