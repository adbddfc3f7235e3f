"""Exact-model checking of allocations, plus brute-force oracles.

The assignment programs optimize an approximate noise model.  This module
re-evaluates every allocation under the exact expressions (exact cross-talk
kernel, asinh self-interference) and reports the headroom each request
actually has, the gap between model and exact signal quality, aggregate
resource metrics, and any physical-validity violations.  Violations are
recorded, never raised, so reports on bad allocations are still complete.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

from . import gp, physics as ph, psa
from .model import (
    InstanceError, ModulationTable, NetworkInstance, PhysicsConstants,
    ScenarioConfig,
)
from .routing import RoutingSolution, solve_routing

# relative slop granted to solver-produced allocations when checking hard
# geometry; keeps reports quiet about feasibility-tolerance dust
_REL_TOL = 1e-6


@dataclass(frozen=True)
class Violation:
    kind: str          # "nonoverlap" | "band" | "lower-edge"
    subject: tuple
    amount_hz: float


@dataclass(frozen=True)
class ValidationReport:
    exact_osnr: tuple[float, ...]
    model_osnr: tuple[float, ...]
    required_osnr: tuple[float, ...]   # margin floor times table requirement
    slack: tuple[float, ...]           # exact over required
    model_error: tuple[float, ...]     # |exact - model| / exact
    total_power_w: float
    total_noise_w: float
    mean_rate_per_resource: float      # mean of rate / (power * bandwidth)
    spectrum_edge_hz: float
    span_usage: int
    violations: tuple[Violation, ...]

    @property
    def admissible(self) -> bool:
        return not self.violations


def _channels(allocation: psa.Allocation) -> list[ph.ChannelState]:
    return [ph.ChannelState(p, w, b, c)
            for p, w, b, c in zip(allocation.power_w, allocation.center_hz,
                                  allocation.bandwidth_hz,
                                  allocation.efficiency)]


def _required(eff: float, fit: str, table: ModulationTable) -> float:
    for known, osnr in table.entries:
        if abs(eff - known) <= 1e-9 * max(1.0, known):
            return osnr
    return ph.required_osnr(eff, fit, table)


def validate(allocation: psa.Allocation, routing: RoutingSolution,
             instance: NetworkInstance,
             scenario: ScenarioConfig | None = None) -> ValidationReport:
    """Re-check an allocation under the exact noise model."""
    scenario = instance.scenario if scenario is None else scenario
    n = len(allocation.power_w)
    if n != len(routing.requests):
        raise InstanceError("allocation and routing sizes differ")
    if n == 0:
        return ValidationReport((), (), (), (), (), 0.0, 0.0, math.nan,
                                allocation.spectrum_edge_hz, 0, ())

    physics = instance.physics
    channels = _channels(allocation)
    ctx = ph.NoiseContext(routing.span_counts, routing.shared_spans,
                          instance.derived)
    mode = f"approx{psa.FORMULATION_ORDER[scenario.formulation]}"
    fit = psa.FORMULATION_FIT[scenario.formulation]

    exact, model, required, slack, gap = [], [], [], [], []
    noise = 0.0
    for q in range(n):
        try:
            value = ph.osnr(q, channels, ctx, "exact")
        except ph.ChannelOverlapError:
            value = ph.OsnrValue(math.nan, False, True)
        exact.append(value.value)
        model.append(ph.osnr(q, channels, ctx, mode).value)
        need = scenario.min_margin * _required(allocation.efficiency[q], fit,
                                               instance.modulations)
        required.append(need)
        slack.append(exact[q] / need)
        if math.isfinite(value.value) and value.value > 0:
            gap.append(abs(exact[q] - model[q]) / exact[q])
            noise += allocation.power_w[q] / exact[q]
        else:
            gap.append(math.nan)

    violations = list(_geometry_violations(allocation, routing, physics))
    rate_density = [req.rate_bps / (allocation.power_w[req.id]
                                    * allocation.bandwidth_hz[req.id])
                    for req in routing.requests]
    return ValidationReport(
        tuple(exact), tuple(model), tuple(required), tuple(slack), tuple(gap),
        sum(allocation.power_w), noise,
        sum(rate_density) / n, allocation.spectrum_edge_hz,
        sum(routing.span_counts), tuple(violations))


def _geometry_violations(allocation, routing, physics: PhysicsConstants):
    half = [0.5 * b for b in allocation.bandwidth_hz]
    w = allocation.center_hz
    tol = _REL_TOL * physics.band_hz
    for link, seq in routing.link_order:
        for a, b in zip(seq, seq[1:]):
            gap = (w[b] - half[b]) - (w[a] + half[a])
            if gap < physics.guard_hz - tol:
                yield Violation("nonoverlap", (link, a, b),
                                physics.guard_hz - gap)
    for q in range(len(w)):
        over = w[q] + half[q] - physics.band_hz
        if over > tol:
            yield Violation("band", (q,), over)
        under = half[q] - w[q]
        if under > tol:
            yield Violation("lower-edge", (q,), under)


# ------------------------------------------------------------------ oracles

def brute_force_psa(routing: RoutingSolution, physics: PhysicsConstants,
                    scenario: ScenarioConfig,
                    modulations: ModulationTable | None = None,
                    formulation: int | None = None
                    ) -> tuple[psa.Allocation, dict[int, float]]:
    """Best allocation over every table-value assignment of efficiencies.

    Exhaustive over the integer grid, continuous in everything else: each
    combination is solved as a GP with the efficiencies substituted.  Only
    small request sets are accepted; the grid grows as 6^|Q|.
    """
    modulations = ModulationTable() if modulations is None else modulations
    formulation = scenario.formulation if formulation is None else formulation
    n = len(routing.requests)
    if not 0 < n <= 4:
        raise InstanceError("brute force supports 1..4 requests")
    values = [eff for eff, _ in modulations.entries]

    base = psa.build_program(routing, physics, scenario, modulations,
                             formulation)
    start = psa.warm_start(routing, physics, scenario, modulations,
                           formulation)
    best = None
    for combo in itertools.product(values, repeat=n):
        program = base
        for q, value in zip(range(n), combo):
            program = gp.fix_variable(program, psa.c_var(q), value)
        x0 = {name: start[name] for name in program.variables}
        sol = gp.solve(program, x0, gap_tol=scenario.gap_tol,
                       feas_tol=scenario.feas_tol,
                       max_iterations=scenario.max_iterations)
        if sol.status != "optimal":
            continue
        if best is None or sol.objective < best[0]:
            full = dict(sol.variables)
            for q, value in zip(range(n), combo):
                full[psa.c_var(q)] = value
            best = (sol.objective, full, combo)
    if best is None:
        raise InstanceError("every efficiency combination is infeasible")
    objective, full, combo = best
    allocation = psa.extract(full, routing, objective)
    return allocation, dict(enumerate(combo))


# ----------------------------------------------------------------- harnesses

def sweep_margin(instance: NetworkInstance, margins,
                 scenario: ScenarioConfig | None = None):
    """Run the heuristic per margin floor; returns (margin, alloc, report)."""
    from .heuristic import run

    scenario = instance.scenario if scenario is None else scenario
    series = []
    for margin in margins:
        cfg = replace(scenario, min_margin=float(margin))
        routing, allocation, _ = run(instance, cfg)
        series.append((float(margin), allocation,
                       validate(allocation, routing, instance, cfg)))
    return series


def compare_rto(instance: NetworkInstance, methods=("spr", "scpr", "scprr"),
                scenario: ScenarioConfig | None = None):
    """Run the heuristic per routing method with the first formulation."""
    from .heuristic import run

    scenario = instance.scenario if scenario is None else scenario
    results = []
    for method in methods:
        cfg = replace(scenario, rto_method=method, formulation=1)
        routing, allocation, _ = run(instance, cfg)
        results.append((method, routing, allocation,
                        validate(allocation, routing, instance, cfg)))
    return results
