"""Run all six assignment formulations on one instance and compare.

Odd formulations use the linear interference kernel, even ones add the
cubic correction.  1/2 pack channels at the guard-band pitch, 3/4 fix the
channel order first, 5/6 make the inter-channel spacing a variable.
"""

import statistics
import time
from importlib import resources

from eongp import heuristic, validate
from eongp.model import ScenarioConfig, load_instance
from eongp.psa import formulation_size

DATA = resources.files("eongp") / "data"


def main():
    instance = load_instance(str(DATA / "cost239_topology.txt"),
                             str(DATA / "cost239_traffic.txt"))

    print("form   vars  cons   objective      model err   edge (GHz)  time")
    for formulation in range(1, 7):
        scenario = ScenarioConfig(num_requests=12, seed=5,
                                  formulation=formulation)
        started = time.perf_counter()
        routing, allocation, trace = heuristic.run(instance, scenario)
        elapsed = time.perf_counter() - started
        report = validate.validate(allocation, routing, instance, scenario)
        q, l = len(routing.requests), len(instance.topology.links)
        nv, nc = formulation_size(f"gpsa{formulation}", q, l)
        err = statistics.fmean(report.model_error)
        print(f"   {formulation}   {nv:5d} {nc:5d}   {allocation.objective:.6g}"
              f"   {err:9.2e}   {allocation.spectrum_edge_hz / 1e9:9.2f}"
              f"   {elapsed:4.1f}s")

    print("\nthe cubic-kernel variants (2, 4, 6) track the exact noise model "
          "more closely; the spacing-variable pair trades a larger program "
          "for a tighter spectrum")


if __name__ == "__main__":
    main()
