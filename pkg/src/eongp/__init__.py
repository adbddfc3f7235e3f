"""Power and spectrum allocation for elastic optical networks.

The package splits the problem the way an operator would: `model` holds the
network/traffic/hardware description, `physics` the fiber noise model,
`routing` the path and ordering stage, `gp` a generic geometric-programming
solver, `psa` the power/spectrum program builders, `heuristic` the two-stage
driver, `validate` the exact-model checks and `cli` the command-line runner.
"""

__version__ = "0.1.0"
