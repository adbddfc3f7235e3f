"""Geometric programming: posynomial modeling and an interior-point solver.

A monomial is c * prod(x_j^a_j) with c > 0; a posynomial is a sum of
monomials.  A program minimizes a posynomial subject to posynomial <= 1
constraints.  Substituting x = exp(u) turns every posynomial into
log-sum-exp(A u + b), a smooth convex function, and the program into a
standard convex one.  The solver below works on that compiled form with a
primal-dual interior-point method; a phase-1 stage finds a strictly feasible
start or certifies infeasibility.

Contract: a solution with status "optimal" has relative KKT residual at most
1e-6 and every constraint satisfied to within 1e-8 (iterates are kept
strictly feasible, so the latter holds with margin).  Runs are deterministic:
no randomness is used anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgError, cho_factor, cho_solve

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_MAX_ITER = "max-iterations"
STATUS_NUMERICAL = "numerical-failure"


class GpError(Exception):
    """Modeling error: bad coefficient, unknown variable, malformed text."""


@dataclass(frozen=True)
class Monomial:
    """coef * prod(var^exp); exponents are kept sorted and nonzero."""
    coef: float
    exponents: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        if not (self.coef > 0 and math.isfinite(self.coef)):
            raise GpError(f"monomial coefficient must be positive, got {self.coef}")

    @staticmethod
    def make(coef: float, exponents=()) -> "Monomial":
        merged: dict[str, float] = {}
        items = exponents.items() if hasattr(exponents, "items") else exponents
        for var, exp in items:
            merged[var] = merged.get(var, 0.0) + float(exp)
        canon = tuple(sorted((v, e) for v, e in merged.items() if e != 0.0))
        return Monomial(float(coef), canon)

    def value(self, point) -> float:
        return self.coef * math.prod(point[v] ** e for v, e in self.exponents)

    def scaled(self, factor: float) -> "Monomial":
        return Monomial(self.coef * factor, self.exponents)


@dataclass(frozen=True)
class Posynomial:
    terms: tuple[Monomial, ...]

    def __post_init__(self):
        if not self.terms:
            raise GpError("posynomial needs at least one term")

    def value(self, point) -> float:
        return sum(t.value(point) for t in self.terms)

    @property
    def variables(self) -> set[str]:
        return {v for t in self.terms for v, _ in t.exponents}

    def __add__(self, other: "Posynomial") -> "Posynomial":
        return Posynomial(self.terms + other.terms)


@dataclass(frozen=True)
class GpProgram:
    """minimize objective subject to each constraint posynomial <= 1."""
    objective: Posynomial
    constraints: tuple[tuple[str, Posynomial], ...]
    variables: tuple[str, ...]

    def __post_init__(self):
        known = set(self.variables)
        if len(known) != len(self.variables):
            raise GpError("duplicate variable names")
        used = self.objective.variables.union(
            *(p.variables for _, p in self.constraints)) if self.constraints \
            else self.objective.variables
        stray = used - known
        if stray:
            raise GpError(f"undeclared variables {sorted(stray)}")

    def constraint(self, name: str) -> Posynomial:
        for n, p in self.constraints:
            if n == name:
                return p
        raise GpError(f"no constraint named {name!r}")


def assemble(objective: Posynomial, constraints) -> GpProgram:
    """Build a program, inferring variable order from first appearance."""
    seen: dict[str, None] = {}
    for term in objective.terms:
        for v, _ in term.exponents:
            seen.setdefault(v)
    for _, posy in constraints:
        for term in posy.terms:
            for v, _ in term.exponents:
                seen.setdefault(v)
    return GpProgram(objective, tuple(constraints), tuple(seen))


def program_size(program: GpProgram) -> tuple[int, int]:
    """(number of variables, number of constraints) actually instantiated."""
    return len(program.variables), len(program.constraints)


def fix_variable(program: GpProgram, name: str, value: float) -> GpProgram:
    """Substitute a variable by a constant and drop it from the program.

    Constraints that become constant are checked and removed; a constant
    constraint above 1 means the fix is infeasible and raises GpError.
    """
    if name not in program.variables:
        raise GpError(f"unknown variable {name!r}")
    if not value > 0:
        raise GpError(f"fixed value for {name} must be positive")

    def subst(posy: Posynomial) -> Posynomial:
        out = []
        for t in posy.terms:
            factor = 1.0
            kept = []
            for v, e in t.exponents:
                if v == name:
                    factor *= value ** e
                else:
                    kept.append((v, e))
            out.append(Monomial(t.coef * factor, tuple(kept)))
        return Posynomial(tuple(out))

    objective = subst(program.objective)
    constraints = []
    for cname, posy in program.constraints:
        new = subst(posy)
        if new.variables:
            constraints.append((cname, new))
        else:
            const = new.value({})
            if const > 1.0 + 1e-9:
                raise GpError(f"fixing {name}={value:g} violates {cname} "
                              f"({const:.9g} > 1)")
    variables = tuple(v for v in program.variables if v != name)
    return GpProgram(objective, tuple(constraints), variables)


def evaluate(program: GpProgram, point) -> tuple[float, dict[str, float]]:
    """Objective and every constraint value at a positive point."""
    return (program.objective.value(point),
            {n: p.value(point) for n, p in program.constraints})


# --------------------------------------------------------------------------
# text round trip
# --------------------------------------------------------------------------

def _term_text(t: Monomial) -> str:
    parts = [repr(t.coef)] + [f"{v}^{repr(e)}" for v, e in t.exponents]
    return " ".join(parts)


def _parse_term(line: str, lineno: int) -> Monomial:
    parts = line.split()
    try:
        coef = float(parts[0])
        exps = []
        for tok in parts[1:]:
            v, _, e = tok.rpartition("^")
            exps.append((v, float(e)))
        return Monomial.make(coef, exps)
    except (ValueError, IndexError):
        raise GpError(f"line {lineno}: bad term {line!r}") from None


def to_text(program: GpProgram) -> str:
    lines = ["gp 1"]
    lines += [f"var {v}" for v in program.variables]
    lines.append("minimize")
    lines += ["  " + _term_text(t) for t in program.objective.terms]
    for name, posy in program.constraints:
        lines.append(f"st {name}")
        lines += ["  " + _term_text(t) for t in posy.terms]
    return "\n".join(lines) + "\n"


def from_text(text: str) -> GpProgram:
    variables: list[str] = []
    objective: list[Monomial] = []
    constraints: list[tuple[str, list[Monomial]]] = []
    section = None
    lines = text.splitlines()
    if not lines or lines[0].split() != ["gp", "1"]:
        raise GpError("missing 'gp 1' header")
    for lineno, raw in enumerate(lines[1:], 2):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        if head == "var":
            variables.append(rest.strip())
        elif head == "minimize":
            section = objective
        elif head == "st":
            constraints.append((rest.strip(), []))
            section = constraints[-1][1]
        elif section is not None:
            section.append(_parse_term(line, lineno))
        else:
            raise GpError(f"line {lineno}: unexpected {line!r}")
    return GpProgram(Posynomial(tuple(objective)),
                     tuple((n, Posynomial(tuple(ts))) for n, ts in constraints),
                     tuple(variables))


# --------------------------------------------------------------------------
# compiled log-space form
# --------------------------------------------------------------------------

class ConvexForm:
    """log-sum-exp compilation of a program over u = log x."""

    def __init__(self, program: GpProgram):
        self.variables = program.variables
        self.n = len(self.variables)
        col = {v: i for i, v in enumerate(self.variables)}
        self.obj_A, self.obj_b = self._matrix(program.objective.terms, col)
        terms: list[Monomial] = []
        ptr = [0]
        for _, posy in program.constraints:
            terms.extend(posy.terms)
            ptr.append(len(terms))
        self.m = len(program.constraints)
        self.con_A, self.con_b = self._matrix(terms, col)
        self.ptr = np.asarray(ptr)
        self.seg = np.repeat(np.arange(self.m), np.diff(self.ptr))
        total = len(terms)
        self.S = sp.csr_matrix(
            (np.ones(total), (self.seg, np.arange(total))), shape=(self.m, total))

    def _matrix(self, terms, col):
        rows, cols, vals = [], [], []
        b = np.empty(len(terms))
        for r, t in enumerate(terms):
            b[r] = math.log(t.coef)
            for v, e in t.exponents:
                rows.append(r)
                cols.append(col[v])
                vals.append(e)
        A = sp.csr_matrix((vals, (rows, cols)), shape=(len(terms), self.n))
        return A, b

    def objective_eval(self, u):
        """(value, gradient, term weights) of the compiled objective."""
        z = self.obj_A @ u + self.obj_b
        zmax = z.max()
        e = np.exp(z - zmax)
        total = e.sum()
        sigma = e / total
        return zmax + math.log(total), self.obj_A.T @ sigma, sigma

    def constraint_eval(self, u):
        """(values, term weights) of all compiled constraints."""
        if self.m == 0:
            return np.empty(0), np.empty(0)
        z = self.con_A @ u + self.con_b
        zmax = np.maximum.reduceat(z, self.ptr[:-1])
        e = np.exp(z - zmax[self.seg])
        sums = np.add.reduceat(e, self.ptr[:-1])
        return zmax + np.log(sums), e / sums[self.seg]

    def jacobian(self, sigma):
        """Constraint gradients (m x n, sparse) from the term weights."""
        return (self.S @ sp.diags(sigma) @ self.con_A).tocsr()

    def constraint_values(self, u):
        return self.constraint_eval(u)[0]

    def constraint_grad(self, i, u):
        _, sigma = self.constraint_eval(u)
        return np.asarray(self.jacobian(sigma)[i].todense()).ravel()


# --------------------------------------------------------------------------
# solver
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GpSolution:
    status: str
    variables: dict[str, float]
    objective: float
    duals: tuple[float, ...]
    constraint_values: tuple[float, ...]
    iterations: int
    kkt: float
    message: str = ""

    def value(self, name: str) -> float:
        return self.variables[name]


# gap reduction target per iteration; gentler values take more but cheaper
# iterations on programs with weakly determined coordinates
_MU = 3.0
_ARMIJO = 0.01
_BACKTRACK = 0.5
_MAX_STEP = 20.0  # cap on the infinity norm of a Newton step in log space


class _Linear:
    """Linear objective c'u used by the phase-1 problem."""

    def __init__(self, c):
        self.c = np.asarray(c, dtype=float)

    def objective_eval(self, u):
        return float(self.c @ u), self.c, None


def _hessian(form: ConvexForm, obj, u, sigma0, lam, F, sigma, J):
    if isinstance(obj, _Linear):
        H = np.zeros((len(u), len(u)))
    else:
        H = (form.obj_A.T @ sp.diags(sigma0) @ form.obj_A).toarray()
        g0 = form.obj_A.T @ sigma0
        H -= np.outer(g0, g0)
    if form.m:
        w = lam[form.seg] * sigma
        H += (form.con_A.T @ sp.diags(w) @ form.con_A).toarray()
        Jd = J.toarray()
        coefs = lam * (1.0 / (-F) - 1.0)
        H += (Jd * coefs[:, None]).T @ Jd
    return H


def _solve_newton(H, rhs):
    ridge = 0.0
    for _ in range(6):
        try:
            factor = cho_factor(
                H if ridge == 0.0 else H + ridge * np.eye(H.shape[0]),
                lower=True, check_finite=False)
            return cho_solve(factor, rhs, check_finite=False)
        except (LinAlgError, ValueError):
            ridge = 1e-10 if ridge == 0.0 else ridge * 100.0
    return None


def _trust_region_step(H, rhs):
    """Newton step, damped toward the gradient when H is near singular.

    Far from the central path the log-sum-exp Hessian can lose rank and the
    raw Newton step explodes along its null space.  Escalating damping keeps
    the step inside a fixed log-space box while staying a descent direction.
    """
    du = _solve_newton(H, rhs)
    if du is not None and np.isfinite(du).all() and \
            float(np.abs(du).max()) <= _MAX_STEP:
        return du
    nu = max(1e-14, 1e-6 * float(np.abs(rhs).max()) / _MAX_STEP)
    eye = np.eye(H.shape[0])
    for _ in range(40):
        du = _solve_newton(H + nu * eye, rhs)
        if du is not None and np.isfinite(du).all() and \
                float(np.abs(du).max()) <= _MAX_STEP:
            return du
        nu *= 10.0
    return None


def _pdipm(form: ConvexForm, obj, u, gap_tol, feas_tol, max_iter,
           early_stop=None):
    """Primal-dual interior point from a strictly feasible u.

    Returns (u, lam, status, iterations, kkt).  `early_stop(u, F)` may end the
    run as soon as the phase-1 goal is reached.
    """
    m = form.m
    F, sigma = form.constraint_eval(u)
    if m and F.max() >= 0:
        raise GpError("interior-point start is not strictly feasible")
    lam = -1.0 / F if m else np.empty(0)
    kkt = math.inf
    resets = 2
    for it in range(1, max_iter + 1):
        F0, g0, sigma0 = obj.objective_eval(u)
        J = form.jacobian(sigma) if m else None
        jt_lam = J.T @ lam if m else 0.0
        r_dual = g0 + jt_lam
        eta = float(-(F @ lam)) if m else 0.0
        scale = max(1.0, float(np.abs(g0).max()),
                    float(np.abs(jt_lam).max()) if m else 0.0)
        dual_rel = float(np.abs(r_dual).max()) / scale
        gap_rel = eta / max(1.0, abs(F0))
        kkt = max(dual_rel, gap_rel)
        if early_stop is not None and early_stop(u, F):
            return u, lam, STATUS_OPTIMAL, it, kkt
        if dual_rel <= max(feas_tol, 1e-12) and gap_rel <= max(gap_tol, 1e-12):
            return u, lam, STATUS_OPTIMAL, it, kkt
        if m:
            t = _MU * m / eta
            rhs = -g0 - (J.T @ (1.0 / (t * (-F))))
            H = _hessian(form, obj, u, sigma0, lam, F, sigma, J)
        else:
            rhs = -g0
            H = _hessian(form, obj, u, sigma0, lam, F, sigma, None)
        du = _trust_region_step(H, rhs)
        if du is None:
            return u, lam, STATUS_NUMERICAL, it, kkt
        if m:
            dlam = -lam - 1.0 / (t * F) - (lam / F) * (J @ du)
            step = 1.0
            neg = dlam < 0
            if neg.any():
                step = min(1.0, 0.99 * float((-lam[neg] / dlam[neg]).min()))
        else:
            dlam = np.empty(0)
            step = 1.0

        def residual_norm(uu, ll):
            Fn, sig = form.constraint_eval(uu)
            if m and Fn.max() >= 0:
                return math.inf, Fn, sig
            F0n, g0n, _ = obj.objective_eval(uu)
            Jn = form.jacobian(sig) if m else None
            rd = g0n + (Jn.T @ ll if m else 0.0)
            rc = (-ll * Fn - 1.0 / t) if m else np.empty(0)
            return float(np.sqrt(np.sum(rd ** 2) + np.sum(rc ** 2))), Fn, sig

        r_cent = (-lam * F - 1.0 / t) if m else np.empty(0)
        base = float(np.sqrt(np.sum(r_dual ** 2) + np.sum(r_cent ** 2)))
        accepted = False
        while step > 1e-13:
            trial_u = u + step * du
            trial_lam = lam + step * dlam
            norm, Fn, sign = residual_norm(trial_u, trial_lam)
            if norm <= (1.0 - _ARMIJO * step) * base and norm < base:
                u, lam, F, sigma = trial_u, trial_lam, Fn, sign
                accepted = True
                break
            step *= _BACKTRACK
        if not accepted:
            # stalled: residual cannot be reduced further in this direction
            if kkt <= 1e-6:
                return u, lam, STATUS_OPTIMAL, it, kkt
            if m and resets:
                # runaway duals can poison the search direction; re-center
                # them on the current barrier and try again
                resets -= 1
                lam = -1.0 / F
                continue
            return u, lam, STATUS_NUMERICAL, it, kkt
        if not np.isfinite(u).all():
            return u, lam, STATUS_NUMERICAL, it, kkt
    return u, lam, STATUS_MAX_ITER, max_iter, kkt


class _Phase1Form(ConvexForm):
    """Constraints F_i(u) - s <= 0 over the extended point (u, s)."""

    def __init__(self, base: ConvexForm):
        self.base = base
        self.n = base.n + 1
        self.m = base.m
        self.ptr = base.ptr
        self.seg = base.seg
        self.S = base.S
        extra = sp.csr_matrix(
            (-np.ones(base.con_A.shape[0]),
             (np.arange(base.con_A.shape[0]), np.zeros(base.con_A.shape[0]))),
            shape=(base.con_A.shape[0], 1))
        self.con_A = sp.hstack([base.con_A, extra]).tocsr()
        self.con_b = base.con_b


def _solve_phase1(form: ConvexForm, u0, feas_tol, max_iter):
    """Find a strictly feasible point or certify infeasibility."""
    F, _ = form.constraint_eval(u0)
    if F.max() < -1e-9:
        return u0, STATUS_OPTIMAL, 0
    ext = _Phase1Form(form)
    u = np.append(u0, F.max() + 1.0)
    obj = _Linear(np.append(np.zeros(form.n), 1.0))

    def reached(uu, Fext):
        # constraint values of the original program are F_ext + s
        return float((Fext + uu[-1]).max()) <= -1e-6

    u, _, status, iters, _ = _pdipm(ext, obj, u, gap_tol=1e-9,
                                    feas_tol=feas_tol, max_iter=max_iter,
                                    early_stop=reached)
    F, _ = form.constraint_eval(u[:-1])
    if float(F.max()) <= -1e-6:
        return u[:-1], STATUS_OPTIMAL, iters
    if status == STATUS_OPTIMAL:
        # converged with nonnegative slack: no strictly feasible point
        return u[:-1], STATUS_INFEASIBLE, iters
    return u[:-1], status, iters


def solve(program: GpProgram, x0=None, *, gap_tol: float = 1e-8,
          feas_tol: float = 1e-8, max_iterations: int = 200) -> GpSolution:
    """Solve a geometric program.

    x0 maps variable names to positive starting values; missing names start
    at 1.  A strictly feasible start skips phase 1.
    """
    form = ConvexForm(program)
    u0 = np.zeros(form.n)
    if x0:
        for i, v in enumerate(form.variables):
            if v in x0:
                if not x0[v] > 0:
                    raise GpError(f"start value for {v} must be positive")
                u0[i] = math.log(x0[v])

    total_iters = 0
    if form.m:
        u0, p1_status, p1_iters = _solve_phase1(form, u0, feas_tol,
                                                max_iterations)
        total_iters += p1_iters
        if p1_status == STATUS_INFEASIBLE:
            return GpSolution(STATUS_INFEASIBLE, {}, math.inf, (), (),
                              total_iters, math.inf,
                              "phase 1 found no strictly feasible point")
        if p1_status != STATUS_OPTIMAL:
            return GpSolution(p1_status, {}, math.inf, (), (), total_iters,
                              math.inf, "phase 1 did not converge")

    u, lam, status, iters, kkt = _pdipm(form, form, u0, gap_tol, feas_tol,
                                        max_iterations)
    total_iters += iters
    x = {v: math.exp(u[i]) if u[i] < 709.0 else math.inf
         for i, v in enumerate(form.variables)}
    objective, con_vals = evaluate(program, x)
    return GpSolution(status, x, objective, tuple(lam),
                      tuple(con_vals.values()), total_iters, kkt)
