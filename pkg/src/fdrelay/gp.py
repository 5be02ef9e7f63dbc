"""A small geometric-program solver.

Problems are posynomial: minimize a posynomial subject to posynomial <= 1
inequalities, monomial == 1 equalities, and positive box bounds per variable.
In log variables y = log x every posynomial becomes log-sum-exp of affine
forms, so the program is convex and a standard barrier method applies:

  * boxes are folded in as one-term posynomial inequalities,
  * monomial equalities are affine in y and eliminated exactly through an
    SVD null-space parameterization y = y_p + N u,
  * a phase-1 program (minimize s with every constraint relaxed by s, which
    just shifts each log-sum-exp) produces a strictly feasible start or a
    certificate of infeasibility,
  * the main path follows t = 1, 10, 100, ... with damped Newton steps until
    the duality-gap bound m/t drops below the tolerance.

brute_force_gp solves the same problems by dense grid search over the box
(practical up to four variables) and is used as an independent check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

BARRIER_MU = 10.0
NEWTON_CAP = 200
FEAS_MARGIN = 1e-9


@dataclass(frozen=True)
class Posynomial:
    """sum_i coeffs[i] * prod_k x_k^exponents[i, k], coeffs > 0."""

    coeffs: np.ndarray
    exponents: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        e = np.atleast_2d(np.asarray(self.exponents, dtype=float))
        if c.ndim != 1 or e.shape[0] != c.size:
            raise ValueError("need one exponent row per coefficient")
        if np.any(c <= 0) or not np.all(np.isfinite(c)) or not np.all(np.isfinite(e)):
            raise ValueError("coefficients must be positive and finite")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "exponents", e)
        c.setflags(write=False)
        e.setflags(write=False)

    @property
    def n_vars(self) -> int:
        return self.exponents.shape[1]

    @property
    def is_monomial(self) -> bool:
        return self.coeffs.size == 1

    def value(self, x) -> float:
        y = np.log(np.asarray(x, dtype=float))
        return float(np.sum(np.exp(self.exponents @ y + np.log(self.coeffs))))


@dataclass(frozen=True)
class GeometricProgram:
    objective: Posynomial
    inequalities: tuple
    equalities: tuple
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        n = self.objective.n_vars
        if lo.shape != (n,) or hi.shape != (n,):
            raise ValueError("bounds must match the variable count")
        if np.any(lo <= 0) or np.any(hi < lo):
            raise ValueError("need 0 < lower <= upper")
        object.__setattr__(self, "inequalities", tuple(self.inequalities))
        object.__setattr__(self, "equalities", tuple(self.equalities))
        for p in self.inequalities + self.equalities:
            if p.n_vars != n:
                raise ValueError("posynomial variable counts disagree")
        for p in self.equalities:
            if not p.is_monomial:
                raise ValueError("equality constraints must be monomials")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        lo.setflags(write=False)
        hi.setflags(write=False)

    @property
    def n_vars(self) -> int:
        return self.objective.n_vars


@dataclass(frozen=True)
class GpResult:
    x: np.ndarray
    value: float
    status: str  # "optimal" | "infeasible" | "max_iter"
    kkt_residual: float
    iterations: int


class _Lse:
    """log-sum-exp of A y + b with value/gradient/Hessian."""

    def __init__(self, a: np.ndarray, b: np.ndarray):
        self.a = a
        self.b = b

    def value(self, y: np.ndarray) -> float:
        z = self.a @ y + self.b
        m = np.max(z)
        return float(m + np.log(np.sum(np.exp(z - m))))

    def value_grad_hess(self, y: np.ndarray):
        z = self.a @ y + self.b
        m = np.max(z)
        w = np.exp(z - m)
        s = np.sum(w)
        p = w / s
        g = self.a.T @ p
        h = (self.a.T * p) @ self.a - np.outer(g, g)
        return float(m + np.log(s)), g, h


def _log_constraints(prog: GeometricProgram):
    """All inequalities (posynomials + box sides) as LSE(A y + b) <= 0."""
    out = []
    for p in prog.inequalities:
        out.append((p.exponents, np.log(p.coeffs)))
    n = prog.n_vars
    eye = np.eye(n)
    for k in range(n):
        out.append((eye[k:k + 1], np.array([-math.log(prog.upper[k])])))
        out.append((-eye[k:k + 1], np.array([math.log(prog.lower[k])])))
    return out


def _eliminate_equalities(prog: GeometricProgram):
    """Particular solution and null-space basis of the log equalities."""
    n = prog.n_vars
    if not prog.equalities:
        return np.zeros(n), np.eye(n), True
    e_rows = np.vstack([p.exponents[0] for p in prog.equalities])
    f = np.array([-math.log(p.coeffs[0]) for p in prog.equalities])
    y_p, *_ = np.linalg.lstsq(e_rows, f, rcond=None)
    if not np.allclose(e_rows @ y_p, f, atol=1e-9):
        return y_p, np.zeros((n, 0)), False  # inconsistent equalities
    _, sv, vt = np.linalg.svd(e_rows)
    rank = int(np.sum(sv > 1e-12 * max(sv[0], 1.0)))
    return y_p, vt[rank:].T, True


def _newton_minimize(lses, t_obj, y0, tol, cap=NEWTON_CAP):
    """Minimize obj(y) + barrier(y) / t over {every lse < 0}; t_obj = (lse, t).

    The 1/t scaling keeps the centering value near the objective scale for
    every barrier stage, so line-search decreases stay resolvable in float64
    even when t is large.
    """
    y = y0.copy()

    def barrier_value(cand):
        total = 0.0
        for lse in lses:
            v = lse.value(cand)
            if v >= 0:
                return math.inf
            total += -math.log(-v)
        return total

    lse0, t = t_obj
    for it in range(cap):
        v0, g, h = lse0.value_grad_hess(y)
        val = v0
        g = g.copy()
        h = h.copy()
        for lse in lses:
            v, gi, hi = lse.value_grad_hess(y)
            if v >= 0:
                raise FloatingPointError("barrier start left the feasible region")
            val += -math.log(-v) / t
            g += (gi / (-v)) / t
            h += (hi / (-v) + np.outer(gi, gi) / (v * v)) / t
        ridge = 0.0
        while True:
            try:
                step = -cho_solve(cho_factor(h + ridge * np.eye(y.size)), g)
                break
            except np.linalg.LinAlgError:
                ridge = max(10.0 * ridge, 1e-12 * max(np.trace(h).real, 1.0))
        decrement = float(-g @ step)
        if decrement / 2.0 <= tol:
            return y, it, decrement / 2.0
        # backtracking: stay strictly inside, then Armijo on the centering value
        alpha = 1.0
        accepted = False
        while alpha > 1e-14:
            cand = y + alpha * step
            cand_val = lse0.value(cand) + barrier_value(cand) / t
            if cand_val <= val - 1e-4 * alpha * decrement:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            return y, it + 1, decrement / 2.0
        y = y + alpha * step
    return y, cap, decrement / 2.0


def _phase_one(constraints, u_dim, u0, tol):
    """Strictly feasible u for all LSE_i(u) < 0, or None if there is none."""
    if u_dim == 0:
        ok = all(_Lse(a, b).value(np.zeros(0)) < 0 for a, b in constraints)
        return np.zeros(0) if ok else None
    lses = [_Lse(a, b) for a, b in constraints]
    if all(lse.value(u0) < -FEAS_MARGIN for lse in lses):
        return u0
    # slack variable s: LSE(A u + b - s) <= 0 is LSE of the extended affine map
    ext = [_Lse(np.hstack([a, -np.ones((a.shape[0], 1))]), b) for a, b in constraints]
    s0 = max(lse.value(u0) for lse in lses) + 1.0
    z = np.concatenate([u0, [s0]])
    obj = _Lse(np.concatenate([np.zeros(u_dim), [1.0]])[None, :], np.zeros(1))
    t = 1.0
    for _ in range(40):
        z, _, _ = _newton_minimize(ext, (obj, t), z, tol)
        if z[-1] <= -1e-7:
            return z[:-1]
        if (len(ext)) / t < 1e-12:
            break
        t *= BARRIER_MU
    return z[:-1] if z[-1] <= -FEAS_MARGIN else None


def solve_gp(prog: GeometricProgram, tol: float = 1e-9) -> GpResult:
    """Barrier solve. status "optimal" comes with kkt_residual <= 10 * tol."""
    y_p, null, consistent = _eliminate_equalities(prog)
    nan = np.full(prog.n_vars, np.nan)
    if not consistent:
        return GpResult(x=nan, value=math.nan, status="infeasible",
                        kkt_residual=math.nan, iterations=0)
    # map every constraint and the objective into the null-space coordinates
    constraints = [(a @ null, b + a @ y_p) for a, b in _log_constraints(prog)]
    obj = _Lse(prog.objective.exponents @ null,
               np.log(prog.objective.coeffs) + prog.objective.exponents @ y_p)
    u_dim = null.shape[1]

    y_mid = 0.5 * (np.log(prog.lower) + np.log(prog.upper))
    u0 = null.T @ (y_mid - y_p)
    u = _phase_one(constraints, u_dim, u0, tol)
    if u is None:
        return GpResult(x=nan, value=math.nan, status="infeasible",
                        kkt_residual=math.nan, iterations=0)
    if u_dim == 0:
        x = np.exp(y_p)
        return GpResult(x=x, value=prog.objective.value(x), status="optimal",
                        kkt_residual=0.0, iterations=0)

    lses = [_Lse(a, b) for a, b in constraints]
    m = len(lses)
    t = 1.0
    total_iters = 0
    stationarity = math.inf
    while True:
        u, its, stationarity = _newton_minimize(lses, (obj, t), u, tol)
        total_iters += its
        if m / t <= tol:
            break
        t *= BARRIER_MU
    x = np.exp(y_p + null @ u)
    # duality gap of the final centering plus its Newton decrement
    kkt = max(stationarity, m / t)
    status = "optimal" if kkt <= 10.0 * tol else "max_iter"
    return GpResult(x=x, value=prog.objective.value(x), status=status,
                    kkt_residual=kkt, iterations=total_iters)


def brute_force_gp(prog: GeometricProgram, points_per_dim: int = 41,
                   eq_band: float = 1e-2) -> GpResult:
    """Dense log-space grid search over the box; independent of solve_gp.

    Inequalities pass at posynomial <= 1 + 1e-9 and equalities within
    |monomial - 1| <= eq_band, so a grid fine enough to land near the
    equality manifold is the caller's responsibility. kkt_residual is NaN
    because no optimality certificate exists for a grid point.
    """
    n = prog.n_vars
    if n > 4:
        raise ValueError("grid search is limited to 4 variables")
    if points_per_dim < 2:
        raise ValueError("need at least 2 points per dimension")
    axes = [np.linspace(math.log(prog.lower[k]), math.log(prog.upper[k]),
                        points_per_dim) for k in range(n)]
    total = points_per_dim**n
    chunk = max(1, int(2e6) // max(1, points_per_dim))
    best_val = math.inf
    best_y = None

    def posy_vals(p: Posynomial, ys: np.ndarray) -> np.ndarray:
        return np.exp(ys @ p.exponents.T + np.log(p.coeffs)).sum(axis=1)

    done = 0
    while done < total:
        count = min(chunk, total - done)
        flat = done + np.arange(count)
        ys = np.empty((count, n))
        rem = flat
        for k in range(n - 1, -1, -1):
            ys[:, k] = axes[k][rem % points_per_dim]
            rem = rem // points_per_dim
        ok = np.ones(count, dtype=bool)
        for p in prog.inequalities:
            ok &= posy_vals(p, ys) <= 1.0 + 1e-9
        for p in prog.equalities:
            ok &= np.abs(posy_vals(p, ys) - 1.0) <= eq_band
        if np.any(ok):
            vals = posy_vals(prog.objective, ys[ok])
            i = int(np.argmin(vals))
            if vals[i] < best_val:
                best_val = float(vals[i])
                best_y = ys[ok][i].copy()
        done += count
    if best_y is None:
        return GpResult(x=np.full(n, np.nan), value=math.nan,
                        status="infeasible", kkt_residual=math.nan, iterations=0)
    return GpResult(x=np.exp(best_y), value=best_val, status="optimal",
                    kkt_residual=math.nan, iterations=total)


def dump_problem(prog: GeometricProgram) -> str:
    """Human-readable listing, mainly for debugging allocation runs."""

    def term(c: float, e: np.ndarray) -> str:
        parts = [f"{c:.6g}"]
        parts += [f"x{k}^{e[k]:.6g}" for k in range(e.size) if e[k] != 0.0]
        return " * ".join(parts)

    def posy(p: Posynomial) -> str:
        return " + ".join(term(c, e) for c, e in zip(p.coeffs, p.exponents))

    lines = ["minimize", f"  {posy(prog.objective)}", "subject to"]
    lines += [f"  {posy(p)} <= 1" for p in prog.inequalities]
    lines += [f"  {posy(p)} == 1" for p in prog.equalities]
    lines.append("bounds")
    lines += [f"  {prog.lower[k]:.6g} <= x{k} <= {prog.upper[k]:.6g}"
              for k in range(prog.n_vars)]
    return "\n".join(lines)
