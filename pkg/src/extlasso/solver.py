"""Solvers for the joint sparse-regression / sparse-corruption program

    min_{beta, e}  (1/2n) ||y - X beta - sqrt(n) e||^2
                   + lambda_beta ||beta||_1 + lambda_e ||e||_1

and for its restriction to fixed supports (closed form).

The default algorithm alternates one full sweep of cyclic coordinate
descent on beta with an exact e-update (the e-subproblem is separable
soft-thresholding).  A proximal-gradient (FISTA) implementation on the
augmented design Z = [X, sqrt(n) I] is kept as a cross-check.

Regularization is driven down a geometric lambda path by default (largest
lambda first, warm starts): a cold start at very small lambda_e lets the
corruption block absorb the entire residual and stalls the alternation,
while warm-started supports contract at a linear rate.  Results are
path-independent at tolerance.

For very small lambdas (noiseless exact-recovery runs) float64 cannot even
represent iterates accurately enough to certify a 1e-9 stationarity
residual: one ulp of a unit-scale coordinate moves the scaled dual by
~2e-16/lambda.  The solver therefore finishes in extended precision
(float80 on x86) when lambdas fall below a safe multiple of the data scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (InputError, NumericError, ProblemInstance,
                    SingularMatrixError, Solution, objective_value)

_MAX_COND = 1e12
#: below lambda_e / (||y||_inf / sqrt(n)) = _LONGDOUBLE_SWITCH the final path
#: levels run in extended precision.
_LONGDOUBLE_SWITCH = 1e-6
_RESIDUAL_REFRESH = 64  # sweeps between from-scratch residual recomputations
_STALL_LIMIT = 50
_STALL_KKT_IMPROVEMENT = 0.999  # progress means beating the best residual by 0.1%
_KINK_GUARD_ULPS = 16.0  # e-updates this close to the threshold count as ties


@dataclass(frozen=True)
class SolverConfig:
    """Termination and algorithm knobs.

    tol_kkt is the target stationarity residual (scaled dual units):
    max over coordinates of |z_i - sgn x_i| on the support and of
    max(|z_i| - 1, 0) off it.  tol_obj is a stall guard on the relative
    per-sweep objective decrease; it only fires when the residual has also
    stopped improving.
    """

    max_iters: int = 50_000
    tol_kkt: float = 1e-9
    tol_obj: float = 1e-12
    algorithm: str = "block-coordinate"  # or "proximal-gradient"
    use_path: bool = True
    path_steps_per_decade: int = 3
    precision: str = "auto"  # auto | float64 | longdouble

    def __post_init__(self):
        if self.max_iters < 1:
            raise InputError("max_iters must be >= 1")
        if self.tol_kkt <= 0 or self.tol_obj <= 0:
            raise InputError("tolerances must be > 0")
        if self.algorithm not in ("block-coordinate", "proximal-gradient"):
            raise InputError(f"unknown algorithm {self.algorithm!r}")
        if self.precision not in ("auto", "float64", "longdouble"):
            raise InputError(f"unknown precision {self.precision!r}")


def soft_threshold(x, t):
    """Soft-thresholding; values exactly at the kink resolve to 0."""
    mag = np.abs(x) - t
    return np.where(mag > 0, np.sign(x) * mag, 0.0 * x)


def _joint_kkt_residual(X, y, beta, e, lam_b, lam_e, r=None):
    """Max stationarity violation of the joint program at (beta, e)."""
    n = X.shape[0]
    rn = np.sqrt(X.dtype.type(n))
    if r is None:
        r = y - X @ beta - rn * e
    zb = (X.T @ r) / (n * lam_b)
    ze = r / (rn * lam_e)
    worst = 0.0
    for z, v in ((zb, beta), (ze, e)):
        on = v != 0
        if np.any(on):
            worst = max(worst, float(np.max(np.abs(z[on] - np.sign(v[on])))))
        if np.any(~on):
            worst = max(worst, max(float(np.max(np.abs(z[~on]))) - 1.0, 0.0))
    return worst


def _bcd(X, y, lam_b, lam_e, beta, e, tol, max_sweeps, tol_obj,
         check_monotone=True):
    """Alternating beta-sweep / e-step loop in the dtype of X.

    Returns (beta, e, sweeps, kkt_residual, converged).
    """
    dt = X.dtype
    n, p = X.shape
    rn = np.sqrt(dt.type(n))
    col_sq = np.einsum("ij,ij->j", X, X)
    nlam_b = dt.type(n * lam_b)
    r = y - X @ beta - rn * e
    inv_n = dt.type(1.0) / dt.type(n)
    # Soft-threshold ties resolve to zero.  The residual is a difference of
    # large quantities, so the kink must be widened by the rounding scale of
    # what was subtracted or 1-ulp noise would activate coordinates that sit
    # exactly at the threshold (e.g. designs collinear with the corruption
    # block).
    abs_X = np.abs(X)
    abs_y = np.abs(y)
    guard_scale = _KINK_GUARD_ULPS * float(np.finfo(dt).eps) / rn

    def objective(rv):
        return float(0.5 * inv_n * (rv @ rv)
                     + lam_b * np.abs(beta).sum() + lam_e * np.abs(e).sum())

    prev_obj = objective(r)
    best_kkt = math.inf
    stall = 0
    converged = False
    kkt = math.inf
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        # beta first: on designs collinear with the corruption block the
        # shared mass then settles on the regression side, matching the
        # tie-to-zero convention for e.
        for j in range(p):
            cj = col_sq[j]
            if cj == 0.0:
                continue
            bj = beta[j]
            rho = X[:, j] @ r + cj * bj
            mag = abs(rho) - nlam_b
            if mag > 0:
                # stay in the working dtype: math.copysign would round
                # extended-precision iterates back to float64
                bj_new = (mag if rho > 0 else -mag) / cj
            else:
                bj_new = dt.type(0.0)
            if bj_new != bj:
                r += X[:, j] * (bj - bj_new)
                beta[j] = bj_new

        # exact e-update: minimizer over e alone is soft((y - X beta)/rn, lam_e)
        u = (r + rn * e) / rn
        guard = guard_scale * (abs_y + abs_X @ np.abs(beta) + rn * np.abs(e))
        mag = np.abs(u) - lam_e
        e_new = np.where(mag > guard, np.sign(u) * mag, dt.type(0.0))
        r += rn * (e - e_new)
        e = e_new

        if sweeps % _RESIDUAL_REFRESH == 0:
            r = y - X @ beta - rn * e

        obj = objective(r)
        if not math.isfinite(obj):
            raise NumericError("non-finite objective during solve")
        if check_monotone and obj > prev_obj + 1e-12 * max(1.0, abs(prev_obj)):
            raise NumericError(
                f"objective increased by {obj - prev_obj:.3e} in sweep {sweeps}"
            )

        kkt = _joint_kkt_residual(X, y, beta, e, lam_b, lam_e, r=r)
        if kkt <= tol:
            # re-verify against a freshly computed residual
            r = y - X @ beta - rn * e
            kkt = _joint_kkt_residual(X, y, beta, e, lam_b, lam_e, r=r)
            if kkt <= tol:
                converged = True
                break

        if kkt < _STALL_KKT_IMPROVEMENT * best_kkt:
            best_kkt = kkt
            stall = 0
        elif prev_obj - obj <= tol_obj * max(1.0, abs(obj)):
            stall += 1
            if stall >= _STALL_LIMIT:
                break
        prev_obj = obj
    return beta, e, sweeps, kkt, converged


def _lambda_levels(lmax_b, lmax_e, lam_b, lam_e, per_decade):
    """Geometric schedule from (lmax) down to the target lambdas."""
    decades = max(math.log10(max(lmax_b / lam_b, 1.0)),
                  math.log10(max(lmax_e / lam_e, 1.0)))
    steps = int(math.ceil(decades * per_decade))
    if steps <= 0:
        return [(lam_b, lam_e)]
    levels = []
    for t in range(1, steps + 1):
        frac = t / steps
        lb = lam_b * (max(lmax_b / lam_b, 1.0)) ** (1.0 - frac)
        le = lam_e * (max(lmax_e / lam_e, 1.0)) ** (1.0 - frac)
        levels.append((lb, le))
    levels[-1] = (lam_b, lam_e)
    return levels


def solve_extended_lasso(instance: ProblemInstance, lam_b: float, lam_e: float,
                         config: SolverConfig | None = None, *,
                         beta0=None, e0=None) -> Solution:
    """Solve the joint program; returns a Solution (converged flag, no raise
    on non-convergence)."""
    cfg = config or SolverConfig()
    if lam_b <= 0 or lam_e <= 0:
        raise InputError("lam_b and lam_e must be > 0")
    if cfg.algorithm == "proximal-gradient":
        return _solve_fista(instance, lam_b, lam_e, cfg, beta0=beta0, e0=e0)

    X64 = instance.X
    y64 = instance.y
    n, p = X64.shape
    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=np.float64)
    e = np.zeros(n) if e0 is None else np.array(e0, dtype=np.float64)

    lmax_b = float(np.max(np.abs(X64.T @ y64))) / n
    lmax_e = float(np.max(np.abs(y64))) / math.sqrt(n)
    if cfg.use_path:
        levels = _lambda_levels(max(lmax_b, lam_b), max(lmax_e, lam_e),
                                lam_b, lam_e, cfg.path_steps_per_decade)
    else:
        levels = [(lam_b, lam_e)]

    scale_e = max(lmax_e, lam_e)
    def wants_longdouble(le):
        if cfg.precision == "float64":
            return False
        if cfg.precision == "longdouble":
            return True
        return le < _LONGDOUBLE_SWITCH * scale_e

    Xld = yld = None
    X, y = X64, y64
    total = 0
    converged = False
    reached_final = False
    budget = cfg.max_iters
    for i, (lb, le) in enumerate(levels):
        final = i == len(levels) - 1
        if wants_longdouble(le):
            if Xld is None:
                Xld = np.asfortranarray(X64, dtype=np.longdouble)
                yld = y64.astype(np.longdouble)
            X, y = Xld, yld
            beta = beta.astype(np.longdouble)
            e = e.astype(np.longdouble)
        else:
            X, y = X64, y64
        tol = cfg.tol_kkt if final else max(cfg.tol_kkt, 1e-6)
        max_sweeps = budget if final else min(budget, 1000)
        if max_sweeps < 1:
            break
        reached_final = final
        beta, e, it, _, converged = _bcd(X, y, lb, le, beta, e, tol,
                                         max_sweeps, cfg.tol_obj)
        total += it
        budget -= it

    # always measured at the target lambdas (the budget may have run out on
    # an intermediate path level)
    kkt = _joint_kkt_residual(X, y, beta, e, lam_b, lam_e)
    obj = objective_value(instance, beta, e, lam_b, lam_e)
    return Solution(beta_hat=beta, e_hat=e, lambda_beta=lam_b, lambda_e=lam_e,
                    objective=obj, iterations=total,
                    converged=bool(reached_final and converged
                                   and kkt <= cfg.tol_kkt),
                    kkt_residual=float(kkt))


def solve_standard_lasso(X, y, lam: float, config: SolverConfig | None = None,
                         beta0=None) -> np.ndarray:
    """Cyclic coordinate descent for (1/2n)||y - X beta||^2 + lam ||beta||_1."""
    cfg = config or SolverConfig()
    if lam <= 0:
        raise InputError("lam must be > 0")
    X = np.asfortranarray(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=np.float64)
    col_sq = np.einsum("ij,ij->j", X, X)
    r = y - X @ beta
    nlam = n * lam
    for sweep in range(cfg.max_iters):
        for j in range(p):
            cj = col_sq[j]
            if cj == 0.0:
                continue
            bj = beta[j]
            rho = X[:, j] @ r + cj * bj
            mag = abs(rho) - nlam
            bj_new = (math.copysign(mag, rho) / cj) if mag > 0 else 0.0
            if bj_new != bj:
                r += X[:, j] * (bj - bj_new)
                beta[j] = bj_new
        if not np.all(np.isfinite(beta)):
            raise NumericError("non-finite iterate in standard lasso")
        z = (X.T @ r) / nlam
        on = beta != 0
        worst = 0.0
        if np.any(on):
            worst = float(np.max(np.abs(z[on] - np.sign(beta[on]))))
        if np.any(~on):
            worst = max(worst, max(float(np.max(np.abs(z[~on]))) - 1.0, 0.0))
        if worst <= cfg.tol_kkt:
            break
    return beta


def _power_spectral_norm(X, iters=100, seed=0):
    """Largest singular value by power iteration on X^T X."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(X.shape[1])
    v /= np.linalg.norm(v)
    s = 0.0
    for _ in range(iters):
        u = X @ v
        v = X.T @ u
        nv = np.linalg.norm(v)
        if nv == 0:
            return 0.0
        s = math.sqrt(nv)
        v /= nv
    return s


def _solve_fista(instance, lam_b, lam_e, cfg, *, beta0=None, e0=None):
    """FISTA on the augmented design Z = [X, sqrt(n) I]; cross-check solver."""
    X = instance.X
    y = instance.y
    n, p = X.shape
    rn = math.sqrt(n)
    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=np.float64)
    e = np.zeros(n) if e0 is None else np.array(e0, dtype=np.float64)
    # ||Z||^2 = smax(X)^2 + n since Z Z^T = X X^T + n I
    smax = float(np.linalg.norm(X, 2)) if min(n, p) <= 2048 else _power_spectral_norm(X)
    L = (smax ** 2 + n) / n
    step = 1.0 / L
    vb, ve = beta.copy(), e.copy()
    t = 1.0
    kkt = math.inf
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        r = y - X @ vb - rn * ve
        gb = -(X.T @ r) / n
        ge = -r / rn
        beta_new = soft_threshold(vb - step * gb, step * lam_b)
        e_new = soft_threshold(ve - step * ge, step * lam_e)
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        mom = (t - 1.0) / t_new
        vb = beta_new + mom * (beta_new - beta)
        ve = e_new + mom * (e_new - e)
        beta, e, t = beta_new, e_new, t_new
        if not (np.all(np.isfinite(beta)) and np.all(np.isfinite(e))):
            raise NumericError("non-finite iterate in proximal-gradient solve")
        if it % 10 == 0 or it == cfg.max_iters:
            kkt = _joint_kkt_residual(X, y, beta, e, lam_b, lam_e)
            if kkt <= cfg.tol_kkt:
                converged = True
                break
    obj = objective_value(instance, beta, e, lam_b, lam_e)
    return Solution(beta_hat=beta, e_hat=e, lambda_beta=lam_b, lambda_e=lam_e,
                    objective=obj, iterations=it, converged=converged,
                    kkt_residual=float(kkt))


def _solve_linear(G, rhs):
    """Solve G x = rhs in the dtype of the inputs.

    LAPACK has no extended-precision path; for longdouble inputs the float64
    solution is polished by iterative refinement with residuals accumulated
    in longdouble.
    """
    if G.dtype == np.float64:
        return np.linalg.solve(G, rhs)
    G64 = G.astype(np.float64)
    x = np.linalg.solve(G64, rhs.astype(np.float64)).astype(G.dtype)
    for _ in range(3):
        resid = rhs - G @ x
        x = x + np.linalg.solve(G64, resid.astype(np.float64)).astype(G.dtype)
    return x


def restricted_solution(instance: ProblemInstance, T, S, lam_b: float,
                        lam_e: float, sign_beta=None, sign_e=None, *,
                        anchor_beta=None, anchor_e=None, dtype=np.float64):
    """Candidate stationary point restricted to supports (T, S).

    Solves the stationarity system with beta fixed to zero off T, e fixed to
    zero off S, and the on-support dual entries set to the given signs:

        h_T = (X'_{ScT} X_{ScT})^{-1} [ X'_{ScT} w_{Sc}
              + sqrt(n) lam_e X'_{ST} sign_e - n lam_b sign_beta ]
        g_S = -(X_{ST} h_T)/sqrt(n) + w_S/sqrt(n) - lam_e sign_e

    and returns (h_T, g_S, beta_hat, e_hat) with beta_hat = anchor + h on T
    (zero off T) and e_hat = anchor + g on S (zero off S).

    Anchors default to the instance truth; without truth, pass anchors
    (beta~, e~) and the effective noise becomes w = y - X beta~ - sqrt(n) e~.
    Signs default to the anchor's signs on the supports.
    """
    if lam_b < 0 or lam_e < 0:
        raise InputError("lam_b and lam_e must be >= 0")
    X = instance.X.astype(dtype, copy=False)
    y = instance.y.astype(dtype, copy=False)
    n, p = X.shape
    T = np.asarray(T, dtype=np.intp)
    S = np.asarray(S, dtype=np.intp)
    k, s = len(T), len(S)
    if k > n - s:
        raise SingularMatrixError(
            f"restricted system needs |T| <= n - |S| ({k} > {n - s})")

    if anchor_beta is None or anchor_e is None:
        if instance.truth is None:
            raise InputError("anchors are required when the instance has no truth")
        anchor_beta = instance.truth.beta_star
        anchor_e = instance.truth.e_star
    anchor_beta = np.asarray(anchor_beta, dtype=dtype)
    anchor_e = np.asarray(anchor_e, dtype=dtype)

    if sign_beta is None:
        sign_beta = np.sign(anchor_beta[T])
    if sign_e is None:
        sign_e = np.sign(anchor_e[S])
    sign_beta = np.asarray(sign_beta, dtype=dtype)
    sign_e = np.asarray(sign_e, dtype=dtype)

    w_eff = y - X @ anchor_beta - np.sqrt(dtype(n)) * anchor_e
    mask = np.ones(n, dtype=bool)
    mask[S] = False
    Sc = np.flatnonzero(mask)
    XScT = X[np.ix_(Sc, T)]
    XST = X[np.ix_(S, T)]
    rn = np.sqrt(dtype(n))

    if k > 0:
        sv = np.linalg.svd(XScT.astype(np.float64), compute_uv=False)
        cond = math.inf if sv[-1] == 0 else float(sv[0] / sv[-1])
        if not math.isfinite(cond) or cond > _MAX_COND:
            raise SingularMatrixError(
                f"X restricted to (Sc, T) is rank-deficient: condition number {cond:.3e}")
        G = XScT.T @ XScT
        rhs = XScT.T @ w_eff[Sc] + rn * lam_e * (XST.T @ sign_e) - n * lam_b * sign_beta
        h_T = _solve_linear(G, rhs)
    else:
        h_T = np.zeros(0, dtype=dtype)

    g_S = -(XST @ h_T) / rn + w_eff[S] / rn - lam_e * sign_e

    beta_hat = np.zeros(p, dtype=dtype)
    beta_hat[T] = anchor_beta[T] + h_T
    e_hat = np.zeros(n, dtype=dtype)
    e_hat[S] = anchor_e[S] + g_S
    return h_T, g_S, beta_hat, e_hat
