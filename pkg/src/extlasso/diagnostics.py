"""Optimality certification and recovery diagnostics.

kkt_check certifies a candidate solution by recomputing the scaled duals

    z_beta = X^T (y - X b - sqrt(n) e) / (n lambda_beta)
    z_e    =     (y - X b - sqrt(n) e) / (sqrt(n) lambda_e)

in extended precision (the residual is a small difference of large
quantities, and at very small lambdas float64 rounding alone would swamp a
1e-9 stationarity tolerance).

primal_dual_witness builds the candidate solution restricted to the true
supports in closed form, assigns the true signs as on-support duals, then
tests off-support dual feasibility (step 3) and sign consistency (step 4).
If either step fails, no solution of the program carries the true signed
supports.

extended_re_estimate samples the cone

    ||h_Tc||_1 + lam ||f_Sc||_1 <= 3 ||h_T||_1 + 3 lam ||f_S||_1

and reports the smallest observed value of ||X h + sqrt(n) f||_2 / sqrt(n)
over directions normalized to ||h||_2 + ||f||_2 = 1.  Sampling can only
over-estimate the true cone minimum; brute_force_re_min provides a much
denser orthant-by-orthant search (with SLSQP polish) as an oracle on tiny
problems.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .model import (DEFAULT_ZERO_TOL, InputError, ProblemInstance, Solution,
                    extract_signed_support)
from .rng import stream
from .solver import restricted_solution

_TIE_TOL = 1e-12  # off-support duals within this of magnitude 1 are not strict


@dataclass(frozen=True)
class KktReport:
    """Scaled duals plus the scalar summaries of the optimality system."""

    z_beta: np.ndarray
    z_e: np.ndarray
    stationarity_residual: float
    max_offsupport_zbeta: float
    max_offsupport_ze: float
    strict_feasible: bool
    sign_consistent: bool

    @property
    def certified(self) -> bool:
        return self.strict_feasible and self.sign_consistent


@dataclass(frozen=True)
class WitnessReport:
    """Outcome of the four-step witness construction."""

    beta_restricted: np.ndarray   # candidate beta on T (length |T|)
    e_restricted: np.ndarray      # candidate e on S (length |S|)
    dual_offsupport_beta: np.ndarray
    dual_offsupport_e: np.ndarray
    step3_pass: bool
    step4_pass: bool
    failing_condition: str        # none|dual_beta|dual_e|sign_beta|sign_e

    @property
    def passed(self) -> bool:
        return self.step3_pass and self.step4_pass


@dataclass(frozen=True)
class ReEstimate:
    """Sampled lower-curvature estimate over the restricted cone."""

    kappa_hat: float
    num_samples: int
    sampling_spec: dict = field(default_factory=dict)


def kkt_check(instance: ProblemInstance, solution: Solution) -> KktReport:
    """Evaluate the optimality system at the solution; always returns a report."""
    lam_b, lam_e = solution.lambda_beta, solution.lambda_e
    X = instance.X.astype(np.longdouble)
    y = instance.y.astype(np.longdouble)
    beta = np.asarray(solution.beta_hat, dtype=np.longdouble)
    e = np.asarray(solution.e_hat, dtype=np.longdouble)
    n = instance.n
    rn = np.sqrt(np.longdouble(n))

    r = y - X @ beta - rn * e
    z_beta = (X.T @ r) / (np.longdouble(n) * np.longdouble(lam_b))
    z_e = r / (rn * np.longdouble(lam_e))

    stat = 0.0
    sign_ok = True
    off_b = 0.0
    off_e = 0.0
    for z, v, is_beta in ((z_beta, beta, True), (z_e, e, False)):
        on = v != 0
        if np.any(on):
            stat = max(stat, float(np.max(np.abs(z[on] - np.sign(v[on])))))
            sign_ok = sign_ok and bool(np.all(np.sign(z[on]) == np.sign(v[on])))
        off = float(np.max(np.abs(z[~on]))) if np.any(~on) else 0.0
        if is_beta:
            off_b = off
        else:
            off_e = off
    strict = (off_b < 1.0 - _TIE_TOL) and (off_e < 1.0 - _TIE_TOL)
    return KktReport(
        z_beta=z_beta.astype(np.float64), z_e=z_e.astype(np.float64),
        stationarity_residual=stat,
        max_offsupport_zbeta=off_b, max_offsupport_ze=off_e,
        strict_feasible=strict, sign_consistent=sign_ok,
    )


def primal_dual_witness(instance: ProblemInstance, T, S, lam_b: float,
                        lam_e: float) -> WitnessReport:
    """Four-step witness for exact signed-support recovery at (T, S)."""
    if instance.truth is None:
        raise InputError("witness construction requires the instance truth")
    truth = instance.truth
    T = np.asarray(T, dtype=np.intp)
    S = np.asarray(S, dtype=np.intp)
    sign_b = np.sign(truth.beta_star[T])
    sign_e = np.sign(truth.e_star[S])

    # Step 1: restricted candidate in closed form, truth signs assumed.
    _, _, beta_hat, e_hat = restricted_solution(
        instance, T, S, lam_b, lam_e, sign_beta=sign_b, sign_e=sign_e)

    # Step 2 assigns on-support duals = assumed signs; they enter the
    # closed form already, so only steps 3-4 remain to verify.
    X = instance.X
    n = instance.n
    rn = math.sqrt(n)
    r = instance.y - X @ beta_hat - rn * e_hat
    mask_t = np.ones(instance.p, dtype=bool)
    mask_t[T] = False
    mask_s = np.ones(n, dtype=bool)
    mask_s[S] = False
    zb_off = (X[:, mask_t].T @ r) / (n * lam_b)
    ze_off = r[mask_s] / (rn * lam_e)

    max_b = float(np.max(np.abs(zb_off))) if zb_off.size else 0.0
    max_e = float(np.max(np.abs(ze_off))) if ze_off.size else 0.0
    dual_beta_ok = max_b < 1.0 - _TIE_TOL
    dual_e_ok = max_e < 1.0 - _TIE_TOL
    step3 = dual_beta_ok and dual_e_ok

    sign_beta_ok = bool(np.all(np.sign(beta_hat[T]) == sign_b))
    sign_e_ok = bool(np.all(np.sign(e_hat[S]) == sign_e))
    step4 = sign_beta_ok and sign_e_ok

    if not dual_beta_ok:
        failing = "dual_beta"
    elif not dual_e_ok:
        failing = "dual_e"
    elif not sign_beta_ok:
        failing = "sign_beta"
    elif not sign_e_ok:
        failing = "sign_e"
    else:
        failing = "none"
    return WitnessReport(
        beta_restricted=beta_hat[T], e_restricted=e_hat[S],
        dual_offsupport_beta=zb_off, dual_offsupport_e=ze_off,
        step3_pass=step3, step4_pass=step4, failing_condition=failing,
    )


def _cone_ratio(X, h, f):
    """||X h + sqrt(n) f||_2 / sqrt(n) for unit-normalized (h, f) batches."""
    n = X.shape[0]
    v = X @ h + math.sqrt(n) * f
    return np.linalg.norm(v, axis=0) / math.sqrt(n)


def extended_re_estimate(X, T, S, lambda_ratio: float, num_samples: int,
                         seed=0, restrict: str | None = None) -> ReEstimate:
    """Monte-Carlo lower-curvature estimate over the restricted cone.

    restrict="f_zero" confines sampling to f = 0 (cone on h alone);
    "h_zero" confines it to h = 0.  The returned kappa_hat is the minimum
    sampled ratio, an optimistic (upper) estimate of the true cone infimum.
    """
    if lambda_ratio <= 0:
        raise InputError("lambda_ratio must be > 0")
    if num_samples < 1:
        raise InputError("num_samples must be >= 1")
    if restrict not in (None, "f_zero", "h_zero"):
        raise InputError(f"unknown restriction {restrict!r}")
    X = np.asarray(X, dtype=np.float64)
    n, p = X.shape
    T = np.asarray(T, dtype=np.intp)
    S = np.asarray(S, dtype=np.intp)
    lam = float(lambda_ratio)
    rng = stream(seed, 101)

    best = math.inf
    # fixed batch size, truncating the last batch: the sample set for a
    # larger num_samples is then a superset of any smaller one (nested-set
    # monotonicity of the minimum)
    batch = 1000
    done = 0
    while done < num_samples:
        m = min(batch, num_samples - done)
        h = rng.standard_normal((p, batch))[:, :m]
        f = rng.standard_normal((n, batch))[:, :m]
        if restrict == "f_zero":
            f[:] = 0.0
        if restrict == "h_zero":
            h[:] = 0.0
        on_mask_h = np.zeros(p, dtype=bool)
        on_mask_h[T] = True
        on_mask_s = np.zeros(n, dtype=bool)
        on_mask_s[S] = True

        on_l1 = (np.abs(h[on_mask_h]).sum(axis=0)
                 + lam * np.abs(f[on_mask_s]).sum(axis=0))
        off_l1 = (np.abs(h[~on_mask_h]).sum(axis=0)
                  + lam * np.abs(f[~on_mask_s]).sum(axis=0))
        slack = rng.uniform(0.0, 1.0, size=batch)[:m]
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(off_l1 > 0, slack * 3.0 * on_l1 / off_l1, 0.0)
        h[~on_mask_h] *= scale
        f[~on_mask_s] *= scale

        norm = np.linalg.norm(h, axis=0) + np.linalg.norm(f, axis=0)
        ok = norm > 0
        if not np.any(ok):
            done += m
            continue
        h = h[:, ok] / norm[ok]
        f = f[:, ok] / norm[ok]
        ratios = _cone_ratio(X, h, f)
        best = min(best, float(np.min(ratios)))
        done += m

    spec = {"lambda_ratio": lam, "restrict": restrict or "none",
            "seed": seed if isinstance(seed, int) else list(seed)}
    return ReEstimate(kappa_hat=best, num_samples=num_samples,
                      sampling_spec=spec)


def brute_force_re_min(X, T, S, lambda_ratio: float, seed=0,
                       grid_per_orthant: int = 48,
                       polish_top: int = 40) -> float:
    """Dense orthant-wise grid search plus SLSQP polish for the cone minimum.

    Only sensible on tiny problems (p + n around a dozen): every closed sign
    orthant of (h, f) is searched, so zero patterns are covered as orthant
    boundaries.  Serves as the independent oracle for the sampler.
    """
    X = np.asarray(X, dtype=np.float64)
    n, p = X.shape
    d = p + n
    if d > 16:
        raise InputError("brute-force search is limited to p + n <= 16")
    T = np.asarray(T, dtype=np.intp)
    S = np.asarray(S, dtype=np.intp)
    lam = float(lambda_ratio)

    on_mask = np.zeros(d, dtype=bool)
    on_mask[T] = True
    on_mask[p + S] = True
    # cone written as c_off . m_off <= 3 c_on . m_on over magnitudes m
    weights = np.concatenate([np.ones(p), lam * np.ones(n)])
    rng = stream(seed, 202)

    def ratio_of(v):
        h, f = v[:p], v[p:]
        denom = np.linalg.norm(h) + np.linalg.norm(f)
        if denom == 0:
            return math.inf
        return float(np.linalg.norm(X @ h + math.sqrt(n) * f)
                     / (math.sqrt(n) * denom))

    candidates = []
    for signs_tail in itertools.product((-1.0, 1.0), repeat=d - 1):
        sigma = np.array((1.0,) + signs_tail)  # global flip symmetry
        mags = rng.uniform(0.0, 1.0, size=(grid_per_orthant, d))
        slack = rng.uniform(0.0, 1.0, size=grid_per_orthant)
        slack[0] = 1.0  # include the cone boundary deterministically
        on_l1 = mags[:, on_mask] @ weights[on_mask]
        off_l1 = mags[:, ~on_mask] @ weights[~on_mask]
        with np.errstate(divide="ignore", invalid="ignore"):
            sc = np.where(off_l1 > 0, slack * 3.0 * on_l1 / off_l1, 0.0)
        mags[:, ~on_mask] *= sc[:, None]
        pts = mags * sigma
        hn = np.linalg.norm(pts[:, :p], axis=1) + np.linalg.norm(pts[:, p:], axis=1)
        keep = hn > 0
        pts = pts[keep] / hn[keep, None]
        rt = _cone_ratio(X, pts[:, :p].T, pts[:, p:].T)
        i = int(np.argmin(rt))
        candidates.append((float(rt[i]), pts[i] * 1.0, sigma))

    candidates.sort(key=lambda c: c[0])
    best = candidates[0][0]

    for rt0, pt, sigma in candidates[:polish_top]:
        m0 = np.abs(pt)

        def objective(m, sigma=sigma):
            return ratio_of(sigma * m)

        cons = [
            {"type": "ineq",
             "fun": lambda m: 3.0 * (weights[on_mask] @ m[on_mask])
                              - (weights[~on_mask] @ m[~on_mask])},
            {"type": "ineq",
             "fun": lambda m: np.linalg.norm(m[:p]) + np.linalg.norm(m[p:]) - 0.5},
        ]
        res = minimize(objective, m0, method="SLSQP",
                       bounds=[(0.0, None)] * d, constraints=cons,
                       options={"maxiter": 200, "ftol": 1e-12})
        if res.success or res.fun < best:
            m = np.maximum(res.x, 0.0)
            on_l1 = weights[on_mask] @ m[on_mask]
            off_l1 = weights[~on_mask] @ m[~on_mask]
            if off_l1 <= 3.0 * on_l1 + 1e-9 and (m[:p].any() or m[p:].any()):
                best = min(best, ratio_of(sigma * m))
    return best


@dataclass(frozen=True)
class RecoveryMetrics:
    """Parameter / support / prediction errors of a solution vs the truth."""

    l2_beta: float
    l2_e: float
    linf_beta: float
    linf_e: float
    signed_support_beta: bool
    signed_support_e: bool
    prediction_error: float

    @property
    def l2_total(self) -> float:
        return self.l2_beta + self.l2_e

    @property
    def exact_signed_support(self) -> bool:
        return self.signed_support_beta and self.signed_support_e


def recovery_metrics(instance: ProblemInstance, solution: Solution,
                     zero_tol: float = DEFAULT_ZERO_TOL) -> RecoveryMetrics:
    """Errors of (beta_hat, e_hat) against the instance truth."""
    if instance.truth is None:
        raise InputError("recovery metrics require the instance truth")
    t = instance.truth
    h = np.asarray(solution.beta_hat, dtype=np.float64) - t.beta_star
    f = np.asarray(solution.e_hat, dtype=np.float64) - t.e_star
    sup_b = extract_signed_support(solution.beta_hat, zero_tol) == \
        extract_signed_support(t.beta_star, zero_tol)
    sup_e = extract_signed_support(solution.e_hat, zero_tol) == \
        extract_signed_support(t.e_star, zero_tol)
    return RecoveryMetrics(
        l2_beta=float(np.linalg.norm(h)),
        l2_e=float(np.linalg.norm(f)),
        linf_beta=float(np.max(np.abs(h))) if h.size else 0.0,
        linf_e=float(np.max(np.abs(f))) if f.size else 0.0,
        signed_support_beta=bool(sup_b),
        signed_support_e=bool(sup_e),
        prediction_error=float(np.linalg.norm(instance.X @ h))
        / math.sqrt(instance.n),
    )


def parameter_error_bound(kappa: float, lam_b: float, lam_e: float,
                          k: int, s: int, safety: float = 1.0) -> float:
    """The guaranteed l2-error level 3 kappa^-2 (lam_b sqrt(k) + lam_e sqrt(s)),

    with kappa deflated by `safety` (a sampled kappa over-estimates the true
    cone infimum, so tests use safety = 0.5)."""
    kap = safety * kappa
    if kap <= 0:
        raise InputError("need a positive curvature estimate")
    return 3.0 / kap ** 2 * (lam_b * math.sqrt(k) + lam_e * math.sqrt(s))
