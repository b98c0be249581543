"""A desk-scale phase-transition sweep.

Success probability of exact signed-support recovery (both vectors) against
the rescaled sample size theta, where n / ln(n) = 4 theta k ln(p - k), with
half the observations corrupted in every cell.

This miniature uses fewer trials and a coarse grid so it finishes in a
couple of minutes; raise `trials` and widen `theta_grid` to reproduce the
full experiment.  Two variants run side by side:

  * plain Gaussian magnitudes (the floorless protocol), and
  * magnitudes floored at the theory's thresholds f_beta / f_e, the variant
    the signed-support guarantees actually speak about.

With half the observations corrupted, the floorless curve is dominated by
corruption entries drawn below the penalty level lambda_e (which no method
could keep in the support), so it stays near zero; the floored curve shows
the genuine transition, which for this model sits well above theta = 0.5
(see README for the operating-point discussion).
"""
import sys

from extlasso.experiments import SweepConfig, run_sweep, emit_curves

common = dict(p_list=(128,), regimes=("sublinear",),
              theta_grid=(0.25, 0.75, 1.5, 2.5, 3.5), trials=20,
              sigma=0.1, master_seed=7)

for label, extra in (("floorless", {}),
                     ("floored", {"floor_beta": "f_beta", "floor_e": "f_e"})):
    cfg = SweepConfig(**common, **extra)
    result = run_sweep(cfg, n_workers=2,
                       progress=lambda d, t: print(f"  {label}: {d}/{t}",
                                                   file=sys.stderr))
    print(f"\n{label} magnitudes:")
    print("  theta    n     success  beta-only  e-only")
    for cell in result.cells:
        print(f"  {cell.theta:5.2f} {cell.n:6d} {cell.success_rate:8.2f}"
              f" {cell.successes_beta / cell.trials:10.2f}"
              f" {cell.successes_e / cell.trials:8.2f}")
    paths = emit_curves(result, f"sweep_output_{label}", fmt="svg-data")
    print(f"  wrote {[str(p) for p in paths]}")
