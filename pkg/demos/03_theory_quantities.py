"""The closed-form theory quantities: covariance functionals, penalty
families, sample-size bounds and magnitude thresholds.

For a correlated Gaussian design the guarantees are driven by scalar
functionals of the row covariance restricted to the true support: extreme
eigenvalues, l_inf operator norms, the conditional covariance diagonal
range (rho_u, rho_l), and the mutual-incoherence value.
"""
import numpy as np

import extlasso as xl
from extlasso.datagen import CovarianceSpec
from extlasso.regparams import TheoryInputs

p, k, n = 64, 4, 2000
s = n // 2
sigma = 0.1

sigma_mat = CovarianceSpec("ar1", p=p, rho=0.3).materialize()
T = [3, 17, 31, 53]
rep = xl.covariance_report(sigma_mat, T)
print("covariance functionals on Sigma_TT (ar1, rho = 0.3):")
print(f"  C_min={rep.C_min:.4f}  C_max={rep.C_max:.4f}  xi={rep.xi:.1f}")
print(f"  D+={rep.D_plus_max:.4f}  D-={rep.D_minus_max:.4f}")
print(f"  rho_u={rep.rho_u:.4f}  rho_l={rep.rho_l:.4f}")
print(f"  incoherence value={rep.incoherence_value:.4f} "
      f"(holds at gamma=0.5: {rep.incoherent_at(0.5)})")

print("\npenalty families at (n, p, sigma) = "
      f"({n}, {p}, {sigma}):")
sim = xl.lambdas_simulation(sigma, n, p)
gauss = xl.lambdas_gaussian_design(sigma, n, p)
supp = xl.lambdas_support_recovery(sigma, n, p, s / n, rep, 0.5)
print(f"  simulation:       lambda_beta={sim.lambda_beta:.5f} "
      f"lambda_e={sim.lambda_e:.5f}")
print(f"  gaussian design:  lambda_beta={gauss.lambda_beta:.5f} "
      f"lambda_e={gauss.lambda_e:.5f}")
print(f"  support recovery: lambda_beta={supp.lambda_beta:.5f} "
      f"lambda_e={supp.lambda_e:.5f}")

inputs = TheoryInputs(n=n, p=p, k=k, s=s, sigma=sigma,
                      gamma_incoherence=0.5, covariance_report=rep)
ach = xl.sample_size_achievable(inputs, sim.lambda_beta, supp.lambda_e)
una = xl.sample_size_unachievable(inputs, sim.lambda_beta, sim.lambda_e)
fb, fe = xl.magnitude_thresholds(inputs, sim.lambda_beta, sim.lambda_e)
print(f"\nsample-size bounds (order constants set to their defaults):")
print(f"  recovery guaranteed above  n1={ach.n1:,.0f}  n2={ach.n2:,.0f}")
print(f"  recovery impossible below  n1={una.n1:,.0f}  n2={una.n2:,.0f}")
print(f"minimum magnitudes for signed recovery: f_beta={fb:.4f} f_e={fe:.4f}")

print("\nempirical restricted-curvature estimate over the error cone:")
X = xl.gen_design(400, 100, seed=0)
est = xl.extended_re_estimate(X, np.arange(5), np.arange(40),
                              lambda_ratio=sim.ratio, num_samples=5000,
                              seed=1)
print(f"  kappa_hat = {est.kappa_hat:.4f} from {est.num_samples} cone samples")
bound = xl.parameter_error_bound(est.kappa_hat, sim.lambda_beta, sim.lambda_e,
                                 k=5, s=40, safety=0.5)
print(f"  implied l2-error guarantee (0.5 safety): {bound:.4f}")
