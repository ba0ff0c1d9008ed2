# State estimation with repeated snapshots. Under AR(1) noise the estimator
# that whitens each meter's time series beats averaging the snapshots.
import numpy as np

from fdi_glrt import ArNoiseModel, MeasurementMatrix, ar_mle_estimate, wls_estimate_sequential
from fdi_glrt.arnoise import simulate_block

rng = np.random.default_rng(1)
mm = MeasurementMatrix.from_H(rng.standard_normal((40, 6)))
theta = rng.standard_normal(6)
models = [ArNoiseModel((0.9,), 0.5)] * mm.M
sigma = np.full(mm.M, 0.5)

err_mean, err_ar = [], []
for _ in range(500):
    X = (mm.H @ theta)[:, None] + simulate_block(models, 20, rng)
    err_mean.append(wls_estimate_sequential(mm, sigma, X).theta_hat - theta)
    err_ar.append(ar_mle_estimate(mm, models, X).theta_hat - theta)

print("mean squared error, averaged snapshots:", round(float(np.mean(np.square(err_mean))), 5))
print("mean squared error, AR likelihood     :", round(float(np.mean(np.square(err_ar))), 5))

# with white noise models the two estimators coincide
white = [ArNoiseModel.white(0.5)] * mm.M
X = (mm.H @ theta)[:, None] + simulate_block(white, 20, rng)
print("AR(0) vs averaged:", np.allclose(ar_mle_estimate(mm, white, X).theta_hat,
                                        wls_estimate_sequential(mm, sigma, X).theta_hat))
