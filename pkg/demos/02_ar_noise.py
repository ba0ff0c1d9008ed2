# Colored meter noise: simulate an AR(1) process, whiten it, and fit the
# coefficient back from data.
import numpy as np

from fdi_glrt import ArNoiseModel, build_whitening, fit_ar_yule_walker, simulate_ar
from fdi_glrt.arnoise import ar_filter

rng = np.random.default_rng(0)
model = ArNoiseModel(coeffs=(0.9,), sigma2=0.5)
print("stationary?", model.is_stationary(), " long-run variance", model.stationary_variance())

w = simulate_ar(model, 20_000, rng, burn_in=200)
print("sample variance", round(float(w.var()), 3))
print("lag-1 correlation", round(float(np.corrcoef(w[1:], w[:-1])[0, 1]), 3))

# the banded whitening map T (plus the initial-condition offset c) undoes
# the recursion exactly, leaving the white innovations
short = ArNoiseModel((0.9,), 0.5, initial_conditions=(1.5,))
op = build_whitening(short, 6)
print("T =\n", op.dense())
print("c =", op.c)
v = rng.standard_normal(6) * np.sqrt(short.sigma2)
print("recovered innovations match:", np.allclose(op.apply(ar_filter(short, v)), v))

fit = fit_ar_yule_walker(w, order=1)
print("Yule-Walker estimate alpha =", round(fit.coeffs[0], 4), " sigma2 =", round(fit.sigma2, 4))
