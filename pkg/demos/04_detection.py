# The residual test statistic, its null distribution and a threshold
# chosen for a target false-alarm rate.
import numpy as np
from scipy import stats

from fdi_glrt import MeasurementMatrix, decide, glrt_white, threshold_for_pfa

rng = np.random.default_rng(2)
mm = MeasurementMatrix.from_H(rng.standard_normal((50, 10)))

# under white unit noise the statistic is chi-square with M - K degrees of freedom
null = np.array([glrt_white(mm, rng.standard_normal(50))[0].value for _ in range(5000)])
print("null mean", round(null.mean(), 2), "vs", mm.dof)

tau = threshold_for_pfa(null, 0.01)
print("empirical threshold at 1% false alarms:", round(tau, 2),
      " chi-square quantile:", round(stats.chi2.ppf(0.99, mm.dof), 2))

# an attack on three meters, size 2
a = np.zeros(50)
a[[3, 17, 41]] = 2.0
hits = np.mean([decide(glrt_white(mm, rng.standard_normal(50) + a)[0], tau) for _ in range(2000)])
print("detection rate for the 3-meter attack:", hits)

# shifting the state by anything in span(H) leaves the statistic alone
x = rng.standard_normal(50)
print(glrt_white(mm, x)[0].value, glrt_white(mm, x + mm.H @ rng.standard_normal(10))[0].value)
