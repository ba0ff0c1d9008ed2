# Blind source separation on observed meter data and the stealth attack an
# adversary can build from it without knowing H.
import numpy as np

from fdi_glrt import MeasurementMatrix, fastica, ica_attack

rng = np.random.default_rng(3)

# two heavy-tailed sources mixed by an unknown matrix
S = rng.laplace(size=(2, 2000))
X = rng.standard_normal((2, 2)) @ S
model = fastica(X, rng=rng)
C = np.abs(np.corrcoef(np.vstack([S, model.Y]))[:2, 2:])
print("best |corr| per true source:", C.max(axis=1).round(3), " iterations:", model.n_iter)

# the attacker sees a window of clean readings driven by a few states
mm = MeasurementMatrix.from_H(rng.standard_normal((30, 4)))
window = mm.H @ rng.laplace(size=(4, 400)) + 0.01 * rng.standard_normal((30, 400))
att = ica_attack(window, sigma_y2=0.5, A=1.0, rng=rng, eig_threshold=1e-3)
print("inferred components:", fastica(window, eig_threshold=1e-3, rng=rng).n_components)
share = np.linalg.norm(mm.B.T @ att.a) / np.linalg.norm(att.a)
print("fraction of the attack outside span(H):", round(float(share), 4))
