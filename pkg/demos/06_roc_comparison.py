# Monte-Carlo ROC comparison of the snapshot-averaging detector and the AR
# detector on a 284 x 60 synthetic system. Takes a few seconds.
import sys

import numpy as np

from fdi_glrt import ArNoiseModel, AttackSpec, Scenario, bundled_matrix, roc_from_scores, run_experiment

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 300
mm = bundled_matrix()

for sigma2 in (0.3, 0.5, 0.7):
    sc = Scenario(mm, ArNoiseModel((0.9,), sigma2), n=20, trials=trials, master_seed=0,
                  attack=AttackSpec("sparse", magnitude=1.0, d=29))
    table = run_experiment(sc, threads=4)
    line = [f"sigma2={sigma2}"]
    for det in table.detectors:
        curve = roc_from_scores(table, det)
        # detection probability at the first threshold with at most 10% false alarms
        pd10 = curve.pd[np.argmax(curve.pfa <= 0.10)]
        line.append(f"{det}: AUC {curve.auc:.3f}, Pd@10% {pd10:.3f}")
    print("  ".join(line))
