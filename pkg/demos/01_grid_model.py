# Building a measurement model from a small DC case and splitting an attack
# into the part the grid can see and the part it cannot.
import numpy as np

from fdi_glrt import MeterPlan, build_dc_jacobian, decompose_attack, parse_case

case = parse_case("""
# four buses on a ring plus one chord
bus 1 slack
bus 2
bus 3
bus 4
branch 1 2 0.10
branch 2 3 0.20
branch 3 4 0.25
branch 4 1 0.15
branch 1 3 0.30
""")
print(len(case.buses), "buses,", len(case.branches), "branches, slack bus", case.slack)

# meter every branch flow in both directions and every bus injection
plan = MeterPlan.full(case)
mm = build_dc_jacobian(case, plan)
print("H is", mm.H.shape, "with", mm.dof, "residual degrees of freedom")

# the complement B spans everything H cannot produce
print("max |B^T H| =", np.abs(mm.B.T @ mm.H).max())
print("max |B^T B - I| =", np.abs(mm.B.T @ mm.B - np.eye(mm.dof)).max())

# an attack built from the columns of H looks like an ordinary state change
stealthy = mm.H @ np.array([0.02, -0.01, 0.03])
print("column-space attack unobservable?", decompose_attack(mm, stealthy).is_unobservable())

# a single corrupted meter almost always leaks into the residual space
naive = np.zeros(mm.M)
naive[4] = 0.5
dec = decompose_attack(mm, naive)
print("one-meter attack unobservable?", dec.is_unobservable(),
      " |theta_b| =", round(float(np.linalg.norm(dec.theta_b)), 4))
