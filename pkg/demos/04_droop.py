# %% [markdown]
# # Droop outer loop
#
# The droop law moves (omega, V_m) with measured power. Raising V_m* from 177
# to 185 V at 0.2 s (and the matching power targets with it) walks the
# commanded amplitude up one fundamental period at a time.

# %%
import numpy as np

from hybrid_inverter import NOMINAL_PARAMS, DroopParams, ReferenceSpec, Scenario, SetpointChange, run
from hybrid_inverter.droop import droop_fixed_point

spec = ReferenceSpec.from_hz(177.0, 60.0)
dp = DroopParams.for_load(NOMINAL_PARAMS, 177.0, spec.omega, k_p=0.01, k_q=0.0025)
print(f"P* = {dp.p_star:.2f} W, Q* = {dp.q_star:.2f} VAR")

trace, metrics = run(Scenario(NOMINAL_PARAMS, spec, 2.0, droop=dp, events=(SetpointChange(0.2, 185.0, spec.omega),)))

# %%
log = np.array(trace.droop_log)
for row in log[::15]:
    t, p, q, w, v = row
    print(f"t={t:6.3f}  P={p:8.1f}  Q={q:10.1f}  omega={w:9.4f}  V_m={v:8.3f}")

new = DroopParams.for_load(NOMINAL_PARAMS, 185.0, spec.omega, 0.01, 0.0025)
print("predicted settle point:", droop_fixed_point(NOMINAL_PARAMS, new))
print("max tracking error:", metrics.max_abs_error)
