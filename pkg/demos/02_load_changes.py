# %% [markdown]
# # Load steps, with and without retuning
#
# At t = 1 s the load resistance jumps. A retuned controller rebuilds P, Pi
# and the margin for the new R. A stale one keeps the 50-ohm model, so its
# current reference is wrong and the error settles somewhere else, or grows.

# %%
from hybrid_inverter import NOMINAL_PARAMS, LoadChange, ReferenceSpec, Scenario, run

spec = ReferenceSpec.from_hz(177.0, 60.0)

for r_new in (60.0, 80.0):
    for known in (True, False):
        scn = Scenario(NOMINAL_PARAMS, spec, 4.0, events=(LoadChange(1.0, r_new, known=known),))
        _, m = run(scn)
        tag = "retuned" if known else "stale  "
        print(f"R -> {r_new:.0f} ohm, {tag}: final-period RMS {m.rms_error_final_period:8.3f} V")

# %% robustness of the stale controller over a range of loads
from hybrid_inverter.analysis import SweepSpec, sweep

res = sweep(SweepSpec(Scenario(NOMINAL_PARAMS, spec, 4.0), "load_r", [10.0 * k for k in range(1, 10)]), workers=None)
for r, m in zip(res.values, res.metrics):
    print(f"{r:5.0f} ohm  {m.rms_error_final_period:9.3f} V")
