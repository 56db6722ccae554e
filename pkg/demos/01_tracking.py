# %% [markdown]
# # Recovering from an initial offset
#
# The capacitor starts 70 V away from the reference. The switching law picks
# whichever switch position makes e^T P e fall, and the error decays to the
# ripple left by the 1 MHz decision rate.

# %%
from pathlib import Path

import numpy as np

from hybrid_inverter import NOMINAL_PARAMS, ReferenceSpec, Scenario, closed_form_P, run, stability_margin
from hybrid_inverter.svg import line_plot

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)

spec = ReferenceSpec.from_hz(177.0, 60.0)
P = closed_form_P(NOMINAL_PARAMS)
print("P =", P.matrix)
print("margin 1 - V_m ||Gamma|| =", round(stability_margin(NOMINAL_PARAMS, spec), 4))

# %%
trace, metrics = run(Scenario(NOMINAL_PARAMS, spec, t_end=4.0, initial_state=(70.0, 0.0)))
print(metrics)

# %% per-period peak error: fast decay, then a floor set by chattering
n = int(round(spec.period / trace.control_period))
k = len(trace.err_fine) // n
peaks = np.abs(trace.err_fine[: k * n]).reshape(k, n).max(axis=1)
for i in (0, 10, 50, 100, 150, 200, k - 1):
    print(f"period {i:3d}: peak |e| = {peaks[i]:.3f} V")

# %%
t = trace["t"]
first = t < 0.5
line_plot(out / "tracking_voltage.svg", [("v_c", t[first], trace["v_c"][first]),
                                         ("v_ref", t[first], trace["v_ref"][first])],
          title="First half second", xlabel="t [s]", ylabel="V")
line_plot(out / "tracking_peaks.svg", [("peak |e| per period", np.arange(k) * spec.period, peaks)],
          title="Per-period peak error", xlabel="t [s]", ylabel="log10 V", logy=True)
