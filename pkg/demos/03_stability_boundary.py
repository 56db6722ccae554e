# %% [markdown]
# # Where the guarantee ends
#
# Tracking is certified while V_m ||Gamma(omega)|| < 1. Sweeping the amplitude
# at 60 Hz and the frequency at 177 V shows the simulated error jump right
# around the predicted cutoff.

# %%
from pathlib import Path

from hybrid_inverter import NOMINAL_PARAMS, ReferenceSpec, Scenario
from hybrid_inverter.analysis import SweepSpec, boundary, sweep
from hybrid_inverter.svg import line_plot

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)
spec = ReferenceSpec.from_hz(177.0, 60.0)
base = Scenario(NOMINAL_PARAMS, spec, 1.0)

# %%
for axis, values, fixed in (("v_m", [100.0 + 50 * k for k in range(17)], spec.omega),
                            ("omega", [200.0 * k for k in range(1, 16)], spec.v_m)):
    cut = boundary(NOMINAL_PARAMS, axis, fixed)
    res = sweep(SweepSpec(base, axis, values), workers=None)
    print(f"{axis}: predicted cutoff {cut:.1f}")
    for v, m, g in zip(res.values, res.metrics, res.margins):
        print(f"  {v:7.1f}  margin {g:+.3f}  rms {m.rms_error_final_period:9.3f} V")
    rms = [m.rms_error_final_period for m in res.metrics]
    line_plot(out / f"boundary_{axis}.svg", [("final-period RMS", res.values, rms)],
              title=f"Error vs {axis}", xlabel=axis, ylabel="log10 V", vline=cut,
              vline_label="predicted cutoff", logy=True, markers=True)
