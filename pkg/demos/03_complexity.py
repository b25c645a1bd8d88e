"""Operation-cost model: how much cheaper is the spiking network?

The conventional CNN pays a multiply-accumulate per kernel tap on 32-bit
data; the spiking network only adds or skips a weight per 1-bit spike, but
pays it once per time step. This demo prints both cycle counts for the
default architecture and scans the time-step count for the break-even and
the headline operating points.

Run:  python3 demos/03_complexity.py
"""

from evecg.complexity import (
    ComplexityParams,
    interpretation_table,
    reduction_ratio,
    tc_cnn,
    tc_scnn,
)
from evecg.network import default_network

params = ComplexityParams.from_network(default_network(80))

print("default architecture, decomposition cost model "
      "(add=1, branch=1, mul=10 cycles):")
cnn = tc_cnn(params)
print(f"  CNN  (32-bit dense):   {cnn:>12,} cycles")
for t in (1, 5, 6, 20, 40):
    scnn = tc_scnn(params, t)
    print(f"  SCNN (1-bit, t={t:3d}):  {scnn:>12,} cycles  "
          f"reduction {100 * reduction_ratio(cnn, scnn):6.2f}%")

print("\nsame scan under the strict-literal reading of the cost formulas:")
cnn = tc_cnn(params, mode="literal")
for t in (1, 19, 40):
    scnn = tc_scnn(params, t, mode="literal")
    print(f"  SCNN t={t:3d}: reduction {100 * reduction_ratio(cnn, scnn):6.2f}%")

rows = interpretation_table(params)
best = min(rows, key=lambda r: abs(r["reduction"] - 0.968))
print(f"\ncell closest to a 96.8% reduction: mode={best['mode']} "
      f"t={best['t']} -> {100 * best['reduction']:.2f}%")

even = [r for r in rows if r["reduction"] < 0]
if even:
    first = min(even, key=lambda r: r["t"])
    print(f"(the spiking network stops being cheaper at t={first['t']} "
          f"under the {first['mode']} model)")
