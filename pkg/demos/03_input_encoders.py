"""Word-line encoders: charge equivalence, latency windows, noise margins.

All three schemes deposit identical ideal charge (linear in the value), so
they are interchangeable in the MAC; they differ in how long a conversion
takes and how gracefully they degrade under drive noise.
"""

import numpy as np

from kanedge.inputgen import (
    EncoderConfig,
    Scheme,
    compare_encoders,
    encode,
    encode_latency,
    ideal_charge,
    mac_yield,
)

N = 3  # half bit width: 6-bit values
schemes = (Scheme.VOLTAGE, Scheme.HYBRID, Scheme.PWM)

print("ideal charge is x * I1 * W_p1 for every scheme:")
for x in (0, 7, 45, 63):
    qs = [ideal_charge(encode(x, EncoderConfig(s, N)), EncoderConfig(s, N)).q for s in schemes]
    print(f"  x={x:2d}: charges {qs}")

print("\nconversion windows (units of W_p1):")
for s in schemes:
    print(f"  {s.value:8s}: {encode_latency(s, N, 1.0):5.0f}")
print(f"  pwm / hybrid = {encode_latency(Scheme.PWM, N, 1.0) / encode_latency(Scheme.HYBRID, N, 1.0):.2f}")

print("\ndecoded-value yield under current noise (100k trials each):")
print(f"  {'sigma':>6} {'voltage':>9} {'hybrid':>9} {'pwm':>9}")
for sigma in (0.02, 0.05, 0.1, 0.2):
    ys = [mac_yield(EncoderConfig(s, N, sigma_i=sigma, seed=42), 100_000) for s in schemes]
    print(f"  {sigma:6.2f} {ys[0]:9.4f} {ys[1]:9.4f} {ys[2]:9.4f}")
print("voltage packs 2^2N levels into the swing and pays for it; the hybrid")
print("two-pulse split keeps hybrid levels at 2^N; pwm is nearly binary")

print("\nfigure of merit (1 / area*power*latency), shipped unit costs:")
rows = compare_encoders([EncoderConfig(s, N) for s in schemes])
hybrid = next(r for r in rows if r["scheme"] == "hybrid")
for r in rows:
    print(
        f"  {r['scheme']:8s}: area {r['area']:7.2f}  power {r['power']:6.2f}  "
        f"latency {r['latency_ns']:5.1f}  fom {r['fom']:.3e}"
        f"  (area x{r['area'] / hybrid['area']:.2f}, power x{r['power'] / hybrid['power']:.2f} vs hybrid)"
    )
