"""Union-type bounds for a CRC-aided code next to the finite-length limits."""

import numpy as np

from crcconv import CodeSpec
from crcconv.bounds import bound_curves
from crcconv.dso import distance_spectrum, wstar_for

m, d_tilde = 6, 24
spec = CodeSpec.from_octal(["13", "17"], k=64, crc="0x43")
high = CodeSpec.from_octal(["13", "17"], k=64 + m)
# spectra count distances below their limit; the truncated bound includes d_tilde itself
C = distance_spectrum(spec, spec.crc, d_tilde + 1)
B = distance_spectrum(high, None, d_tilde + 1)
print("d_min with CRC:", C.d_min, " without:", B.d_min, " wstar:", wstar_for(spec, m))

grid = np.arange(0.0, 4.01, 0.5)
curves = bound_curves(grid, B=B, C=C, m=m, d_tilde=d_tilde, n=spec.n, k=spec.k)
names = [c for c in ("tub", "nn_pe1", "nack1", "rcu", "mc") if c in curves]
print("snr_db " + " ".join(f"{c:>10}" for c in names))
for i, snr in enumerate(grid):
    print(f"{snr:6.1f} " + " ".join(f"{curves[c].values[i]:10.3e}" for c in names))
