"""Pick the distance-spectrum-optimal CRC for the (13,17) code at k=64.

Runs the search for m = 3..6 in both termination modes and prints the winner
with its minimum distance, multiplicity and the distance threshold used.
"""

from crcconv import CodeSpec
from crcconv.dso import TB, ZT, dso_search

for mode in (ZT, TB):
    spec = CodeSpec.from_octal(["13", "17"], k=64, mode=mode)
    print(f"-- {mode} --")
    for m in range(3, 7):
        row = dso_search(spec, m)
        res = row.result
        flag = "" if not res.inconclusive else f"  (tied: {', '.join(res.tied)})"
        print(f"m={m}  crc={res.crc.hex:>6}  d_min={res.d_min}  A_dmin={res.multiplicity}"
              f"  d_tilde={row.d_tilde}{flag}")
