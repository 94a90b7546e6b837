"""Decoding cost of list decoding versus the wrap-around Viterbi decoder."""

from crcconv.complexity import breakdown, c_wava

k = 64
print("mode  m  nu   E[L]      C_ssv     C_trace    C_list     total  x Viterbi")
for mode, m, nu, el in [("ZT", 6, 3, 1.2), ("ZT", 6, 3, 10.0), ("TB", 10, 8, 44.41), ("TB", 10, 8, 2.0)]:
    b = breakdown(mode, k, m, nu, el)
    print(f"{mode}  {m:2d} {nu:3d} {el:6.2f} {b.c_ssv:10.0f} {b.c_trace:10.0f} {b.c_list:10.0f}"
          f" {b.c_total:10.0f} {b.normalized:8.2f}")

for nu in (11, 14):
    print(f"WAVA nu={nu}, 3 iterations: {c_wava(nu, k, 3):.0f}")
