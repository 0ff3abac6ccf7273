"""Independent evaluation of the second-order mapping for a uniform 3-site chain.

n = 70 anchor (C6 = 137270.7 MHz um^6), 3 um spacing, Omega = 2pi x 1 MHz,
delta0 = -2pi x 30 MHz, no site detunings, all pairs. Prints rad/us values.
"""
import math

W = 2 * math.pi
C6 = W * 137270.7
om = W * 1.0
d0 = -W * 30.0
x = [0.0, 3.0, 6.0]
D = [d0, d0, d0]


def V(a, b):
    return C6 / abs(x[a] - x[b]) ** 6


mu = []
for l in range(3):
    s = -D[l] - om**2 / (2 * D[l])
    for lp in range(3):
        if lp != l:
            s += om**2 * V(l, lp) / (4 * D[lp] * (D[lp] - V(l, lp)))
    mu.append(s)
J = {}
for a, b in [(0, 1), (1, 2), (0, 2)]:
    v = V(a, b)
    J[(a, b)] = om**2 * v / 8 * (1 / (D[a] * (D[a] - v)) + 1 / (D[b] * (D[b] - v)))
print("mu", [f"{m:.15e}" for m in mu])
print("J", {k: f"{v:.15e}" for k, v in J.items()})
