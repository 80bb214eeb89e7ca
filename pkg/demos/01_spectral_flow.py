"""Spectral flow four ways.

A path of symmetric matrices crosses zero a few times.  We count the net
signed crossings with the Morse-index difference of the endpoints, with the
crossing forms at the singular points, as a Maslov index of the graph path,
and by tracking eigen-branches directly.  All four should agree.
"""

import numpy as np

from sfmaslov import spectral as sp
from sfmaslov.spectral import OperatorPath


def rotating_family(lam):
    # two eigenvalues move in opposite directions while the eigenbasis turns
    c, s = np.cos(lam), np.sin(lam)
    R = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    return R @ np.diag([lam - 0.25, 0.6 - lam, 2.0 + lam ** 2]) @ R.T


path = OperatorPath(rotating_family, -1.0, 1.0)

print("singular points:", np.round(sp.singular_set(path), 10))
for rep in sp.spectral_flow_crossings(path).crossings:
    print(f"  λ* = {rep.lam:+.10f}  crossing form {np.round(rep.form, 6).tolist()}  signature {rep.signature:+d}")

print("morse    ", sp.spectral_flow_morse(path).value)
print("crossings", sp.spectral_flow_crossings(path).value)
res = sp.spectral_flow_maslov(path)
print("maslov   ", res.value, res.diagnostics)
print("oracle   ", sp.eigenvalue_tracking_oracle(path))

# reversing the path flips the sign; splitting it adds up
print("reversed :", sp.spectral_flow_crossings(path.reversed()).value)
left, right = path.restricted(-1.0, 0.4), path.restricted(0.4, 1.0)
print("split    :", sp.spectral_flow_morse(left).value, "+", sp.spectral_flow_morse(right).value)
