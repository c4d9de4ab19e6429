"""Second moments of the four initial states on a ten-spin chain."""

from mqcdecay import ed
from mqcdecay.core import ChainSpec, InitialState

b = 1.0
chain = ChainSpec(10, b)
h = ed.build_dipolar(chain)
print(f"{'state':>14} " + " ".join(f"{'b tau=' + str(t):>10}" for t in (0.0, 0.2, 0.5)))
for kind in InitialState:
    vals = []
    for tau in (0.0, 0.2, 0.5):
        rho = ed.prepared_state(kind, chain, tau / b)
        vals.append(ed.second_moment_ed(rho, rho, h) / b**2)
    print(f"{kind.value:>14} " + " ".join(f"{v:10.3f}" for v in vals))
