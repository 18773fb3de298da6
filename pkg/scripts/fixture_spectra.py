"""Print Eigentrust and MaxTrust results on the three shipped 3-agent matrices."""

import numpy as np

from maxtrust import fixtures
from maxtrust import maxplus as mp
from maxtrust import spectral as sp
from maxtrust import trust as tr

np.set_printoptions(precision=6, suppress=True)

for name in fixtures.FILES:
    c = fixtures.load(name)
    print(f"== {name}")
    print(f"   classification: {sp.classify_matrix(c)}")
    et = tr.eigentrust(c, epsilon=1e-12)
    print(f"   eigentrust: {et.values} dominant={et.dominant} iterations={et.iterations}")
    if sp.is_irreducible(c, sp.CONVENTIONAL):
        print(f"   linear solve: {sp.stationary_distribution(c)}")
    sol = tr.maxtrust(mp.from_conventional(c), T=5)
    print(f"   maxtrust T=5: xi={sol.xi} t={sol.t.values} ranking={sol.t.ranking.tolist()}")
