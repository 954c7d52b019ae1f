"""
Cross-checking closed forms against brute-force simulation
==========================================================

Every closed-form expression is compared with an independent engine: a
truncated Fock-space state-vector simulation for the motion and a Lindblad
master equation for the spins.  The quick checks run in a few seconds; pass
``--all`` for the full set (about half a minute).
"""

import sys

from squeezeion.oracle.checks import REGISTRY, manifest, run_checks

quick = ["segment-displacement", "decoupling-closure", "lindblad-correlators", "driven-ising"]
names = list(REGISTRY) if "--all" in sys.argv else quick

results = run_checks(names)
for r in results:
    flag = "ok  " if r.passed else "FAIL"
    print(f"{flag} {r.name:24s} max deviation {r.max_deviation:.2e} (tol {r.tolerance:.0e}, {r.cases} cases)")
m = manifest(results)
print(f"\ncovered: {', '.join(m['covered_closed_forms'])}")
