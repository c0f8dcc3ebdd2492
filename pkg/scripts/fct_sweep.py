"""Sweep the fault clearing time and locate the ground-truth stability threshold.

Runs a coarse grid, then bisects the first Stable/Unstable bracket.

    python scripts/fct_sweep.py [--start 0] [--stop 200] [--step 5] [--bisect 1e-4]
"""

import argparse

from pllgss.model import PhysicalParams
from pllgss.sim import FaultScenario, Outcome, fct_sweep, run_fault_scenario


def unstable(p, fct: float) -> bool:
    return run_fault_scenario(p, FaultScenario(fct=fct)).verdict_sim is Outcome.UNSTABLE


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--start", type=float, default=0.0, help="ms")
    ap.add_argument("--stop", type=float, default=200.0, help="ms")
    ap.add_argument("--step", type=float, default=5.0, help="ms")
    ap.add_argument("--bisect", type=float, default=1e-4, help="ms resolution")
    args = ap.parse_args()

    p = PhysicalParams()
    n = int((args.stop - args.start) / args.step + 1e-9)
    fcts = [(args.start + k * args.step) / 1e3 for k in range(n + 1)]
    rows = fct_sweep(p, fcts)
    print("fct_ms,v_at_clearing,lf,eac,sim")
    for r in rows:
        print(f"{r.scenario.fct * 1e3:g},{r.v_at_clearing:.6g},{r.verdict_lf.label.value},"
              f"{'Stable' if r.verdict_eac.stable else 'Unstable'},{r.verdict_sim.value}")
    flags = [r.verdict_sim is Outcome.UNSTABLE for r in rows]
    if True not in flags or flags.index(True) == 0:
        print("no Stable->Unstable bracket on this grid")
    else:
        k = flags.index(True)
        lo, hi = fcts[k - 1], fcts[k]
        while (hi - lo) * 1e3 > args.bisect:
            mid = 0.5 * (lo + hi)
            lo, hi = (lo, mid) if unstable(p, mid) else (mid, hi)
        prefix = all(flags[k:])
        print(f"critical clearing time in ({lo * 1e3:.4f}, {hi * 1e3:.4f}) ms; "
              f"stable prefix: {prefix}")
