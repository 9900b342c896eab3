"""Ball growth and root visits in the standard frog model.

Runs the standard frog model on the binary tree with Poisson(20) sleepers
and prints D_t, the deepest fully visited level, and V_t, the number of
root visits.  The number of awake frogs grows exponentially, so a full run
hits the frog cap a little after t = 20; the script shows the truncation
error and its partial trace.  Root visits to T = 40 stay cheap by keeping
only frogs that can still get back to the root in time.

    python demos/04_ball_growth.py
"""

import numpy as np

from froglab import engine as E
from froglab.tree import TreeKind

if __name__ == "__main__":
    tree = TreeKind.rooted(2)
    cfg = E.SimConfig(tree, E.Variant.STANDARD, E.InitLaw.poisson(20.0), 18, seed=3)
    tr = E.run(cfg)
    print("t   D_t   V_t   awake frogs")
    for t in range(0, 19, 2):
        print(f"{t:2d}  {tr.D[t]:4d}  {tr.V[t]:4d}   {tr.active[t]}")

    print("\nextending to T = 40 ...")
    try:
        E.run(cfg.replace(horizon=40))
    except E.TruncationError as exc:
        done = exc.trace.steps_completed
        print(f"truncated: {exc}")
        print(f"partial D_t for t <= {done}: {exc.trace.D[: done + 1].tolist()}")

    light_cone = cfg.replace(horizon=40, observe_depth=0)
    batch = E.run_trials(light_cone, 20)
    V = batch.V
    print(f"\nroot visits over 20 runs to T = 40: median V_20 = {np.median(V[:, 20]):g}, median V_40 = {np.median(V[:, 40]):g}")
