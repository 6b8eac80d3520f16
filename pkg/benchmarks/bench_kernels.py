"""Time the closed-loop kernels with numba and with the pure-Python fallback.

Each backend runs in its own interpreter because the choice is fixed at import
time by OBSLAB_NUMBA.  Reported per preset: the first call (includes JIT
compilation or cache load for numba) and the best of the repeat calls, as
microseconds per raw RK4 step.

    python3 benchmarks/bench_kernels.py --t-end 0.5 --repeat 3
"""
import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
from obslab import config
from obslab._jit import backend_name
from obslab.simkit import run_closed_loop
preset, t_end, repeat = sys.argv[1], float(sys.argv[2]), int(sys.argv[3])
s = config.set_parameter(config.load_preset(preset), "t_end", t_end)
times = []
for _ in range(repeat + 1):
    t0 = time.perf_counter()
    run_closed_loop(s)
    times.append(time.perf_counter() - t0)
print(json.dumps({"backend": backend_name(), "steps": s.nsteps, "first": times[0], "best": min(times[1:])}))
"""


def run(preset, t_end, repeat, numba):
    env = dict(os.environ, OBSLAB_NUMBA="1" if numba else "0")
    out = subprocess.run([sys.executable, "-c", CHILD, preset, str(t_end), str(repeat)],
                         env=env, check=True, capture_output=True, text=True).stdout
    return json.loads(out)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--presets", default="fig3,fig4,fig5,observer")
    p.add_argument("--t-end", type=float, default=0.5, help="simulated seconds per run")
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    print(f"{'preset':<10}{'backend':<10}{'steps':>8}{'first [s]':>12}{'us/step':>10}{'speedup':>9}")
    for preset in args.presets.split(","):
        fast = run(preset, args.t_end, args.repeat, True)
        slow = run(preset, args.t_end, args.repeat, False)
        for r in (fast, slow):
            speed = slow["best"] / r["best"]
            print(f"{preset:<10}{r['backend']:<10}{r['steps']:>8}{r['first']:>12.3f}"
                  f"{1e6 * r['best'] / r['steps']:>10.2f}{speed:>8.1f}x")


if __name__ == "__main__":
    main()
