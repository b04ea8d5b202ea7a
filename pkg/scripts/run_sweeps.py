"""Run every config in configs/ (or the ones given) and print check results and slopes."""

import argparse
import glob
import os
import time

from wgspec.harness import load_config, run_experiment

HERE = os.path.dirname(os.path.abspath(__file__))


def main():
    p = argparse.ArgumentParser()
    p.add_argument("configs", nargs="*")
    p.add_argument("--out", default=os.path.join(HERE, "..", "results"))
    p.add_argument("--threads", type=int, default=2)
    args = p.parse_args()
    paths = args.configs or sorted(glob.glob(os.path.join(HERE, "..", "configs", "*.json")))
    for path in paths:
        cfg = load_config(path)
        if not cfg.full:
            continue
        t0 = time.perf_counter()
        rec = run_experiment(cfg, out_dir=os.path.join(args.out, cfg.name or os.path.basename(path)[:-5]),
                             threads=args.threads)
        verdict = all(c["pass"] for c in rec.checks.values())
        print(f"{cfg.name}: {'PASS' if verdict else 'FAIL'} in {time.perf_counter() - t0:.1f}s")
        for v, s in rec.slopes.items():
            print(f"  slope[{v}] = {s.get('slope', float('nan')):.3f}")
        for row in rec.distances:
            print(f"  eps={row[0]:<6g} {row[1]:<15s} window=[{row[2]:.5f}, {row[3]:.5f}] "
                  f"haus={row[4]:.3e} pair={row[5]:.3e}")


if __name__ == "__main__":
    main()
