"""Greedy vs exact on seeded synthetic instances: score ratio and how often greedy is unsatisfiable.

    python scripts/compare_solvers.py --instances 200 --users 12 --k 2 3 4
"""

import argparse
import statistics
from dataclasses import dataclass, field

from groupform import CountingPolicy, InfeasibleError, exact_construct, generate_synthetic, greedy_construct


@dataclass
class Config:
    instances: int = 100
    users: int = 12
    ks: list[int] = field(default_factory=lambda: [2, 3, 4])
    density: float = 0.5
    seed: int = 0
    policy: str = "graded"


def main(cfg: Config) -> None:
    print(f"{'k':>3} {'runs':>5} {'infeas':>6} {'no_sat':>6} {'greedy_unsat':>12} {'mean_ratio':>10} {'min_ratio':>9}")
    for k in cfg.ks:
        ratios, infeasible, none, greedy_bad = [], 0, 0, 0
        for i in range(cfg.instances):
            ds = generate_synthetic(cfg.users, seed=cfg.seed + i, density=cfg.density)
            try:
                g = greedy_construct(ds, k, CountingPolicy(cfg.policy), seed=cfg.seed + i)
            except InfeasibleError:
                infeasible += 1
                continue
            e = exact_construct(ds, k)
            if e is None:
                none += 1
                continue
            if not g.satisfiable:
                greedy_bad += 1
            elif e.total_score:
                ratios.append(float(g.total_score / e.total_score))
        mean = f"{statistics.mean(ratios):.4f}" if ratios else "-"
        low = f"{min(ratios):.4f}" if ratios else "-"
        print(f"{k:>3} {cfg.instances:>5} {infeasible:>6} {none:>6} {greedy_bad:>12} {mean:>10} {low:>9}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--instances", type=int, default=Config.instances)
    p.add_argument("--users", type=int, default=Config.users)
    p.add_argument("--k", type=int, nargs="+", default=[2, 3, 4], dest="ks")
    p.add_argument("--density", type=float, default=Config.density)
    p.add_argument("--seed", type=int, default=Config.seed)
    p.add_argument("--policy", choices=("binary", "graded"), default=Config.policy)
    main(Config(**vars(p.parse_args())))
