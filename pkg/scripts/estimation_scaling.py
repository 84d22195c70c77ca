"""Frequency-estimation cost ladder on the adversarial oracle.

Writes the accuracy and cost of each precision together with a log-log plot
of total evolution time and experiment count against the inverse precision.

    python3 scripts/estimation_scaling.py --trials 500 --out out/estimation
"""

import argparse
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from boson_hamlearn.cli import write_csv
from boson_hamlearn.protocol import budget_report, estimation_sweep
from boson_hamlearn.svg import line_plot


@dataclass
class RunOptions:
    eps: list[float] = field(default_factory=lambda: [0.1, 0.03, 0.01, 0.003])
    trials: int = 500
    seed: int = 0
    out: Path = Path("out/estimation")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--eps", type=float, nargs="+", default=RunOptions().eps)
    parser.add_argument("--trials", type=int, default=RunOptions.trials)
    parser.add_argument("--seed", type=int, default=RunOptions.seed)
    parser.add_argument("--out", type=Path, default=RunOptions.out)
    opts = RunOptions(**vars(parser.parse_args()))
    opts.out.mkdir(parents=True, exist_ok=True)

    rows = estimation_sweep(opts.eps, math.pi, opts.trials, opts.seed)
    summary = budget_report(rows, math.pi)
    write_csv(opts.out / "estimation.csv", ["eps", "rmse", "T", "Gamma"],
              [[r["eps"], r["rmse"], r["T"], r["Gamma"]] for r in rows])
    (opts.out / "summary.json").write_text(json.dumps(summary.to_dict(), indent=2) + "\n")
    xs = [1 / r["eps"] for r in rows]
    line_plot({"T": (xs, [r["T"] for r in rows]), "Gamma": (xs, [r["Gamma"] for r in rows])},
              opts.out / "estimation.svg", title="estimation cost", xlabel="1/eps", ylabel="cost",
              logx=True, logy=True)
    for r in rows:
        print(f"eps {r['eps']:.3g}: rmse {r['rmse']:.3e}, T*eps {r['T'] * r['eps']:.1f}, Gamma {r['Gamma']}")
    print(f"T*eps spread {summary.time_eps_spread:.2f}, time slope {summary.time_slope:.3f}")


if __name__ == "__main__":
    main()
