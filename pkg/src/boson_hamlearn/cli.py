"""Command-line entry point: ``boson-hamlearn <subcommand> --config run.json``.

The configuration is one JSON document with optional sections
``hamiltonian`` (or ``hamiltonian_file``), ``dissipation``, ``learn``,
``sweep``, ``verify``, ``simulate``, ``calibrate`` and ``output``.  Every
subcommand writes CSV (17 significant digits) and/or JSON into ``--out``;
failures exit nonzero with a JSON error object on stderr.

Hamiltonian section: either a serialized model (``m``, ``d``, ``k``,
``terms``) or a generator ``{"generator": "single_mode", "d": 2, "seed": 0}``
/ ``{"generator": "chain", "m": 4, "mode_degree": 1, "seed": 0}``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .experiment import AncillaJointState
from .fock import FockSpace, number
from .hamiltonian import BosonicHamiltonian, ConfigurationError, chain_hamiltonian, random_single_mode, to_operator
from .lindblad import DissipationSpec, Generator, Jump, evolve, kernel_projector, trace_distance
from .protocol import (
    ExactBackend,
    LearnConfig,
    budget_report,
    estimation_sweep,
    learn_few_mode,
    learn_multi_mode,
    learn_single_mode,
    make_backend,
    _jsonable,
)
from .svg import line_plot
from .verify import calibrate_gamma, learning_dissipation, projected_evolution, scorecard, superposition_state

log = logging.getLogger("boson_hamlearn")

SECTIONS = {"hamiltonian", "hamiltonian_file", "dissipation", "learn", "sweep", "verify", "simulate", "calibrate",
            "output"}

DEFAULTS_HELP = """\
defaults:
  learn      LearnConfig defaults (eps=0.1, delta=0.1, d=2, backend=exact-oracle,
             c3=21, c4=12, shots=100, interval a_minus=1.5*sqrt(log(1/eps)),
             a_plus=5*a_minus, gamma_policy=calibrate, dims=40, truncation=kernel);
             extra key "mode": auto|single|few|multi
  sweep      kind=eps, eps=[0.1, 0.03, 0.01], phi=pi, trials=100, q=1/3
             (kind=m: ms=[2, 3, 4], eps=0.15, interval [3, 6])
  verify     the full default scorecard
  simulate   alphas=[2.0], dims=[30], gamma=100, times=[0, 0.5, 1], d from the Hamiltonian
  calibrate  alphas=[2.0], dims=[30], t_max=5, target=0.05
environment:
  BOSON_HAMLEARN_LOG  log level (DEBUG, INFO, WARNING; default WARNING)
"""


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# config handling


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    text = Path(path).read_text()
    if not text.strip():
        raise UsageError(f"configuration file {path} is empty")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"configuration file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not doc:
        raise UsageError("configuration must be a non-empty JSON object")
    unknown = set(doc) - SECTIONS
    if unknown:
        raise UsageError(f"unknown configuration sections {sorted(unknown)}")
    return doc


def load_hamiltonian(config: dict, base: Path | None = None) -> BosonicHamiltonian:
    if "hamiltonian_file" in config:
        p = Path(config["hamiltonian_file"])
        if base is not None and not p.is_absolute():
            p = base / p
        return BosonicHamiltonian.load(p)
    doc = config.get("hamiltonian")
    if doc is None:
        raise UsageError("configuration needs a 'hamiltonian' or 'hamiltonian_file' section")
    if "generator" in doc:
        rng = np.random.default_rng(int(doc.get("seed", 0)))
        if doc["generator"] == "single_mode":
            return random_single_mode(rng, int(doc.get("d", 2)), float(doc.get("scale", 1.0)))
        if doc["generator"] == "chain":
            return chain_hamiltonian(rng, int(doc.get("m", 4)), int(doc.get("mode_degree", 1)),
                                     float(doc.get("scale", 1.0)), int(doc.get("d", 2)))
        raise UsageError(f"unknown Hamiltonian generator {doc['generator']!r}")
    return BosonicHamiltonian.from_dict(doc)


def write_json(path: Path, obj: Any) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    def fmt(v):
        if isinstance(v, (float, np.floating)):
            return format(float(v), ".17g")
        if isinstance(v, (list, tuple)):
            return " ".join(fmt(x) for x in v)
        return str(v)

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def _wants(fmt: str, kind: str) -> bool:
    return fmt == "both" or fmt == kind


# ---------------------------------------------------------------------------
# subcommands


def cmd_learn(args, config: dict, out: Path) -> int:
    H = load_hamiltonian(config, args.config_dir)
    sec = dict(config.get("learn", {}))
    mode = sec.pop("mode", "auto")
    q = float(sec.pop("corruption", 0.0))
    noise = float(sec.pop("noise", 0.0))
    cfg = LearnConfig.from_dict(sec)
    backend = ExactBackend(H, q, noise) if cfg.backend == "exact-oracle" else make_backend(H, cfg)
    rng = np.random.default_rng(args.seed)
    if mode == "auto":
        mode = "single" if H.m == 1 else ("few" if H.m <= cfg.k else "multi")
    if mode == "single":
        report = learn_single_mode(backend, cfg, rng)
    elif mode == "few":
        report = learn_few_mode(backend, cfg, rng)
    elif mode == "multi":
        report = learn_multi_mode(backend, H.supports, cfg, rng)
    else:
        raise UsageError(f"unknown learn mode {mode!r}")
    report.diagnostics["max_error_vs_config"] = report.max_error(H)
    report.diagnostics["seed"] = args.seed
    if _wants(args.format, "json"):
        (out / "report.json").write_text(report.to_json())
    if _wants(args.format, "csv"):
        report.write_coefficients_csv(out / "coefficients.csv")
    log.info("learn: max error %.3e, T=%.6g", report.diagnostics["max_error_vs_config"], report.total_evolution_time)
    return 0


def _m_point(payload: tuple) -> dict:
    m, eps, seed, a, b = payload
    H = chain_hamiltonian(np.random.default_rng([seed, m]), m, 1)
    cfg = LearnConfig(eps=eps, d=2, k=2, mode_degree=1, a_minus=a, a_plus=b, interval_policy="lemma")
    rep = learn_multi_mode(ExactBackend(H), H.supports, cfg, np.random.default_rng([seed, m, 1]))
    return {"eps": eps, "T": rep.total_evolution_time, "Gamma": rep.experiment_count, "max_err": rep.max_error(H),
            "seed": seed, "gamma": "", "dims": "", "m": m}


def _eps_point(payload: tuple) -> dict:
    eps, phi, trials, seed, q, c3, c4 = payload
    row = estimation_sweep([eps], phi, trials, seed, q=q, c3=c3, c4=c4)[0]
    return {"eps": eps, "T": row["T"], "Gamma": row["Gamma"], "max_err": row["rmse"], "seed": seed, "gamma": "",
            "dims": "", "m": 1}


def _pool_map(fn, payloads: list, jobs: int) -> list:
    if jobs <= 1 or len(payloads) <= 1:
        return [fn(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, payloads))


def cmd_sweep(args, config: dict, out: Path) -> int:
    sec = config.get("sweep", {})
    kind = sec.get("kind", "eps")
    if kind == "eps":
        phi = float(sec.get("phi", math.pi))
        eps_list = [float(e) for e in sec.get("eps", [0.1, 0.03, 0.01])]
        payloads = [(e, phi, int(sec.get("trials", 100)), args.seed, float(sec.get("q", 1 / 3)),
                     int(sec.get("c3", 21)), int(sec.get("c4", 12))) for e in eps_list]
        rows = _pool_map(_eps_point, payloads, args.jobs)
        summary = budget_report(rows, phi)
        xlabel = "1/eps"
        xs = [1 / r["eps"] for r in rows]
    elif kind == "m":
        eps = float(sec.get("eps", 0.15))
        a, b = sec.get("interval", [3.0, 6.0])
        payloads = [(int(m), eps, args.seed, float(a), float(b)) for m in sec.get("ms", [2, 3, 4])]
        rows = _pool_map(_m_point, payloads, args.jobs)
        summary = None
        xlabel = "m"
        xs = [r["m"] for r in rows]
    else:
        raise UsageError(f"unknown sweep kind {kind!r}")
    header = ["eps", "T", "Gamma", "max_err", "seed", "gamma", "dims", "m"]
    if _wants(args.format, "csv"):
        write_csv(out / "budget.csv", header, [[r[h] for h in header] for r in rows])
    if _wants(args.format, "json"):
        write_json(out / "budget.json", {"rows": rows, "summary": summary.to_dict() if summary else None})
    line_plot({"T": (xs, [r["T"] for r in rows]), "Gamma": (xs, [r["Gamma"] for r in rows])},
              out / "budget.svg", title=f"{kind} sweep", xlabel=xlabel, ylabel="cost", logx=True, logy=True)
    return 0


def cmd_verify(args, config: dict, out: Path) -> int:
    card = scorecard()
    if _wants(args.format, "json"):
        write_json(out / "scorecard.json", card)
    if _wants(args.format, "csv"):
        ad = card["adiabatic"]
        write_csv(out / "adiabatic_ladder.csv", ["gamma", "trace_distance"], list(zip(ad["gammas"], ad["distances"])))
        for r in (1, 2):
            c = card[f"cat_r{r}"]
            write_csv(out / f"cat_r{r}.csv", ["t", "weighted_ratio", "envelope", "distance_to_limit", "distance_to_code"],
                      list(zip(c["times"], c["weighted_ratio"], c["envelope"], c["distance_to_limit"],
                               c["distance_to_code"])))
        eh = card["effective_hamiltonian"]["rows"]
        write_csv(out / "effective_hamiltonian.csv", ["amplitude", "error", "envelope"],
                  [(r["amplitude"], r["error"], r["envelope"]) for r in eh])
    ad = card["adiabatic"]
    line_plot({"trace distance": (ad["gammas"], ad["distances"])}, out / "adiabatic_ladder.svg",
              title="adiabatic gap", xlabel="gamma", ylabel="trace distance", logx=True, logy=True)
    failed = sorted(k for k, v in card.items() if not v["ok"])
    if failed:
        _error("VerificationFailed", f"checks failed: {', '.join(failed)}", failed=failed)
        return 1
    return 0


def _simulation_setup(config: dict, sec: dict, base) -> tuple:
    H = load_hamiltonian(config, base) if ("hamiltonian" in config or "hamiltonian_file" in config) else None
    alphas = [complex(*a) if isinstance(a, list) else complex(a) for a in sec.get("alphas", [2.0])]
    dims = tuple(int(d) for d in sec.get("dims", [30] * len(alphas)))
    if H is not None and H.m != len(alphas):
        raise UsageError(f"Hamiltonian has {H.m} modes but {len(alphas)} amplitudes were given")
    return H, alphas, dims


def _dissipation_from_config(config: dict, alphas, d: int, gamma: float) -> DissipationSpec:
    sec = config.get("dissipation")
    if not sec:
        return learning_dissipation(alphas, d, gamma, sec.get("truncation", "kernel") if sec else "kernel")
    jumps = [Jump(j["kind"], int(j["mode"]), int(j.get("r", 1)), complex(j.get("alpha", 0.0)),
                  j.get("truncation", "compress")) for j in sec.get("jumps", [])]
    return DissipationSpec(tuple(jumps), float(sec.get("gamma", gamma)))


def cmd_simulate(args, config: dict, out: Path) -> int:
    sec = config.get("simulate", {})
    H, alphas, dims = _simulation_setup(config, sec, args.config_dir)
    space = FockSpace(dims)
    d = H.d if H is not None else 2
    diss = _dissipation_from_config(config, alphas, d, float(sec.get("gamma", 100.0)))
    gen = Generator.build(space, H, diss)
    times = [float(t) for t in sec.get("times", [0.0, 0.5, 1.0])]
    init = sec.get("initial", "superposition")
    if init == "superposition":
        rho0 = superposition_state(space, alphas)
    elif init == "ancilla_coherence":
        rho0 = 2 * AncillaJointState.prepare(space, alphas).rho10
    else:
        raise UsageError(f"unknown initial state {init!r}")
    P = kernel_projector(diss.jumps, space).matrix
    Hm = gen.hamiltonian
    nums = [number(space, q).matrix for q in range(space.n_modes)]
    rows = []
    for t in times:
        rho = evolve(gen, rho0, t, method=sec.get("method", "auto"), check_positivity=init == "superposition")
        ideal = projected_evolution(Hm, P, P @ rho0 @ P, t)
        herm = 0.5 * (rho + rho.conj().T)
        rows.append([t, np.trace(rho).real, np.trace(rho @ rho).real,
                     [np.trace(n @ rho).real for n in nums], np.trace(P @ rho @ P).real,
                     trace_distance(rho, ideal), float(np.linalg.eigvalsh(herm).min())])
    header = ["t", "trace", "purity", "photon_numbers", "kernel_population", "distance_to_projected",
              "min_eigenvalue"]
    if _wants(args.format, "csv"):
        write_csv(out / "simulation.csv", header, rows)
    if _wants(args.format, "json"):
        write_json(out / "simulation.json", [dict(zip(header, r)) for r in rows])
    return 0


def cmd_calibrate(args, config: dict, out: Path) -> int:
    sec = config.get("calibrate", {})
    H, alphas, dims = _simulation_setup(config, sec, args.config_dir)
    if H is None:
        raise UsageError("calibrate needs a Hamiltonian")
    res = calibrate_gamma(H, alphas, float(sec.get("t_max", 5.0)), float(sec.get("target", 0.05)), dims=dims,
                          truncation=sec.get("truncation", "kernel"), gamma_hi=float(sec.get("gamma_max", 1e6)))
    if _wants(args.format, "json"):
        write_json(out / "calibration.json", res.to_dict())
    if _wants(args.format, "csv"):
        write_csv(out / "calibration.csv", ["gamma", "trace_distance"], sorted(res.evaluations))
    print(json.dumps({"gamma": res.gamma, "distance": res.distance}))
    return 0


COMMANDS = {"learn": cmd_learn, "sweep": cmd_sweep, "verify": cmd_verify, "simulate": cmd_simulate,
            "calibrate": cmd_calibrate}


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON configuration document")
    common.add_argument("--seed", type=int, default=0, metavar="U64", help="random seed (default 0)")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1, metavar="N",
                        help="worker processes for independent points (default: logical cores)")
    common.add_argument("--out", default="out", metavar="DIR", help="output directory (default ./out)")
    common.add_argument("--format", choices=("csv", "json", "both"), default="both", help="output format")
    parser = argparse.ArgumentParser(
        prog="boson-hamlearn",
        description="Hamiltonian learning for bosonic systems with engineered dissipation.",
        epilog=DEFAULTS_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command")
    helps = {
        "learn": "learn coefficients of a Hamiltonian; writes report.json and coefficients.csv",
        "sweep": "eps- or m-ladder cost study; writes budget.csv and budget.svg",
        "verify": "numerical scorecard of the convergence and spectral checks",
        "simulate": "raw master-equation run with state diagnostics",
        "calibrate": "smallest dissipation strength meeting an adiabatic-gap target",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text, epilog=DEFAULTS_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    return parser


def _error(kind: str, message: str, **extra) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message, **extra}, sort_keys=True) + "\n")


def main(argv: Sequence[str] | None = None) -> int:
    level = os.environ.get("BOSON_HAMLEARN_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        _error("UsageError", "a subcommand is required")
        return 2
    if args.seed < 0 or args.seed >= 2**64:
        _error("UsageError", "seed must be an unsigned 64-bit integer")
        return 2
    try:
        config = load_config(args.config)
        if args.config is None and args.command in ("learn",):
            raise UsageError(f"'{args.command}' needs --config")
        args.config_dir = Path(args.config).resolve().parent if args.config else None
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args, config, out)
    except (UsageError, ConfigurationError, FileNotFoundError) as exc:
        _error(type(exc).__name__, str(exc))
        return 2
    except Exception as exc:  # noqa: BLE001 - surfaced as machine-readable error
        log.debug("failure", exc_info=True)
        _error(type(exc).__name__, str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
