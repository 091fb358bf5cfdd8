"""Config-driven command line front end.

Three subcommands:

* ``run --config c.json [--out dir] [--svg]`` executes every
  (algorithm x scenario) cell of an experiment config and writes one CSV
  trace per cell plus a manifest with all resolved seeds and the
  centralized solution.
* ``verify --graph ring --n-agents 5 --dim 1 --rho 0.3`` runs the
  aggregate-matrix checks and prints a JSON report.
* ``tune --config c.json`` line-searches the closed-loop spectral rate
  for each configured algorithm (quadratic problems only).

Exit codes: 0 success, 1 failed check, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import analysis, graph, netsim, problems
from .algorithms import HyperParams


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Config parsing

@dataclass
class ExperimentConfig:
    problem: dict
    graph: dict
    algorithms: list
    T: int
    init_seed: int
    schedule: dict | None = None
    scenarios: list = field(default_factory=lambda: [{"name": "base", "noise": None}])
    out_dir: str = "results"
    tune: dict | None = None

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as e:
            raise ConfigError(f"cannot read config {path!r}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(
                f"invalid JSON in {path!r} at line {e.lineno}, column {e.colno}: "
                f"{e.msg}"
            ) from e
        known = {f for f in cls.__dataclass_fields__}
        extra = set(raw) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        missing = {"problem", "graph", "algorithms", "T", "init_seed"} - set(raw)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.T < 1:
            raise ConfigError("T must be >= 1")
        if not self.algorithms:
            raise ConfigError("algorithms must be nonempty")
        for a in self.algorithms:
            if a.get("name") not in netsim.ALGORITHMS:
                raise ConfigError(f"unknown algorithm {a.get('name')!r}")
            if a["name"] in ("RATG", "PS") and self.schedule is None:
                raise ConfigError(f"{a['name']} requires a schedule spec")
        if self.problem.get("kind") not in ("quadratic", "logistic"):
            raise ConfigError(f"unknown problem kind {self.problem.get('kind')!r}")
        for s in self.scenarios:
            if "name" not in s:
                raise ConfigError("every scenario needs a name")
            noise = s.get("noise")
            if noise is not None and ("eps" not in noise or "seed" not in noise):
                raise ConfigError("noise spec needs eps and seed")
        if self.schedule is not None:
            if self.schedule.get("kind") != "bernoulli":
                raise ConfigError("schedule kind must be 'bernoulli'")
            if "seed" not in self.schedule:
                raise ConfigError("schedule spec needs a seed")

    def build_problem(self):
        p = self.problem
        if p["kind"] == "quadratic":
            lo, hi = p["eig_range"]
            rlo, rhi = p["r_range"]
            return problems.random_quadratic(
                p["N"], p["n"], lo, hi, rlo, rhi, p["seed"]
            )
        return problems.random_logistic(
            p["N"], p["n"], p["m_per_agent"], p["C"], p["seed"]
        )

    def build_graph(self, n_agents: int) -> graph.Topology:
        g = self.graph
        kind = g.get("kind")
        if kind == "er":
            return graph.erdos_renyi(n_agents, g["p"], g["seed"])
        makers = {
            "ring": graph.ring,
            "complete": graph.complete,
            "star": graph.star,
            "path": graph.path,
        }
        if kind not in makers:
            raise ConfigError(f"unknown graph kind {kind!r}")
        return makers[kind](n_agents)

    def build_schedule(self, topo: graph.Topology) -> netsim.Schedule | None:
        if self.schedule is None:
            return None
        seed = self.schedule["seed"]
        lo, hi = self.schedule.get("prob_range", [0.1, 1.0])
        rng = np.random.default_rng([seed, 0x5EED])
        ap = rng.uniform(lo, hi, size=topo.n_agents)
        dp = rng.uniform(lo, hi, size=topo.n_slots)
        return netsim.bernoulli_schedule(topo, ap, dp, self.T, seed)


def _hyper(a: dict) -> HyperParams:
    return HyperParams(
        gamma=a["gamma"],
        delta=a.get("delta", 1.0),
        alpha=a.get("alpha", 0.5),
        rho=a.get("rho", 1.0),
    )


# ---------------------------------------------------------------------------
# Output helpers

def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _svg_polyline(trace: netsim.Trace, title: str) -> str:
    """Log-scale error-vs-iteration polyline, no plotting dependency."""
    w, hgt, pad = 640, 400, 45
    err = np.maximum(np.asarray(trace.err_opt), 1e-300)
    y = np.log10(err)
    t = np.asarray(trace.t, dtype=float)
    y_lo, y_hi = float(y.min()), float(y.max())
    if y_hi - y_lo < 1e-12:
        y_hi = y_lo + 1.0
    xs = pad + (w - 2 * pad) * (t / max(t[-1], 1.0))
    ys = hgt - pad - (hgt - 2 * pad) * (y - y_lo) / (y_hi - y_lo)
    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(xs, ys))
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{hgt}" '
        f'viewBox="0 0 {w} {hgt}">\n'
        f'<rect width="{w}" height="{hgt}" fill="white"/>\n'
        f'<text x="{w // 2}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>\n'
        f'<line x1="{pad}" y1="{hgt - pad}" x2="{w - pad}" y2="{hgt - pad}" '
        f'stroke="black"/>\n'
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{hgt - pad}" '
        f'stroke="black"/>\n'
        f'<text x="{pad - 5}" y="{pad}" text-anchor="end" font-size="11" '
        f'font-family="sans-serif">1e{y_hi:.0f}</text>\n'
        f'<text x="{pad - 5}" y="{hgt - pad}" text-anchor="end" font-size="11" '
        f'font-family="sans-serif">1e{y_lo:.0f}</text>\n'
        f'<polyline points="{pts}" fill="none" stroke="steelblue" '
        f'stroke-width="1.5"/>\n'
        "</svg>\n"
    )


# ---------------------------------------------------------------------------
# Subcommands

def cmd_run(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    out_dir = args.out or cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)

    problem = cfg.build_problem()
    topo = cfg.build_graph(problem.N)
    schedule = cfg.build_schedule(topo)
    x_star = problems.centralized_solve(problem)

    cells = []
    for a in cfg.algorithms:
        h = _hyper(a)
        for sc in cfg.scenarios:
            noise = sc.get("noise")
            spec = (
                netsim.NoiseSpec(noise["eps"], noise["seed"])
                if noise is not None
                else None
            )
            trace = netsim.run_simulation(
                a["name"],
                problem,
                topo,
                h,
                schedule,
                spec,
                cfg.T,
                cfg.init_seed,
                x_star=x_star,
            )
            name = f"{a['name']}_{sc['name']}"
            path = os.path.join(out_dir, f"{name}.csv")
            _atomic_write(path, trace.to_csv())
            if args.svg:
                _atomic_write(
                    os.path.join(out_dir, f"{name}.svg"),
                    _svg_polyline(trace, name),
                )
            cells.append(
                {
                    "algorithm": a["name"],
                    "scenario": sc["name"],
                    "csv": f"{name}.csv",
                    "final_err_max_agent": trace.err_max_agent[-1],
                }
            )

    manifest = {
        "config": {
            "problem": cfg.problem,
            "graph": cfg.graph,
            "algorithms": cfg.algorithms,
            "schedule": cfg.schedule,
            "scenarios": cfg.scenarios,
            "T": cfg.T,
            "init_seed": cfg.init_seed,
        },
        "x_star": np.asarray(x_star).tolist(),
        "graph_edges": sorted(map(list, topo.edges)),
        "schedule_window": None if schedule is None else schedule.t_max,
        "cells": cells,
        "backend": __import__(
            "admmtrack._backend", fromlist=["BACKEND"]
        ).BACKEND,
    }
    _atomic_write(
        os.path.join(out_dir, "manifest.json"),
        json.dumps(manifest, indent=2, sort_keys=True) + "\n",
    )
    return 0


def _build_verify_graph(args) -> graph.Topology:
    if args.graph == "er":
        if args.p is None or args.seed is None:
            raise ConfigError("--graph er requires --p and --seed")
        return graph.erdos_renyi(args.n_agents, args.p, args.seed)
    makers = {
        "ring": graph.ring,
        "complete": graph.complete,
        "star": graph.star,
        "path": graph.path,
    }
    return makers[args.graph](args.n_agents)


def cmd_verify(args) -> int:
    topo = _build_verify_graph(args)
    m = analysis.build_aggregate_matrices(topo, args.dim, args.rho)
    kb = analysis.kernel_basis(m)
    probe = problems.random_quadratic(
        topo.n_agents, args.dim, 1.0, 5.0, -10.0, 20.0, args.probe_seed
    )
    rng = np.random.default_rng(args.probe_seed)
    x_probe = rng.uniform(-5.0, 5.0, size=(topo.n_agents, args.dim))
    reports = [
        analysis.check_lemma1(kb, m),
        analysis.check_schur_F(kb, m, args.alphas),
        analysis.equilibrium_residuals(kb, m, probe, x_probe),
    ]
    for r in reports:
        r.pop("z_eq", None)
    ok = all(r["pass"] for r in reports)
    failing = [
        f"{r['check']}:{k}"
        for r in reports
        if not r["pass"]
        for k, v in r["residuals"].items()
    ]
    print(
        json.dumps(
            {"reports": reports, "pass": ok, "failing": failing if not ok else []},
            indent=2,
        )
    )
    return 0 if ok else 1


def cmd_tune(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    problem = cfg.build_problem()
    if not isinstance(problem, problems.QuadraticProblem):
        raise ConfigError("tune supports quadratic problem configs only")
    topo = cfg.build_graph(problem.N)
    tune = cfg.tune or {}
    step = tune.get("step", 0.05)
    rho_grid = tune.get("rho_grid", [round(0.05 * k, 3) for k in range(1, 21)])
    delta_grid = tune.get("delta_grid", [round(0.05 * k, 3) for k in range(1, 21)])
    gammas = np.arange(step, 1.0, step)

    out = {}
    for a in cfg.algorithms:
        name = a["name"]
        if name in ("ATG", "RATG"):
            grid = [
                HyperParams(g, g, g, rho) for g in gammas for rho in rho_grid
            ]
            algo = "ATG"
        elif name == "GT":
            grid = [
                HyperParams(g, d, 0.5, 1.0) for g in gammas for d in delta_grid
            ]
            algo = "GT"
        else:
            raise ConfigError(f"no closed-loop form to tune for {name!r}")
        best, rate = analysis.rate_line_search(algo, problem, topo, grid)
        out[name] = {
            "gamma": best.gamma,
            "delta": best.delta,
            "alpha": best.alpha,
            "rho": best.rho,
            "rate": rate,
        }

    out_dir = args.out or cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    _atomic_write(
        os.path.join(out_dir, "tuned.json"),
        json.dumps(out, indent=2, sort_keys=True) + "\n",
    )
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="admmtrack",
        description="distributed tracking-algorithm simulator and checks",
    )
    sub = p.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute an experiment config")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--out", default=None)
    run_p.add_argument("--svg", action="store_true")
    run_p.set_defaults(func=cmd_run)

    ver_p = sub.add_parser("verify", help="run the structural numeric checks")
    ver_p.add_argument(
        "--graph",
        required=True,
        choices=["ring", "complete", "star", "path", "er"],
    )
    ver_p.add_argument("--n-agents", type=int, required=True)
    ver_p.add_argument("--dim", type=int, default=1)
    ver_p.add_argument("--rho", type=float, required=True)
    ver_p.add_argument("--p", type=float, default=None)
    ver_p.add_argument("--seed", type=int, default=None)
    ver_p.add_argument("--probe-seed", type=int, default=0)
    ver_p.add_argument(
        "--alphas", type=float, nargs="+", default=[0.1, 0.5, 0.9]
    )
    ver_p.set_defaults(func=cmd_verify)

    tune_p = sub.add_parser("tune", help="spectral-rate line search")
    tune_p.add_argument("--config", required=True)
    tune_p.add_argument("--out", default=None)
    tune_p.set_defaults(func=cmd_tune)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, graph.GraphConstructionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except analysis.AnalysisError as e:
        print(f"check failed: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
