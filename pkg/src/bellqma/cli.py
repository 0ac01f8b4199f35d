"""Experiment harness.

Subcommands::

    bellqma validate <graph.json> [--budget N]
    bellqma run   -c config.json [flags]
    bellqma sweep -c config.json --grid "C=8,16,32" [--plot] [flags]
    bellqma audit -c config.json [flags]

Common flags: ``--seed``, ``--trials``, ``--workers``, ``--format csv|json``,
``--out PATH``, ``--dump-states``; they override the corresponding config
fields.  Every artifact is a pure function of the config plus flags, so a
repeated invocation is byte-identical, including across worker counts.
Exit codes: 0 success / all audits pass, 1 failed validation or audit,
2 usage or config error.

Config file (JSON)::

    {
      "instance": {"path": "graph.json"}
                  or {"generator": {"kind": "odd_cycle_neq",
                                    "params": {"n": 5}, "seed": 0}},
      "strategy": {"kind": "honest", "coloring": "best"},
      "protocol": {"C": 16, "trials": 20000, "seed": 7},
      "analysis": {"epsilon": "1/105", "m_prime": [12, 24],
                   "audits": ["chernoff", "soundness", "second_moment"],
                   "budget": 1048576},
      "output": {"format": "json", "path": "out.json", "dump_states": false}
    }

Coloring-valued strategy parameters may name a coloring stored in the
instance file, the generator's ``"planted"`` coloring, or ``"best"`` (the
exhaustive-search witness).  ``analysis.epsilon`` defaults to ``eta / 21``
from an exhaustive gap certificate and must be given explicitly otherwise.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .analysis import (
    chernoff_audit,
    coloring_rule,
    default_epsilon,
    second_moment_audit,
    soundness_report,
)
from .graphs import (
    DEFAULT_GAP_BUDGET,
    certify_gap,
    generate,
    instance_digest,
    load_graph,
    satisfied_fraction,
    validate,
)
from .protocol import ProtocolParams, estimate_acceptance
from .results import (
    AUDIT_COLUMNS,
    COLLISION_COLUMNS,
    RUN_COLUMNS,
    SWEEP_COLUMNS,
    render,
    run_row,
)
from .rng import derive_seed
from .states import state_records
from .strategies import strategy_from_spec

CHERNOFF_GRID = {"n": (25, 100, 400), "K": (2, 3, 4), "C": (8, 16, 32)}

__all__ = ["ConfigError", "main"]


class ConfigError(Exception):
    """Bad config file or bad flag combination (exit code 2)."""


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _as_fraction(value) -> Fraction:
    """Exact parse of JSON-borne numbers; floats go through their decimal
    literal so 0.05 means 1/20, not its binary neighbour."""
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    for field in ("instance", "strategy", "protocol"):
        if field not in cfg:
            raise ConfigError(f"config is missing the {field!r} section")
    return cfg


def _load_instance(section) -> tuple:
    if not isinstance(section, dict):
        raise ConfigError("instance section must be an object")
    if "path" in section:
        try:
            return load_graph(section["path"])
        except (OSError, ValueError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load instance: {exc}") from exc
    if "generator" in section:
        gen = section["generator"]
        try:
            graph, planted = generate(gen["kind"], gen.get("params", {}),
                                      gen.get("seed", 0))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad generator spec: {exc}") from exc
        return graph, ({"planted": planted} if planted is not None else {})
    raise ConfigError("instance section needs 'path' or 'generator'")


class _Experiment:
    """Config, instance and lazily certified colorings for one invocation."""

    def __init__(self, cfg: dict, args):
        self.cfg = cfg
        self.args = args
        self.graph, self.named = _load_instance(cfg["instance"])
        diagnostics = validate(self.graph)
        if diagnostics:
            raise ConfigError("instance fails validation: " + "; ".join(map(str, diagnostics)))
        self.analysis = dict(cfg.get("analysis", {}))
        self.output = dict(cfg.get("output", {}))
        self.budget = int(self.analysis.get("budget", DEFAULT_GAP_BUDGET))
        self._certificate = None

    # -- config access -----------------------------------------------------

    def protocol_value(self, key: str, flag=None):
        if flag is not None:
            return flag
        proto = self.cfg["protocol"]
        if key not in proto:
            raise ConfigError(f"protocol section is missing {key!r} and no flag was given")
        return proto[key]

    @property
    def seed(self) -> int:
        return int(self.protocol_value("seed", self.args.seed))

    @property
    def trials(self) -> int:
        trials = int(self.protocol_value("trials", self.args.trials))
        if trials < 1:
            raise ConfigError("trials must be >= 1")
        return trials

    @property
    def fmt(self) -> str:
        return self.args.fmt or self.output.get("format", "csv")

    @property
    def out(self) -> str | None:
        return self.args.out or self.output.get("path")

    @property
    def dump_states(self) -> bool:
        return bool(self.args.dump_states or self.output.get("dump_states"))

    # -- derived objects ----------------------------------------------------

    def certificate(self):
        if self._certificate is None:
            self._certificate = certify_gap(self.graph, self.budget)
        return self._certificate

    def colorings(self) -> dict:
        named = dict(self.named)
        if "best" not in named:
            named["best"] = self.certificate().witness
        return named

    def _spec_names_best(self, spec) -> bool:
        return any("best" in str(v) for k, v in spec.items() if k != "kind")

    def strategy(self, spec=None):
        spec = dict(self.cfg["strategy"] if spec is None else spec)
        named = self.colorings() if self._spec_names_best(spec) else dict(self.named)
        try:
            return strategy_from_spec(spec, named)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad strategy spec: {exc}") from exc

    def params(self, C=None) -> ProtocolParams:
        C = self.protocol_value("C") if C is None else C
        try:
            return ProtocolParams(C, self.graph.n, self.graph.K)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def epsilon(self) -> Fraction:
        if "epsilon" in self.analysis:
            try:
                return _as_fraction(self.analysis["epsilon"])
            except (ValueError, ZeroDivisionError) as exc:
                raise ConfigError(f"bad epsilon: {exc}") from exc
        cert = self.certificate()
        if not cert.exhaustive:
            raise ConfigError(
                "analysis.epsilon is required: the gap certificate is not exhaustive"
            )
        if cert.eta == 0:
            raise ConfigError(
                "analysis.epsilon is required: the instance is satisfiable (eta = 0)"
            )
        return default_epsilon(cert.eta)

    def collision_coloring(self) -> tuple:
        """Deterministic answering rule for the birthday estimator: the
        strategy's coloring when it has one, otherwise the certified best."""
        spec = dict(self.cfg["strategy"])
        if "coloring" in spec:
            strategy = self.strategy()
            return strategy["coloring"]
        return self.colorings()["best"]

    def write(self, text: str) -> None:
        _emit(text, self.out)

    def dump_proof_states(self, states) -> None:
        if not self.out:
            raise ConfigError("--dump-states needs an output path (--out)")
        doc = {
            "version": __version__,
            "provers": [state_records(s) for s in states],
        }
        path = f"{self.out}.states.json"
        Path(path).write_text(
            json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n",
            encoding="utf-8",
        )


# ---------------------------------------------------------------------------
# validate


def cmd_validate(args) -> int:
    try:
        graph, named = load_graph(args.file)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        return _fail(f"cannot load {args.file!r}: {exc}")
    diagnostics = validate(graph)
    for diag in diagnostics:
        print(diag)
    if diagnostics:
        print(f"invalid: {len(diagnostics)} diagnostic(s)")
        return 1
    print(f"valid: n={graph.n} K={graph.K} edges={len(graph.edges)} "
          f"id={instance_digest(graph)}")
    if graph.K ** graph.n <= args.budget:
        cert = certify_gap(graph, args.budget)
        print(f"gap certificate (exhaustive): max satisfied fraction "
              f"{cert.max_satisfied_fraction}, eta {cert.eta}")
    else:
        print(f"gap certificate skipped: {graph.K}^{graph.n} colorings exceed "
              f"budget {args.budget}")
    for name in sorted(named):
        print(f"coloring {name!r}: satisfied fraction "
              f"{satisfied_fraction(graph, named[name])}")
    return 0


# ---------------------------------------------------------------------------
# run


def cmd_run(args) -> int:
    exp = _Experiment(_load_config(args.config), args)
    params = exp.params()
    strategy = exp.strategy()
    estimate, counts = estimate_acceptance(
        strategy, exp.graph, params, exp.trials, exp.seed, workers=args.workers
    )
    row = run_row(instance_digest(exp.graph), params, exp.trials, exp.seed,
                  estimate, counts)
    exp.write(render("run", RUN_COLUMNS, [row], exp.fmt))
    if exp.dump_states:
        exp.dump_proof_states(strategy.build(exp.graph, params))
    return 0


# ---------------------------------------------------------------------------
# sweep


def _parse_token(token: str):
    for caster in (int, float):
        try:
            return caster(token)
        except ValueError:
            continue
    return token


def _expand_grid(spec: str) -> tuple[str, list]:
    name, sep, body = spec.partition("=")
    name = name.strip()
    if not sep or not name or not body.strip():
        raise ConfigError(f"bad grid spec {spec!r}; expected name=v1,v2 or name=a:b[:step]")
    body = body.strip()
    if ":" in body:
        parts = body.split(":")
        if len(parts) not in (2, 3):
            raise ConfigError(f"bad range {body!r}; expected a:b or a:b:step")
        try:
            start, stop = Fraction(parts[0]), Fraction(parts[1])
            step = Fraction(parts[2]) if len(parts) == 3 else Fraction(1)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad range {body!r}: {exc}") from exc
        if step <= 0:
            raise ConfigError("range step must be positive")
        values = []
        point = start
        while point <= stop:
            values.append(int(point) if point.denominator == 1 else float(point))
            point += step
    else:
        values = [_parse_token(t.strip()) for t in body.split(",") if t.strip()]
    if not values:
        raise ConfigError(f"grid {spec!r} expands to no points")
    return name, values


def _sweep_collision(exp: _Experiment, values) -> list[dict]:
    eps = exp.epsilon()
    coloring = exp.collision_coloring()
    rule = coloring_rule(exp.graph, coloring)
    all_vertices = list(range(exp.graph.n))
    digest = instance_digest(exp.graph)
    rows = []
    for index, value in enumerate(values):
        m = int(value)
        seed = derive_seed(exp.seed, index)
        est = second_moment_audit(exp.graph, [all_vertices], [rule], m, eps,
                                  exp.trials, seed).estimate
        rows.append({
            "param": "m_prime", "value": value, "instance_id": digest,
            "n": exp.graph.n, "K": exp.graph.K, "num_samples": est.num_samples,
            "trials": est.trials, "seed": est.seed,
            "mean_violations": est.mean_violations, "mean_ci": est.mean_ci,
            "mean_lower_bound": est.mean_lower_bound, "prob_zero": est.prob_zero,
            "prob_zero_ci": est.prob_zero_ci,
            "chebyshev_bound": est.chebyshev_bound, "degenerate": est.degenerate,
        })
    return rows


def _sweep_protocol(exp: _Experiment, name: str, values) -> list[dict]:
    digest = instance_digest(exp.graph)
    rows = []
    for index, value in enumerate(values):
        seed = derive_seed(exp.seed, index)
        trials = exp.trials
        params = exp.params()
        spec = dict(exp.cfg["strategy"])
        if name == "C":
            params = exp.params(C=value)
        elif name == "trials":
            trials = int(value)
            if trials < 1:
                raise ConfigError("trials must be >= 1")
        elif name.startswith("strategy."):
            spec[name.split(".", 1)[1]] = value
        else:
            raise ConfigError(
                f"cannot sweep {name!r}; use C, trials, m_prime or strategy.<param>"
            )
        strategy = exp.strategy(spec)
        estimate, counts = estimate_acceptance(
            strategy, exp.graph, params, trials, seed, workers=exp.args.workers
        )
        row = run_row(digest, params, trials, seed, estimate, counts)
        rows.append({"param": name, "value": value, **row})
    return rows


def _plot_sweep(rows, columns, out: str | None) -> None:
    try:
        import matplotlib
    except ImportError as exc:
        raise ConfigError("--plot needs matplotlib (install the 'plot' extra)") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    y_name = "prob_zero" if "prob_zero" in columns else "acceptance"
    xs = [float(r["value"]) for r in rows]
    ys = [float(r[y_name]) for r in rows]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(xs, ys, marker="o")
    ax.set_xlabel(rows[0]["param"])
    ax.set_ylabel(y_name)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = (Path(out).with_suffix(".png") if out else Path("sweep.png"))
    fig.savefig(path)
    plt.close(fig)


def cmd_sweep(args) -> int:
    exp = _Experiment(_load_config(args.config), args)
    name, values = _expand_grid(args.grid)
    if name == "m_prime":
        columns, rows = COLLISION_COLUMNS, _sweep_collision(exp, values)
    else:
        columns, rows = SWEEP_COLUMNS, _sweep_protocol(exp, name, values)
    exp.write(render("sweep", columns, rows, exp.fmt))
    if args.plot:
        _plot_sweep(rows, columns, exp.out)
    return 0


# ---------------------------------------------------------------------------
# audit


def _audit_chernoff(exp: _Experiment) -> list[dict]:
    grid = {**CHERNOFF_GRID, **exp.analysis.get("chernoff_grid", {})}
    rows = []
    for n in grid["n"]:
        for K in grid["K"]:
            for C in grid["C"]:
                params = ProtocolParams(C, n, K)
                mu = params.mu_exact if params.mu_exact is not None else Fraction(str(params.mu))
                comp = chernoff_audit(params.num_provers, Fraction(1, K),
                                      params.z_threshold, "completeness", mu=mu)
                weak_threshold = math.ceil(Fraction(49, 100) * mu)
                sound = chernoff_audit(params.num_provers, Fraction(1, 4 * K),
                                       weak_threshold, "soundness", mu=mu)
                item = f"n={n},K={K},C={C}"
                for label, res in (("chernoff_completeness", comp),
                                   ("chernoff_soundness", sound)):
                    rows.append({"audit": label, "item": item, "ok": res.ok,
                                 "measured": float(res.exact_tail),
                                 "bound": res.bound})
    return rows


def _audit_soundness(exp: _Experiment) -> list[dict]:
    params = exp.params()
    states = exp.strategy().build(exp.graph, params)
    report = soundness_report(states, exp.graph, params, exp.epsilon())
    bad_mass = sum(not ok for ok in report.conditional_mass_ok)
    distances = report.fourier_distances.values()
    return [
        {"audit": "soundness", "item": "conditional_mass", "ok": bad_mass == 0,
         "measured": bad_mass, "bound": 0},
        {"audit": "soundness", "item": "case", "ok": True,
         "measured": report.case, "bound": ""},
        {"audit": "soundness", "item": "strong_set_size", "ok": True,
         "measured": len(report.strong_set), "bound": f"mu/2={report.mu / 2!r}"},
        {"audit": "soundness", "item": "max_fourier_distance", "ok": True,
         "measured": max(distances, default=0.0), "bound": 2.0},
    ]


def _audit_second_moment(exp: _Experiment) -> list[dict]:
    eps = exp.epsilon()
    rule = coloring_rule(exp.graph, exp.collision_coloring())
    all_vertices = list(range(exp.graph.n))
    m_primes = exp.analysis.get("m_prime", [])
    if isinstance(m_primes, int):
        m_primes = [m_primes]
    rows = []
    for index, m in enumerate(m_primes):
        report = second_moment_audit(exp.graph, [all_vertices], [rule], int(m),
                                     eps, exp.trials, derive_seed(exp.seed, index))
        est = report.estimate
        prefix = f"m_prime={m}"
        rows.append({"audit": "second_moment", "item": f"{prefix}:mean_lower_bound",
                     "ok": report.lower_bound_ok, "measured": est.mean_violations,
                     "bound": est.mean_lower_bound})
        rows.append({"audit": "second_moment", "item": f"{prefix}:chebyshev",
                     "ok": report.chebyshev_ok, "measured": est.prob_zero,
                     "bound": est.chebyshev_bound})
        if report.degenerate:
            rows.append({"audit": "second_moment", "item": f"{prefix}:degenerate",
                         "ok": True, "measured": True, "bound": ""})
    return rows


def cmd_audit(args) -> int:
    exp = _Experiment(_load_config(args.config), args)
    enabled = exp.analysis.get("audits")
    if enabled is None:
        enabled = ["chernoff", "soundness"]
        if exp.analysis.get("m_prime"):
            enabled.append("second_moment")
    runners = {
        "chernoff": _audit_chernoff,
        "soundness": _audit_soundness,
        "second_moment": _audit_second_moment,
    }
    unknown = [name for name in enabled if name not in runners]
    if unknown:
        raise ConfigError(f"unknown audits {unknown}; known: {sorted(runners)}")
    rows = []
    for name in enabled:
        rows.extend(runners[name](exp))
    all_pass = all(r["ok"] for r in rows)
    exp.write(render("audit", AUDIT_COLUMNS, rows, exp.fmt, all_pass=all_pass))
    return 0 if all_pass else 1


# ---------------------------------------------------------------------------
# entry point


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-c", "--config", required=True, help="experiment config (JSON)")
    parser.add_argument("--seed", type=int, default=None, help="override protocol.seed")
    parser.add_argument("--trials", type=int, default=None, help="override protocol.trials")
    parser.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                        help="parallel trial workers (default: all cores)")
    parser.add_argument("--format", dest="fmt", choices=("csv", "json"), default=None,
                        help="override output.format")
    parser.add_argument("--out", default=None, help="override output.path")
    parser.add_argument("--dump-states", action="store_true",
                        help="also write per-prover amplitude records")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bellqma",
        description="Simulate and audit the two-test verification protocol.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="check a graph file and certify its gap")
    p_val.add_argument("file", help="graph JSON file")
    p_val.add_argument("--budget", type=int, default=DEFAULT_GAP_BUDGET,
                       help="max colorings to enumerate for the gap certificate")
    p_val.set_defaults(func=cmd_validate)

    p_run = sub.add_parser("run", help="estimate acceptance for one configuration")
    _add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="repeat an experiment over a parameter grid")
    _add_common(p_sweep)
    p_sweep.add_argument("--grid", required=True,
                         help='e.g. "C=8,16,32", "trials=1000:5000:1000", '
                              '"m_prime=8:32:4", "strategy.frequency=1,2"')
    p_sweep.add_argument("--plot", action="store_true",
                         help="write a PNG next to the output file")
    p_sweep.set_defaults(func=cmd_sweep)

    p_audit = sub.add_parser("audit", help="run the quantitative bound audits")
    _add_common(p_audit)
    p_audit.set_defaults(func=cmd_audit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
