"""Command-line front end.

Seven subcommands cover single trajectories, survival ensembles, the
two quasi-stationary estimators, the finite-state oracle, the
validation battery, and artifact comparison. Flags override config-file
keys, defaults fill the rest; every artifact embeds the hash of the
fully resolved config plus seed and tool version, and reruns with the
same inputs are byte-identical. Exit codes: 0 success, 1 usage or
configuration problems, 2 a failed validate/compare check.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .config import ExperimentConfig, parse_config_text, resolve_config
from .errors import ConfigError, NoSingletonMass, QsdsimError, WindowTooSmall
from .oracle import build_mass_chain, eigenpair_report, principal_left_eigenpair
from .qsd import (decay_rate_from_singletons, decay_rate_from_survival,
                  estimate_report, fleming_viot_estimate, tv_distance,
                  write_sample_csv, yaglom_estimate)
from .simulator import ENGINES, survival_curve, write_trajectory_csv
from .streams import RandomStream
from .validation import run_validation_checks

_FLAG_KEYS = (
    ("seed", "run.seed"),
    ("out", "output.directory"),
    ("threads", "run.threads"),
    ("t_max", "run.horizon"),
    ("replicas", "run.replicas"),
    ("particles", "run.particles"),
    ("lam", "model.lambda"),
    ("b", "model.b"),
    ("rho", "model.rho"),
    ("d", "model.d"),
    ("c", "model.c"),
    ("kind", "model.kind"),
    ("kernel", "kernel.family"),
    ("scale", "kernel.scale"),
    ("truncation", "run.truncation"),
    ("engine", "run.engine"),
)

SUBCOMMANDS = ("simulate", "survival", "qsd-yaglom", "qsd-fv", "oracle",
               "validate", "compare")


class _Parser(argparse.ArgumentParser):
    # usage problems must exit 1, not argparse's default 2
    def error(self, message: str):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="qsdsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sub = subparsers.add_parser(name)
        sub.add_argument("--config", metavar="PATH")
        sub.add_argument("--seed", metavar="U64")
        sub.add_argument("--out", metavar="DIR")
        sub.add_argument("--threads", metavar="N")
        sub.add_argument("--t-max", dest="t_max", metavar="T")
        sub.add_argument("--replicas", metavar="N")
        sub.add_argument("--particles", metavar="N")
        sub.add_argument("--lambda", dest="lam", metavar="RATE")
        sub.add_argument("--b", metavar="RATE")
        sub.add_argument("--rho", metavar="FRACTION")
        sub.add_argument("--d", metavar="RATE")
        sub.add_argument("--c", metavar="RATE")
        sub.add_argument("--kind", metavar="MODEL")
        sub.add_argument("--kernel", metavar="FAMILY")
        sub.add_argument("--scale", metavar="S")
        sub.add_argument("--truncation", metavar="N")
        sub.add_argument("--engine", metavar="ENGINE")
        if name == "compare":
            sub.add_argument("file_a", metavar="FILE_A")
            sub.add_argument("file_b", metavar="FILE_B")
    return parser


def _definite(obj):
    """JSON cannot carry infinities; unreached times become null."""
    if isinstance(obj, dict):
        return {k: _definite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_definite(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_definite(payload), sort_keys=True, indent=2) + "\n")


def _meta(cfg: ExperimentConfig) -> dict:
    return {"config_hash": cfg.config_hash(), "seed": cfg.seed,
            "tool_version": __version__}


def _model_block(cfg: ExperimentConfig) -> dict:
    block = {"kind": cfg.kind, "b": cfg.b, "rho": cfg.rho,
             "kernel": cfg.kernel_family}
    if cfg.lam is not None:
        block["lambda"] = cfg.lam
    if cfg.d is not None:
        block["d"] = cfg.d
    if cfg.c is not None:
        block["c"] = cfg.c
    if cfg.kernel_scale is not None:
        block["scale"] = cfg.kernel_scale
    return block


def _csv_meta(cfg: ExperimentConfig) -> dict:
    return _meta(cfg)


def _out_dir(cfg: ExperimentConfig) -> Path:
    path = Path(cfg.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _run_simulate(cfg: ExperimentConfig) -> int:
    model = cfg.build_model()
    trajectory = ENGINES[cfg.engine](model, cfg.build_initial(), cfg.horizon,
                                     RandomStream(cfg.seed).generator())
    out = _out_dir(cfg)
    with (out / "trajectory.csv").open("w") as fh:
        write_trajectory_csv(trajectory, fh, metadata=_csv_meta(cfg))
    if "json" in cfg.formats:
        _write_json(out / "trajectory.json", {
            "engine": cfg.engine,
            "event_count": len(trajectory.events),
            "final_mass": trajectory.final.total_mass,
            "extinction_time": trajectory.extinction_time,
            "first_mutation_time": trajectory.first_mutation_time,
            "replacement_time": trajectory.replacement_time,
            "model": _model_block(cfg),
            **_meta(cfg),
        })
    print(f"simulated {len(trajectory.events)} events to t={cfg.horizon}"
          f" (final mass {trajectory.final.total_mass})")
    return 0


def _run_survival(cfg: ExperimentConfig) -> int:
    model = cfg.build_model()
    curve = survival_curve(model, cfg.build_initial(), cfg.grid, cfg.replicas,
                           RandomStream(cfg.seed), workers=cfg.threads)
    theta_hat = theta_se = None
    try:
        theta_hat, theta_se = decay_rate_from_survival(curve)
    except WindowTooSmall:
        pass
    out = _out_dir(cfg)
    _write_json(out / "ensemble.json", {
        "model": _model_block(cfg),
        "seed": cfg.seed,
        "replicas": cfg.replicas,
        "grid": list(curve.grid),
        "survival": list(curve.survival),
        "stderr": list(curve.stderr),
        "theta_hat": theta_hat,
        "theta_stderr": theta_se,
        **_meta(cfg),
    })
    if "csv" in cfg.formats:
        with (out / "survival.csv").open("w") as fh:
            for key, value in _csv_meta(cfg).items():
                fh.write(f"# {key}={value}\n")
            fh.write("t,survival,stderr\n")
            for t, p, se in curve:
                fh.write(f"{t:.17g},{p:.17g},{se:.17g}\n")
    if theta_hat is None:
        print(f"survival curve over {len(curve)} grid points; no admissible window"
              " for a decay-rate fit")
    else:
        print(f"survival curve over {len(curve)} grid points; theta_hat ="
              f" {theta_hat:.6g} +- {theta_se:.2g}")
    return 0


def _write_estimate(cfg: ExperimentConfig, est, label: str) -> None:
    model = cfg.build_model()
    try:
        theta_singleton = decay_rate_from_singletons(model, est)
    except NoSingletonMass:
        theta_singleton = None
    out = _out_dir(cfg)
    _write_json(out / "qsd.json", {
        **estimate_report(est),
        "estimator": label,
        "theta_singleton": theta_singleton,
        "model": _model_block(cfg),
        **_meta(cfg),
    })
    if "csv" in cfg.formats:
        with (out / "qsd_sample.csv").open("w") as fh:
            write_sample_csv(est, fh, metadata=_csv_meta(cfg))
    theta_text = "none" if theta_singleton is None else f"{theta_singleton:.6g}"
    print(f"{label} estimate over {len(est.configurations)} configurations"
          f" (ess {est.ess:.1f}, singleton theta {theta_text})")


def _run_qsd_yaglom(cfg: ExperimentConfig) -> int:
    model = cfg.build_model()
    est = yaglom_estimate(model, cfg.build_initial(), cfg.horizon, cfg.replicas,
                          RandomStream(cfg.seed), workers=cfg.threads)
    _write_estimate(cfg, est, "yaglom")
    return 0


def _run_qsd_fv(cfg: ExperimentConfig) -> int:
    model = cfg.build_model()
    est = fleming_viot_estimate(model, cfg.particles, cfg.burn_in, cfg.horizon,
                                RandomStream(cfg.seed),
                                snapshot_interval=cfg.snapshot_interval)
    _write_estimate(cfg, est, "fleming-viot")
    return 0


def _run_oracle(cfg: ExperimentConfig) -> int:
    model = cfg.build_model()
    chain = build_mass_chain(model, cfg.truncation)
    result = principal_left_eigenpair(chain, tol=cfg.eigen_tol)
    out = _out_dir(cfg)
    _write_json(out / "oracle.json", {**eigenpair_report(chain, result),
                                      "model": _model_block(cfg), **_meta(cfg)})
    if "csv" in cfg.formats:
        with (out / "oracle.csv").open("w") as fh:
            for key, value in _csv_meta(cfg).items():
                fh.write(f"# {key}={value}\n")
            fh.write("mass,nu\n")
            for k in range(1, chain.N + 1):
                fh.write(f"{k},{result.nu[k]:.17g}\n")
    print(f"oracle N={chain.N}: theta = {result.theta:.10g}"
          f" (residual {result.residual:.2g}, {result.iterations} sweeps)")
    return 0


def _run_validate(cfg: ExperimentConfig) -> int:
    model = cfg.build_model()
    checks = run_validation_checks(model, RandomStream(cfg.seed),
                                   replicas=cfg.replicas, workers=cfg.threads)
    _write_json(_out_dir(cfg) / "validate.json", {"checks": checks, **_meta(cfg)})
    for check in checks:
        verdict = "pass" if check["pass"] else "FAIL"
        print(f"{verdict:4s} {check['check']}: statistic {check['statistic']:.4g}"
              f" vs threshold {check['threshold']:.4g}")
    return 0 if all(check["pass"] for check in checks) else 2


def _vector_and_theta(path: Path) -> tuple[list[float], float | None]:
    payload = json.loads(path.read_text())
    vector = payload.get("nu", payload.get("mass_marginal"))
    if vector is None:
        raise ConfigError(f"{path}: no nu or mass_marginal vector to compare")
    theta = payload.get("theta", payload.get("theta_singleton"))
    return vector, theta


def _run_compare(cfg: ExperimentConfig) -> int:
    if cfg.compare_a is None or cfg.compare_b is None:
        raise ConfigError("compare needs compare.a and compare.b")
    vec_a, theta_a = _vector_and_theta(Path(cfg.compare_a))
    vec_b, theta_b = _vector_and_theta(Path(cfg.compare_b))
    tv = tv_distance(vec_a, vec_b)
    ok = tv <= cfg.tv_tol
    delta = None
    if theta_a is not None and theta_b is not None:
        delta = abs(theta_a - theta_b) / max(abs(theta_a), abs(theta_b))
        ok = ok and delta <= cfg.theta_tol
    if "json" in cfg.formats:
        _write_json(_out_dir(cfg) / "compare.json", {
            "a": cfg.compare_a, "b": cfg.compare_b,
            "tv": tv, "tv_tol": cfg.tv_tol,
            "theta_a": theta_a, "theta_b": theta_b,
            "theta_rel_delta": delta, "theta_tol": cfg.theta_tol,
            "pass": ok, **_meta(cfg),
        })
    delta_text = "n/a" if delta is None else f"{delta:.4g}"
    print(f"tv = {tv:.4g} (tol {cfg.tv_tol}), theta delta = {delta_text}"
          f" (tol {cfg.theta_tol}): {'pass' if ok else 'FAIL'}")
    return 0 if ok else 2


_RUNNERS = {
    "simulate": _run_simulate,
    "survival": _run_survival,
    "qsd-yaglom": _run_qsd_yaglom,
    "qsd-fv": _run_qsd_fv,
    "oracle": _run_oracle,
    "validate": _run_validate,
    "compare": _run_compare,
}


def run_subcommand(name: str, config: ExperimentConfig) -> int:
    """Dispatch a validated config to a subcommand; returns the exit status."""
    if name not in _RUNNERS:
        raise ConfigError(f"unknown subcommand {name!r}")
    return _RUNNERS[name](config)


def main(argv: list[str] | None = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        raw = {}
        if args.config is not None:
            raw = parse_config_text(Path(args.config).read_text())
        overrides = {key: getattr(args, attr)
                     for attr, key in _FLAG_KEYS if getattr(args, attr) is not None}
        if args.command == "compare":
            overrides["compare.a"] = args.file_a
            overrides["compare.b"] = args.file_b
        cfg = resolve_config(raw, overrides)
        return run_subcommand(args.command, cfg)
    except QsdsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
