"""Command-line driver: ``analyze``, ``summarize`` and ``simulate``.

Configuration is a YAML file (see README for the key reference); every key
a subcommand uses can also be supplied as a command-line flag, and flags win
over the file. The default config path can be set through the
``MULTIENDPOINT_CONFIG`` environment variable.

Exit codes:
    0  success
    2  configuration / usage error (ConfigError, bad flags)
    3  input file not found
    4  data error (schema mismatch, parse error, empty group, bad contrast,
       empty after exclusion)
    5  any other analysis error
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import yaml

from .errors import (
    ConfigError,
    CsvParseError,
    EmptyAfterExclusionError,
    EmptyGroupError,
    InvalidContrastError,
    InvalidCorrelationError,
    MissingColumnError,
    MultiEndpointError,
    SchemaMismatchError,
)
from .global_u import KernelSpec, default_kernels
from .methods import METHOD_NAMES, run_method
from .rank_tests import VARIANCE_ADJUSTED, VARIANCE_NAIVE
from .report import results_text_table, write_results_csv
from .resampling import MODE_EXACT, MODE_MONTE_CARLO, PermutationPlan
from .simgen import BinaryModel, ContinuousModel, SimConfig, SurvivalModel, error_rate_study
from .trial_data import (
    DEFAULT_CONTRAST,
    ColumnMapping,
    DerivationConfig,
    baseline_summary,
    derive_endpoints,
    load_trial_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NOT_FOUND = 3
EXIT_DATA = 4
EXIT_ANALYSIS = 5

ENV_CONFIG = "MULTIENDPOINT_CONFIG"

MODE_ASYMPTOTIC = "asymptotic"
MODE_PERMUTATION = "permutation"
RUN_MODES = (MODE_PERMUTATION, MODE_ASYMPTOTIC, "exact")

DEFAULT_METHODS = ("rank_sum", "fs", "win_ratio", "multirank")


@dataclass
class RunConfig:
    """Validated settings for the ``analyze`` subcommand."""

    input: str
    contrast: str = DEFAULT_CONTRAST
    methods: tuple[str, ...] = DEFAULT_METHODS
    mode: str = MODE_PERMUTATION
    replicates: int = 10_000
    seed: int = 0
    variance: str = VARIANCE_NAIVE
    weights: dict[str, float] | None = None
    include_week96: bool = True
    columns: dict[str, Any] = field(default_factory=dict)
    out: str | None = None

    def validate(self) -> None:
        if not self.input:
            raise ConfigError("input: a CSV path is required")
        if not self.methods:
            raise ConfigError("methods: must be non-empty")
        for m in self.methods:
            if m not in METHOD_NAMES:
                raise ConfigError(f"methods: unknown method {m!r}; known: {list(METHOD_NAMES)}")
        if self.mode not in RUN_MODES:
            raise ConfigError(f"inference.mode: must be one of {list(RUN_MODES)}")
        if self.replicates < 1:
            raise ConfigError("inference.replicates: must be >= 1")
        if self.seed < 0:
            raise ConfigError("inference.seed: must be >= 0")
        if self.variance not in (VARIANCE_NAIVE, VARIANCE_ADJUSTED):
            raise ConfigError("rank_sum.variance: must be 'naive' or 'adjusted'")
        if self.weights is not None:
            for k, v in self.weights.items():
                if not (isinstance(v, (int, float)) and v >= 0 and math.isfinite(float(v))):
                    raise ConfigError(f"global_u.weights.{k}: must be a finite number >= 0")

    def plan(self) -> PermutationPlan | None:
        if self.mode == MODE_ASYMPTOTIC:
            return None
        if self.mode == "exact":
            return PermutationPlan(MODE_EXACT, master_seed=self.seed)
        return PermutationPlan(MODE_MONTE_CARLO, self.replicates, self.seed)

    def column_mapping(self) -> ColumnMapping:
        return mapping_from_config(self.columns)


def mapping_from_config(cfg: Mapping[str, Any]) -> ColumnMapping:
    base = ColumnMapping()
    if not cfg:
        return base
    kwargs: dict[str, Any] = {}
    simple = ("subject_id", "arm", "days", "event", "cd4_baseline", "cd4_week20", "cd4_week96")
    for key in simple:
        if key in cfg:
            kwargs[key] = cfg[key]
    unknown = set(cfg) - set(simple) - {"covariates"}
    if unknown:
        raise ConfigError(f"columns: unknown key(s) {sorted(unknown)}")
    if "covariates" in cfg:
        cov = dict(base.covariates)
        cov.update(cfg["covariates"])
        kwargs["covariates"] = cov
    return ColumnMapping(
        **{**{k: getattr(base, k) for k in simple}, "covariates": base.covariates, **kwargs}
    )


def _load_yaml(path: str | None) -> dict[str, Any]:
    if path is None:
        path = os.environ.get(ENV_CONFIG)
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(str(p))
    with open(p) as fh:
        data = yaml.safe_load(fh)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    return data


def run_config_from_sources(file_cfg: Mapping[str, Any], args: argparse.Namespace) -> RunConfig:
    inference = file_cfg.get("inference", {}) or {}
    rank_sum = file_cfg.get("rank_sum", {}) or {}
    glob = file_cfg.get("global_u", {}) or {}

    methods = file_cfg.get("methods", list(DEFAULT_METHODS))
    if args.methods is not None:
        methods = [m.strip() for m in args.methods.split(",") if m.strip()]

    cfg = RunConfig(
        input=args.input or file_cfg.get("input", ""),
        contrast=args.contrast or file_cfg.get("contrast", DEFAULT_CONTRAST),
        methods=tuple(methods),
        mode=args.mode or inference.get("mode", MODE_PERMUTATION),
        replicates=args.replicates if args.replicates is not None else inference.get("replicates", 10_000),
        seed=args.seed if args.seed is not None else inference.get("seed", 0),
        variance=args.variance or rank_sum.get("variance", VARIANCE_NAIVE),
        weights=glob.get("weights"),
        include_week96=bool(file_cfg.get("include_week96", True)),
        columns=file_cfg.get("columns", {}) or {},
        out=args.out or file_cfg.get("out"),
    )
    cfg.validate()
    return cfg


def _kernels_for(ds, weights: dict[str, float] | None) -> list[KernelSpec] | None:
    if weights is None:
        return None
    kernels = []
    for spec in default_kernels(ds):
        if spec.endpoint in weights:
            kernels.append(KernelSpec(spec.endpoint, spec.kernel, float(weights[spec.endpoint])))
        else:
            kernels.append(spec)
    unknown = set(weights) - {k.endpoint for k in kernels}
    if unknown:
        raise ConfigError(f"global_u.weights: unknown endpoint(s) {sorted(unknown)}")
    return kernels


def cmd_analyze(args: argparse.Namespace) -> int:
    cfg = run_config_from_sources(_load_yaml(args.config), args)
    raw = load_trial_csv(cfg.input, cfg.column_mapping(), cfg.contrast)
    ds = derive_endpoints(
        raw, DerivationConfig(contrast=cfg.contrast, include_week96=cfg.include_week96)
    )
    summary = baseline_summary(ds)
    plan = cfg.plan()
    results = [
        run_method(m, ds, plan, variance=cfg.variance, kernels=_kernels_for(ds, cfg.weights))
        for m in cfg.methods
    ]

    baseline_text = summary.to_text()
    results_text = results_text_table(results)
    print(baseline_text)
    print(results_text, end="")
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "baseline.txt").write_text(baseline_text)
        (out / "baseline.csv").write_text(summary.to_csv())
        (out / "results.txt").write_text(results_text)
        write_results_csv(results, out / "results.csv")
    return EXIT_OK


def cmd_summarize(args: argparse.Namespace) -> int:
    file_cfg = _load_yaml(args.config)
    input_path = args.input or file_cfg.get("input", "")
    if not input_path:
        raise ConfigError("input: a CSV path is required")
    contrast = args.contrast or file_cfg.get("contrast", DEFAULT_CONTRAST)
    mapping = mapping_from_config(file_cfg.get("columns", {}) or {})
    raw = load_trial_csv(input_path, mapping, contrast)
    summary = baseline_summary(raw)
    text = summary.to_text()
    print(text, end="")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "baseline.txt").write_text(text)
        (out / "baseline.csv").write_text(summary.to_csv())
    return EXIT_OK


def sim_config_from_mapping(sim: Mapping[str, Any]) -> SimConfig:
    def num(key: str, default: float) -> float:
        v = sim.get(key, default)
        if not isinstance(v, (int, float)):
            raise ConfigError(f"sim.{key}: must be a number")
        return float(v)

    n_per_group = sim.get("n_per_group", 20)
    if not isinstance(n_per_group, int) or n_per_group < 1:
        raise ConfigError("sim.n_per_group: must be a positive integer")
    corr = sim.get("correlation")
    null = SimConfig.null(n_per_group)
    base_corr = null.correlation if corr is None else tuple(tuple(float(v) for v in row) for row in corr)
    try:
        return SimConfig(
            n_per_group=n_per_group,
            survival=SurvivalModel(
                num("hazard_treatment", 0.002),
                num("hazard_control", 0.002),
                num("censor_horizon", 1000.0),
            ),
            continuous=ContinuousModel(
                num("marker_mean_treatment", 0.0),
                num("marker_mean_control", 0.0),
                num("marker_sd_treatment", 1.0),
                num("marker_sd_control", 1.0),
            ),
            binary=BinaryModel(
                num("response_p_treatment", 0.5), num("response_p_control", 0.5)
            ),
            correlation=base_corr,
            seed=int(sim.get("seed", 0)),
        )
    except ValueError as exc:
        raise ConfigError(f"sim: {exc}") from exc


def cmd_simulate(args: argparse.Namespace) -> int:
    file_cfg = _load_yaml(args.config)
    sim = dict(file_cfg.get("sim", {}) or {})
    if args.seed is not None:
        sim["seed"] = args.seed
    if args.trials is not None:
        sim["n_trials"] = args.trials
    if args.replicates is not None:
        sim["replicates"] = args.replicates

    methods = sim.get("methods", list(DEFAULT_METHODS))
    if args.methods is not None:
        methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if not methods:
        raise ConfigError("sim.methods: must be non-empty")
    for m in methods:
        if m not in METHOD_NAMES:
            raise ConfigError(f"sim.methods: unknown method {m!r}")

    alpha = float(sim.get("alpha", 0.05))
    n_trials = int(sim.get("n_trials", 2000))
    replicates = int(sim.get("replicates", 199))
    if n_trials < 1:
        raise ConfigError("sim.n_trials: must be >= 1")
    cfg = sim_config_from_mapping(sim)
    plan = PermutationPlan.monte_carlo(replicates, seed=int(sim.get("seed", 0)))

    out = Path(args.out or file_cfg.get("out", "simulation_out"))
    out.mkdir(parents=True, exist_ok=True)

    from .simgen import binomial_band

    band_low, band_high = binomial_band(alpha, n_trials)
    lines = [
        f"null-calibration study: alpha={alpha}, n_trials={n_trials}, "
        f"n_per_group={cfg.n_per_group}, replicates_per_test={replicates}",
        f"95% binomial band around alpha: [{band_low:.4f}, {band_high:.4f}]",
    ]
    for m in methods:
        report = error_rate_study(cfg, m, alpha, n_trials, plan)
        flag = "within-band" if band_low <= report.rate <= band_high else "OUT-OF-BAND"
        lines.append(
            f"{m}: rejection rate {report.rate:.4f} "
            f"(95% CI {report.ci_low:.4f}-{report.ci_high:.4f}) {flag}"
        )
        with open(out / f"rejection_{m}.csv", "w") as fh:
            fh.write("method,alpha,n_trials,n_rejected,rate,ci_low,ci_high,seed\n")
            fh.write(
                f"{report.method},{report.alpha!r},{report.n_trials},{report.n_rejected},"
                f"{report.rate!r},{report.ci_low!r},{report.ci_high!r},{report.seed}\n"
            )
    text = "\n".join(lines) + "\n"
    print(text, end="")
    (out / "simulation_summary.txt").write_text(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multiendpoint",
        description="Two-group multiple-endpoint tests with permutation inference",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help=f"YAML config path (default from ${ENV_CONFIG})")
        p.add_argument("--out", help="output directory")

    pa = sub.add_parser("analyze", help="run the selected tests and emit tables")
    common(pa)
    pa.add_argument("--input", help="input CSV path")
    pa.add_argument("--contrast", help="arm contrast, e.g. rest_vs_0 or 1_vs_0")
    pa.add_argument("--methods", help="comma-separated subset of " + ",".join(METHOD_NAMES))
    pa.add_argument("--mode", choices=RUN_MODES, help="inference mode")
    pa.add_argument("--replicates", type=int, help="Monte Carlo replicates")
    pa.add_argument("--seed", type=int, help="master seed")
    pa.add_argument("--variance", choices=(VARIANCE_NAIVE, VARIANCE_ADJUSTED),
                    help="rank-sum variance estimator")

    ps = sub.add_parser("summarize", help="emit the baseline characteristics table")
    common(ps)
    ps.add_argument("--input", help="input CSV path")
    ps.add_argument("--contrast", help="arm contrast")

    pm = sub.add_parser("simulate", help="run a rejection-rate simulation study")
    common(pm)
    pm.add_argument("--seed", type=int, help="master seed")
    pm.add_argument("--trials", type=int, help="number of simulated trials")
    pm.add_argument("--replicates", type=int, help="permutation replicates per test")
    pm.add_argument("--methods", help="comma-separated method list")

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"analyze": cmd_analyze, "summarize": cmd_summarize, "simulate": cmd_simulate}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"not found: {exc}", file=sys.stderr)
        return EXIT_NOT_FOUND
    except (
        SchemaMismatchError,
        CsvParseError,
        EmptyGroupError,
        MissingColumnError,
        InvalidContrastError,
        EmptyAfterExclusionError,
        InvalidCorrelationError,
    ) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except MultiEndpointError as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
