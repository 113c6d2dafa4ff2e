"""TOML run configuration.

Schema (every key optional unless noted; unknown tables or keys are errors)::

    [experiment]
    mode = "min_variance"      # required: min_variance | min_variance_noshort
                               #           | mean_variance | regression
    n_samples = 2000
    master_seed = 0            # unsigned 64-bit
    grid = [[100, 200]]        # explicit (N, T) pairs, or instead:
    n = 100                    #   fixed N ...
    ratios = [0.5, 0.9]        #   ... and T = round(N / r) per ratio
    histogram_max = 3.0        # upper edge of the regular histogram bins

    [process]
    family = "iid_gaussian"    # required: iid_gaussian | factor_gaussian
                               #           | student_t | ccc_garch
    # factor_gaussian: loadings (number or list), loadings_range ([lo, hi]), idio_var
    # student_t:       alpha, correlation (equicorrelation of the scale matrix)
    # ccc_garch:       omega, a, b (number or list), correlation, burn_in

    [regression]               # regression mode
    coefficients = 1.0         # number or list of length N
    noise_var = 1.0

    [mean_variance]            # mean_variance mode
    mu = [..]                  # or mu_range = [lo, hi]
    target_return = 0.01

    [exponent]                 # used by the `exponent` subcommand
    metric = "q0_mean"         # q0_mean | weight_std_mean
    synthetic = false          # fit the exact power law instead of sampling

    [run]
    out = "results"
    workers = 1
    verbosity = 1
"""
from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from esterr.errors import ConfigError, InvalidSpec
from esterr.experiment import ExperimentSpec, Mode, ratio_grid
from esterr.processes import TEMPLATE_PARAMS, Family, ProcessTemplate

_NUMBER = (int, float)

SCHEMA = {
    "experiment": {
        "mode": str, "n_samples": int, "master_seed": int, "grid": list,
        "n": int, "ratios": list, "histogram_max": _NUMBER,
    },
    "process": None,  # checked per family
    "regression": {"coefficients": (int, float, list), "noise_var": _NUMBER},
    "mean_variance": {"mu": (int, float, list), "mu_range": list, "target_return": _NUMBER},
    "exponent": {"metric": str, "synthetic": bool},
    "run": {"out": str, "workers": int, "verbosity": int},
}
PROCESS_TYPES = {
    "loadings": (int, float, list), "loadings_range": list, "idio_var": (int, float, list),
    "alpha": _NUMBER, "correlation": _NUMBER, "omega": (int, float, list),
    "a": (int, float, list), "b": (int, float, list), "burn_in": int,
}
METRICS = ("q0_mean", "weight_std_mean")


@dataclass
class RunConfig:
    spec: ExperimentSpec
    out_dir: Path = Path("results")
    workers: int = 1
    verbosity: int = 1
    metric: str = "q0_mean"
    synthetic: bool = False
    source: dict = field(default_factory=dict)


def _line_of(text: str, key: str) -> int | None:
    pat = re.compile(rf'^\s*(\[\s*)?"?{re.escape(key)}"?\s*(=|\])')
    for i, line in enumerate(text.splitlines(), 1):
        if pat.search(line):
            return i
    return None


def _where(text, key):
    line = _line_of(text, key)
    return f" (line {line})" if line else ""


def _check(table: dict, allowed: dict, section: str, text: str) -> None:
    for key, value in table.items():
        if key not in allowed:
            raise ConfigError(f"unknown key '{key}' in [{section}]{_where(text, key)}")
        types = allowed[key]
        # bool is an int subclass; only accept it where bool is the declared type
        if not isinstance(value, types) or (isinstance(value, bool) and types is not bool):
            raise ConfigError(f"key '{key}' in [{section}] has the wrong type{_where(text, key)}")
        if isinstance(value, list) and not all(
            isinstance(v, (_NUMBER, list)) and not isinstance(v, bool) for v in value
        ):
            raise ConfigError(f"key '{key}' in [{section}] must contain numbers{_where(text, key)}")


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Validate ``text`` against the schema and build a :class:`RunConfig`."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    for section in data:
        if section not in SCHEMA:
            raise ConfigError(f"unknown table [{section}]{_where(text, section)}")
        if not isinstance(data[section], dict):
            raise ConfigError(f"'{section}' must be a table{_where(text, section)}")
    for section, allowed in SCHEMA.items():
        if allowed is not None and section in data:
            _check(data[section], allowed, section, text)

    exp = data.get("experiment")
    if exp is None or "mode" not in exp:
        raise ConfigError("missing required key 'mode' in [experiment]")
    try:
        mode = Mode(exp["mode"])
    except ValueError:
        raise ConfigError(f"unknown mode '{exp['mode']}'{_where(text, 'mode')}") from None

    proc = dict(data.get("process", {}))
    if "family" not in proc:
        raise ConfigError("missing required key 'family' in [process]")
    try:
        family = Family(proc.pop("family"))
    except ValueError:
        raise ConfigError(f"unknown process family{_where(text, 'family')}") from None
    _check(proc, {k: PROCESS_TYPES[k] for k in TEMPLATE_PARAMS[family]}, "process", text)

    has_grid = "grid" in exp
    has_ratios = "n" in exp or "ratios" in exp
    if has_grid == has_ratios:
        raise ConfigError("[experiment] needs either 'grid' or both 'n' and 'ratios'")
    if has_grid:
        grid = exp["grid"]
        if not grid or not all(isinstance(p, list) and len(p) == 2 and all(isinstance(v, int) for v in p) for p in grid):
            raise ConfigError(f"'grid' must be a nonempty list of [N, T] integer pairs{_where(text, 'grid')}")
    else:
        if "n" not in exp or "ratios" not in exp:
            raise ConfigError("[experiment] needs both 'n' and 'ratios'")
        if not exp["ratios"] or not all(isinstance(r, _NUMBER) and r > 0 for r in exp["ratios"]):
            raise ConfigError(f"'ratios' must be a nonempty list of positive numbers{_where(text, 'ratios')}")
        grid = ratio_grid(exp["n"], exp["ratios"])

    overrides = overrides or {}
    reg = data.get("regression", {})
    mv = data.get("mean_variance", {})
    seed = overrides.get("seed")
    try:
        spec = ExperimentSpec(
            process=ProcessTemplate(family, proc),
            mode=mode,
            grid=grid,
            n_samples=exp.get("n_samples", 2000),
            master_seed=exp.get("master_seed", 0) if seed is None else seed,
            coefficients=reg.get("coefficients", 1.0),
            noise_var=float(reg.get("noise_var", 1.0)),
            mu=mv.get("mu"),
            mu_range=mv.get("mu_range"),
            target_return=mv.get("target_return"),
            histogram_max=exp.get("histogram_max"),
        )
        for n, _ in spec.grid:
            spec.process.build(n)
    except InvalidSpec as exc:
        raise ConfigError(str(exc)) from exc

    ex = data.get("exponent", {})
    metric = ex.get("metric", "q0_mean")
    if metric not in METRICS:
        raise ConfigError(f"unknown metric '{metric}'{_where(text, 'metric')}")
    run = data.get("run", {})
    workers = overrides.get("workers") or run.get("workers", 1)
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    out = overrides.get("out") or run.get("out", "results")
    return RunConfig(
        spec=spec,
        out_dir=Path(out),
        workers=int(workers),
        verbosity=run.get("verbosity", 1),
        metric=metric,
        synthetic=ex.get("synthetic", False),
        source=data,
    )


def load_config(path, overrides: dict | None = None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, overrides)
