"""Sweep harness: config files, method dispatch and CSV reports.

A config is flat ``key = value`` text; a repeated key builds a list.  Every
output byte is a function of the config (including its seed).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .cbc import CbcConfig, encode_with_cbc
from .corruptions import CorruptionSpec, corrupt
from .errors import ConfigurationError
from .langevin import LangevinConfig
from .metrics import METHODS, TradeoffRecord, best_of_k_indices, make_records, write_records_csv
from .ode import decode, encode, make_grid
from .pipelines import EditConfig, SdeditConfig, code_full, ode_edit, sdedit
from .schedule import make_linear_schedule
from .score import GmmPrior, GmmScoreModel, ScoreModel, TEMPLATE_SETS, load_prior, named_template_prior, toy_gmm_2d

LIST_KEYS = ("corruption", "method", "depths", "step_size", "eta", "t0")
SCALAR_KEYS = {
    "prior": str, "jitter": float, "n_inputs": int, "samples_per_input": int, "keep": int,
    "langevin_steps": int, "anneal_k": int, "anneal_coef": float, "grid_steps": int,
    "grid_spacing": str, "score_sign": int, "n_bins": int, "seed": int, "out_dir": str,
    "score_net": str,
}
DETERMINISTIC = {"ddim_roundtrip", "ddim_cbc"}
SUMMARY_METRICS = ("psnr_to_input", "ssim_to_input", "l2_to_input", "loglik", "l2_to_source")


def parse_config_text(text: str) -> dict[str, list[str]]:
    """``key = value`` lines; ``#`` starts a comment; repeated keys accumulate."""
    out: dict[str, list[str]] = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out.setdefault(key, []).append(value)
    return out


def _parse_depths(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace("/", ",").split(",") if v.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    prior: str = "patterns16"
    jitter: float = 0.1
    corruptions: tuple[CorruptionSpec, ...] = ()
    methods: tuple[str, ...] = ()
    depths: tuple[tuple[int, ...], ...] = ((40,),)
    step_sizes: tuple[float, ...] = (1e-3,)
    etas: tuple[float, ...] = (1.7,)
    t0s: tuple[int, ...] = (200,)
    n_inputs: int = 50
    samples_per_input: int = 4
    keep: int = 4
    langevin_steps: int = 200
    anneal_k: int = 4
    anneal_coef: float = 0.8
    grid_steps: int = 200
    grid_spacing: str = "angle"
    score_sign: int = 1
    n_bins: int = 4
    seed: int = 0
    out_dir: str = "out"
    score_net: str | None = None
    base_dir: Path = field(default=Path("."), compare=False)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    def problems(self) -> list[str]:
        """Every offending key with a reason; empty when the config is runnable."""
        bad = []
        if not self.methods:
            bad.append("method: at least one method is required")
        bad += [f"method: unknown {m!r}" for m in self.methods if m not in METHODS]
        if not self.corruptions:
            bad.append("corruption: at least one corruption is required")
        if self.prior not in TEMPLATE_SETS and self.prior != "toy2d" and not self.resolve(self.prior).is_file():
            bad.append(f"prior: {self.prior!r} is neither a known prior nor an existing file")
        if self.score_net is not None and not self.resolve(self.score_net).is_file():
            bad.append(f"score_net: file {self.score_net!r} does not exist")
        if not self.jitter > 0:
            bad.append("jitter: must be positive")
        for key, grid in (("depths", self.depths), ("step_size", self.step_sizes),
                          ("eta", self.etas), ("t0", self.t0s)):
            if not grid:
                bad.append(f"{key}: sweep grid is empty")
        for d in self.depths:
            if not d or any(a <= b for a, b in zip(d, d[1:])):
                bad.append(f"depths: {d} must be non-empty and strictly decreasing")
            elif d[0] >= self.grid_steps or d[-1] < 0:
                bad.append(f"depths: {d} outside grid positions [0, {self.grid_steps})")
        bad += [f"step_size: {e!r} must be >= 0" for e in self.step_sizes if not e >= 0]
        bad += [f"eta: {e!r} must be >= 0" for e in self.etas if not e >= 0]
        bad += [f"t0: {t!r} outside (0, 1000)" for t in self.t0s if not 0 < t < 1000]
        for key in ("n_inputs", "samples_per_input", "keep", "langevin_steps", "anneal_k", "n_bins"):
            if getattr(self, key) < 1:
                bad.append(f"{key}: must be >= 1")
        if self.keep > self.samples_per_input:
            bad.append("keep: cannot exceed samples_per_input")
        if not 0 < self.anneal_coef <= 1:
            bad.append("anneal_coef: must lie in (0, 1]")
        if not 1 <= self.grid_steps <= 1000:
            bad.append("grid_steps: must lie in [1, 1000]")
        if self.grid_spacing not in ("angle", "uniform"):
            bad.append("grid_spacing: must be 'angle' or 'uniform'")
        if self.score_sign not in (1, -1):
            bad.append("score_sign: must be 1 or -1")
        return bad

    def validate(self) -> "ExperimentConfig":
        bad = self.problems()
        if bad:
            raise ConfigurationError("invalid experiment config:\n  " + "\n  ".join(bad))
        return self

    @classmethod
    def from_mapping(cls, raw: dict[str, list[str]], base_dir=".") -> "ExperimentConfig":
        """Build from parsed config text; conversion failures are collected, not raised one by one."""
        bad, kw = [], {"base_dir": Path(base_dir)}
        unknown = sorted(set(raw) - set(LIST_KEYS) - set(SCALAR_KEYS))
        bad += [f"{k}: unknown key" for k in unknown]
        for key, cast in SCALAR_KEYS.items():
            if key not in raw:
                continue
            if len(raw[key]) > 1:
                bad.append(f"{key}: given {len(raw[key])} times but takes one value")
                continue
            try:
                kw[key] = cast(raw[key][0])
            except ValueError:
                bad.append(f"{key}: cannot read {raw[key][0]!r} as {cast.__name__}")
        list_casts = {"corruption": ("corruptions", CorruptionSpec.parse), "method": ("methods", str),
                      "depths": ("depths", _parse_depths), "step_size": ("step_sizes", float),
                      "eta": ("etas", float), "t0": ("t0s", int)}
        for key, (name, cast) in list_casts.items():
            if key not in raw:
                continue
            vals = []
            for v in raw[key]:
                try:
                    vals.append(cast(v))
                except (ValueError, ConfigurationError) as exc:
                    bad.append(f"{key}: {v!r} ({exc})")
            kw[name] = tuple(vals)
        if bad:
            raise ConfigurationError("invalid experiment config:\n  " + "\n  ".join(bad))
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        return cls.from_mapping(parse_config_text(path.read_text()), base_dir=path.parent)


def build_prior(name: str, jitter: float = 0.1, base_dir=".") -> GmmPrior:
    """A named template set, ``toy2d``, or a prior text file."""
    if name in TEMPLATE_SETS:
        return named_template_prior(name, jitter)
    if name == "toy2d":
        return toy_gmm_2d()
    path = Path(name)
    return load_prior(path if path.is_absolute() else Path(base_dir) / path)


def _seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def _fmt(v) -> str:
    return format(v, "g") if isinstance(v, float) else str(v)


def _points(cfg: ExperimentConfig, method: str) -> list[dict]:
    """Hyperparameter points of one method, in a fixed order."""
    single = sorted({d for ds in cfg.depths for d in ds}, reverse=True)
    if method in ("code", "code_no_cbc"):
        etas = cfg.etas if method == "code" else (None,)
        return [{"depths": d, "eps": e, "eta": h} for d in cfg.depths for e in cfg.step_sizes for h in etas]
    if method == "ode_edit":
        return [{"depth": d, "eps": e} for d in single for e in cfg.step_sizes]
    if method == "sdedit":
        return [{"t0": t} for t in cfg.t0s]
    if method == "ddim_roundtrip":
        return [{"depth": d} for d in single]
    return [{"depth": d, "eta": h} for d in single for h in cfg.etas]


def describe_point(cfg: ExperimentConfig, method: str, p: dict) -> str:
    parts = []
    if "depths" in p:
        parts.append("depths=" + "/".join(map(str, p["depths"])))
    if "depth" in p:
        parts.append(f"depth={p['depth']}")
    if "eps" in p:
        k = cfg.anneal_k if method != "ode_edit" else 1
        parts += [f"eps={_fmt(p['eps'])}", f"K={k}", f"alpha={_fmt(cfg.anneal_coef)}",
                  f"n={cfg.langevin_steps}"]
    if p.get("eta") is not None:
        parts.append(f"eta={_fmt(p['eta'])}")
    if "t0" in p:
        parts.append(f"t0={p['t0']};N={p['t0']}")
    return ";".join(parts)


def run_method(model: ScoreModel, x, method: str, p: dict, cfg: ExperimentConfig, grid, seed: int) -> np.ndarray:
    """One batched run of ``method`` at hyperparameter point ``p``."""
    lang = LangevinConfig(cfg.langevin_steps, p.get("eps", 0.0), cfg.anneal_k, cfg.anneal_coef,
                          seed, cfg.score_sign)
    if method in ("code", "code_no_cbc"):
        cbc = CbcConfig(p["eta"], True) if method == "code" else CbcConfig(enabled=False)
        return code_full(model, x, EditConfig(p["depths"], lang, cbc, grid))
    if method == "ode_edit":
        return ode_edit(model, x, p["depth"], replace(lang, anneal_steps=1), grid)
    if method == "sdedit":
        return sdedit(model, x, SdeditConfig(p["t0"], p["t0"], 1, seed))
    if method == "ddim_roundtrip":
        return decode(model, encode(model, x, grid, p["depth"]), grid)
    if method == "ddim_cbc":
        return decode(model, encode_with_cbc(model, x, grid, p["depth"], CbcConfig(p["eta"])), grid)
    raise ConfigurationError(f"unknown method {method!r}")


def collect_records(cfg: ExperimentConfig, model: ScoreModel | None = None) -> list[TradeoffRecord]:
    """Run the whole sweep and return records in a fixed order."""
    cfg.validate()
    prior = build_prior(cfg.prior, cfg.jitter, cfg.base_dir)
    if model is None:
        model = _model_for(cfg, prior)
    grid = make_grid(model.schedule, cfg.grid_steps, cfg.grid_spacing)
    sources = prior.sample(cfg.n_inputs, _seed(cfg.seed, 0))
    records = []
    for ci, spec in enumerate(cfg.corruptions):
        inputs = corrupt(sources, spec, prior.image_shape)
        for method in cfg.methods:
            mi = METHODS.index(method)
            for pi, p in enumerate(_points(cfg, method)):
                n_samples = 1 if method in DETERMINISTIC else cfg.samples_per_input
                hp = describe_point(cfg, method, p)
                outs, recs = [], []
                for s in range(n_samples):
                    out = run_method(model, inputs, method, p, cfg, grid, _seed(cfg.seed, ci, mi, pi, s))
                    outs.append(out)
                    recs.append(make_records(prior, out, inputs, sources, corruption=str(spec),
                                             method=method, hyperparams=hp, sample=s))
                keep = min(cfg.keep, n_samples)
                for i in range(cfg.n_inputs):
                    kept = set(best_of_k_indices([o[i] for o in outs], sources[i], keep))
                    for s in range(n_samples):
                        recs[s][i].kept = int(s in kept)
                        records.append(recs[s][i])
    return records


def _model_for(cfg: ExperimentConfig, prior: GmmPrior) -> ScoreModel:
    schedule = make_linear_schedule()
    if cfg.score_net is None:
        return GmmScoreModel(prior, schedule)
    from .scorematch import NetScoreModel, load_net

    return NetScoreModel(load_net(cfg.resolve(cfg.score_net)), schedule)


def _median(vals) -> float:
    vals = [v for v in vals if not math.isnan(v)]
    return float(np.median(vals)) if vals else math.nan


def summarize(records) -> list[dict]:
    """Per (corruption, method) medians over kept records, in first-seen order."""
    groups: dict[tuple[str, str], list] = {}
    for r in records:
        if r.kept:
            groups.setdefault((r.corruption, r.method), []).append(r)
    rows = []
    for (corr, method), rs in groups.items():
        row = {"corruption": corr, "method": method, "count": len(rs)}
        for m in SUMMARY_METRICS:
            row[f"median_{m}"] = _median([getattr(r, m) for r in rs])
        rows.append(row)
    return rows


def fidelity_bins(l2_values, n_bins: int) -> np.ndarray:
    """Quantile edges over the pooled L2-to-input values."""
    vals = np.asarray(l2_values, dtype=np.float64)
    if vals.size == 0:
        raise ConfigurationError("no values to bin")
    return np.quantile(vals, np.linspace(0.0, 1.0, n_bins + 1))


def bin_index(values, edges) -> np.ndarray:
    """Bin of each value; the last bin is closed on the right."""
    return np.clip(np.searchsorted(edges, values, side="right") - 1, 0, len(edges) - 2)


def tradeoff_table(records, n_bins: int = 4) -> list[dict]:
    """Fidelity-binned realism medians per corruption and method (kept records only)."""
    rows = []
    corrs = list(dict.fromkeys(r.corruption for r in records if r.kept))
    for corr in corrs:
        rs = [r for r in records if r.kept and r.corruption == corr]
        edges = fidelity_bins([r.l2_to_input for r in rs], n_bins)
        bins = bin_index([r.l2_to_input for r in rs], edges)
        for b in range(n_bins):
            for method in dict.fromkeys(r.method for r in rs):
                sel = [r for r, k in zip(rs, bins) if k == b and r.method == method]
                rows.append({
                    "corruption": corr, "bin": b, "l2_low": float(edges[b]), "l2_high": float(edges[b + 1]),
                    "method": method, "count": len(sel),
                    "median_l2_to_input": _median([r.l2_to_input for r in sel]),
                    "median_loglik": _median([r.loglik for r in sel]),
                })
    return rows


def _write_rows(path, rows, header) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format(row[h], ".10g") if isinstance(row[h], float) else row[h] for h in header])


SUMMARY_HEADER = ["corruption", "method", "count"] + [f"median_{m}" for m in SUMMARY_METRICS]
TRADEOFF_HEADER = ["corruption", "bin", "l2_low", "l2_high", "method", "count",
                   "median_l2_to_input", "median_loglik"]


def run_experiment(cfg: ExperimentConfig, model: ScoreModel | None = None) -> dict[str, Path]:
    """Run the sweep and write ``records.csv``, ``summary.csv`` and ``tradeoff.csv``."""
    records = collect_records(cfg, model)
    out = cfg.resolve(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / f"{name}.csv" for name in ("records", "summary", "tradeoff")}
    write_records_csv(paths["records"], records)
    _write_rows(paths["summary"], summarize(records), SUMMARY_HEADER)
    _write_rows(paths["tradeoff"], tradeoff_table(records, cfg.n_bins), TRADEOFF_HEADER)
    return paths
