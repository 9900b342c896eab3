"""Named experiments with machine-readable pass/fail reports.

Each experiment takes an :class:`ExperimentConfig`, draws all randomness
from streams derived from ``config.seed`` and returns an
:class:`ExperimentReport` whose records compare a statistic with a bound.
Replaying a report's config reproduces it exactly, apart from wall-clock
fields.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import concentration as conc
from . import engine as E
from . import pointproc as pp
from . import recurrence as rec
from . import walks as W
from .rng import trial_rng
from .tree import ROOT, TreeKind, VertexRef, from_string

EXPERIMENTS = (
    "recurrence",
    "appendix_b",
    "returns",
    "speed",
    "ball",
    "root_visits",
    "decompose",
    "operator_fixed_point",
    "concentration",
)


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    """Flat experiment parameters; ``None`` means the experiment default."""

    experiment: str
    d: int = 2
    mu: Optional[float] = None
    n: Optional[int] = None
    T: Optional[int] = None
    trials: Optional[int] = None
    confidence: float = 0.99
    gamma: Optional[float] = None
    beta: Optional[float] = None
    alpha: Optional[float] = None
    sigmas: Optional[float] = None
    seed: int = 0
    workers: int = 1
    out: Optional[str] = None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_DEFAULTS = {
    "recurrence": dict(mu=21.0, n=500),
    "appendix_b": dict(mu=21.0, n=50, beta=2.0, T=10**4),
    "returns": dict(mu=21.0, n=8, trials=10**5, sigmas=3.0),
    "speed": dict(mu=21.0, n=6, T=16, trials=10**5, sigmas=3.0),
    "ball": dict(mu=20.0, T=40, trials=200),
    "root_visits": dict(mu=20.0, T=40, trials=200),
    "decompose": dict(n=4, trials=10**6, sigmas=4.0),
    "operator_fixed_point": dict(mu=21.0, n=6, trials=10**6, T=12, sigmas=4.0),
    "concentration": dict(n=50, trials=10**7, sigmas=4.0),
}

_KEYS = {f.name for f in dataclasses.fields(ExperimentConfig)}


def _with_defaults(cfg: ExperimentConfig) -> ExperimentConfig:
    values = cfg.to_dict()
    for k, v in _DEFAULTS[cfg.experiment].items():
        if values.get(k) is None:
            values[k] = v
    return ExperimentConfig(**values)


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """Fill defaults and check ranges, naming the constraint that fails."""
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}; choose one of {', '.join(EXPERIMENTS)}")
    cfg = _with_defaults(cfg)
    errors = []
    if int(cfg.d) != cfg.d or cfg.d < 2:
        errors.append("d: branching number must be an integer >= 2")
    if cfg.mu is not None and not (cfg.mu > 0 and math.isfinite(cfg.mu)):
        errors.append(f"mu: must satisfy mu > 0 (got {cfg.mu})")
    if cfg.trials is not None and cfg.trials < 1:
        errors.append(f"trials: must be >= 1 (got {cfg.trials})")
    if cfg.n is not None and cfg.n < 1:
        errors.append(f"n: must be >= 1 (got {cfg.n})")
    if cfg.T is not None and cfg.T < 1:
        errors.append(f"T: must be >= 1 (got {cfg.T})")
    if not 0 < cfg.confidence < 1:
        errors.append("confidence: must lie in (0, 1)")
    if cfg.workers < 1:
        errors.append("workers: must be >= 1")
    if errors:
        raise ConfigError("; ".join(errors))
    d, mu = cfg.d, cfg.mu
    if cfg.experiment == "recurrence" and cfg.gamma is not None:
        if cfg.gamma <= 0 or mu < (cfg.gamma + 3) * d * (d + 1):
            raise ConfigError(f"gamma: check_inf_lambda needs gamma > 0 and mu >= (gamma+3)d(d+1) = {(cfg.gamma + 3) * d * (d + 1):g}")
    if cfg.experiment == "appendix_b":
        if cfg.n < 2:
            raise ConfigError("n: verify_appendix_b_chain needs n >= 2")
        if cfg.beta <= 1:
            raise ConfigError("beta: sum_bound_check needs beta > 1")
    if cfg.experiment == "returns":
        alpha = cfg.alpha if cfg.alpha is not None else mu / (d + 1) - 3 * d
        if alpha <= 0 or mu < 3 * d * (d + 1) + alpha * (d + 1) - 1e-9:
            raise ConfigError(f"alpha/mu: run_self_similar dominance needs alpha > 0 and mu >= 3d(d+1) + alpha(d+1); mu = {mu:g}")
    if cfg.experiment == "speed":
        beta = cfg.beta if cfg.beta is not None else mu / (d * (d + 1)) - 3
        if beta <= 0 or mu < (3 + beta) * d * (d + 1) - 1e-9:
            raise ConfigError(f"beta/mu: passage-time bound needs beta > 0 and mu >= (3+beta)d(d+1); mu = {mu:g}")
        if cfg.T < 2 * cfg.n + 1:
            raise ConfigError("T: passage-time tails up to t = n need T >= 2n + 1")
    if cfg.experiment in ("ball", "root_visits") and cfg.trials < 2:
        raise ConfigError("trials: cross-batch comparison needs at least 2 runs")
    return cfg


def parse_config(path=None, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Build a validated config from a JSON file and/or flags.

    Flags in ``overrides`` (``None`` values ignored) take precedence over
    file values.
    """
    values: dict = {}
    if path is not None:
        with open(path) as fh:
            try:
                values = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: not valid JSON ({exc})") from None
        if not isinstance(values, dict):
            raise ConfigError(f"{path}: expected a JSON object")
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = v
    unknown = set(values) - _KEYS
    if unknown:
        raise ConfigError(f"unknown parameters: {', '.join(sorted(unknown))}")
    if "experiment" not in values:
        raise ConfigError("missing experiment name")
    return validate(ExperimentConfig(**values))


# ---------------------------------------------------------------------------
# reports


@dataclass
class CheckRecord:
    name: str
    anchor: str
    statistic: float
    bound: float
    margin: float
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "anchor": self.anchor,
            "statistic": _num(self.statistic),
            "bound": _num(self.bound),
            "margin": _num(self.margin),
            "pass": bool(self.passed),
            **({"detail": self.detail} if self.detail else {}),
        }


def _num(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else str(x)


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    records: list
    series_header: list = field(default_factory=list)
    series: list = field(default_factory=list)
    truncations: int = 0
    runtime: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.records) and all(r.passed for r in self.records)

    def failures(self) -> list:
        return [r for r in self.records if not r.passed]

    def to_dict(self, include_runtime: bool = True) -> dict:
        out = {
            "config": self.config.to_dict(),
            "passed": self.passed,
            "records": [r.to_dict() for r in self.records],
            "truncations": self.truncations,
            "notes": self.notes,
        }
        if include_runtime:
            out["runtime_seconds"] = self.runtime
        return out

    def digest(self) -> str:
        """Hash of everything except wall-clock time and the output directory."""
        report = self.to_dict(include_runtime=False)
        report["config"].pop("out", None)
        payload = json.dumps({"report": report, "series": self.series}, sort_keys=True, default=_num)
        return hashlib.sha256(payload.encode()).hexdigest()

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(self.to_dict(), indent=2, default=_num))
        with open(out / "series.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            if self.series_header:
                w.writerow(self.series_header)
            w.writerows(self.series)
        return out


def _upper_check(name, anchor, stat, bound, se, sigmas, **detail) -> CheckRecord:
    margin = sigmas * se
    return CheckRecord(name, anchor, stat, bound, margin, stat <= bound + margin, detail)


def _lower_check(name, anchor, stat, bound, se, sigmas, **detail) -> CheckRecord:
    margin = sigmas * se
    return CheckRecord(name, anchor, stat, bound, margin, stat >= bound - margin, detail)


def _close_check(name, anchor, stat, target, se, sigmas, **detail) -> CheckRecord:
    margin = sigmas * se
    return CheckRecord(name, anchor, stat, target, margin, abs(stat - target) <= margin, detail)


def _rel_median_gap(a: np.ndarray, b: np.ndarray) -> tuple:
    ma, mb = float(np.median(a)), float(np.median(b))
    centre = (ma + mb) / 2
    gap = abs(ma - mb) / centre if centre > 0 else (0.0 if ma == mb else math.inf)
    return gap, ma, mb


# ---------------------------------------------------------------------------
# deterministic experiments


def _recurrence(cfg: ExperimentConfig) -> ExperimentReport:
    d, mu, n = cfg.d, cfg.mu, cfg.n
    tables = rec.compute_tables(d, mu, n)
    records = []
    mono = rec.verify_monotone(tables)
    for check in ("P_positive", "P_nonincreasing", "lambda_nonnegative", "lambda_nonincreasing", "p_nondecreasing"):
        bad = [list(v) for v in mono.violations if v[0] == check]
        records.append(CheckRecord(check, "monotonicity of the void-probability sequences", len(bad), 0, 0, not bad, {"first_violation": bad[0] if bad else None}))
    link = rec.lambda_link_error(tables)
    records.append(CheckRecord("lambda_link", "P_n = exp(-sum lambda_k / d)", link, 1e-12, 0, link <= 1e-12))
    gamma = cfg.gamma
    if gamma is None and mu / (d * (d + 1)) - 3 > 0:
        gamma = mu / (d * (d + 1)) - 3
    if gamma is not None:
        inf = rec.check_inf_lambda(tables, gamma)
        p_bad = [list(v) for v in inf.violations if v[0] == "P_bound"]
        l_bad = [list(v) for v in inf.violations if v[0] == "lambda_bound"]
        records.append(CheckRecord("P_k_exponential_bound", "P_k <= exp(-gamma(k-1) - 2 log k)", inf.margins["log_P_margin"], 0, 0, not p_bad, {"gamma": gamma, "first_violation": p_bad[0] if p_bad else None}))
        records.append(CheckRecord("lambda_lower_bound", "lambda_k >= d gamma", inf.margins["lambda_margin"], 0, 0, not l_bad, {"gamma": gamma, "first_violation": l_bad[0] if l_bad else None}))
    rows = [list(r) for r in rec.tables_csv_rows(tables, gamma)]
    return ExperimentReport(cfg, records, ["k", "P_k", "p_k", "lambda_k", "bound_margin"], rows)


def _appendix_b(cfg: ExperimentConfig) -> ExperimentReport:
    tables = rec.compute_tables(cfg.d, cfg.mu, cfg.n + 1)
    records = []
    rows = []
    for m in range(2, cfg.n + 1):
        rep = rec.verify_appendix_b_chain(tables, m)
        records.append(CheckRecord(f"chain_n{m}", "weighted-average chain for p_n <= p_(n+1)", len(rep.violations), 0, 0, rep.passed, {"violations": [list(v) for v in rep.violations[:3]], **rep.margins}))
        rows.append([m, rep.margins["identity_rel_err"], rep.margins["min_link"], rep.passed])
    worst = None
    for m in range(1, cfg.T + 1):
        res = rec.sum_bound_check(cfg.beta, m)
        if not res["holds"] and worst is None:
            worst = m
    records.append(CheckRecord("sum_bound", "sum_k (k(n+1-k))^-beta <= 2^(beta+1) zeta(beta) n^-beta", 0 if worst is None else worst, 0, 0, worst is None, {"beta": cfg.beta, "n_max": cfg.T}))
    return ExperimentReport(cfg, records, ["n", "identity_rel_error", "min_link_step", "passed"], rows)


# ---------------------------------------------------------------------------
# frog model experiments


def returns_batch(cfg: ExperimentConfig) -> E.BatchResult:
    sim = E.SimConfig(TreeKind.rooted(cfg.d), E.Variant.SELF_SIMILAR, E.InitLaw.poisson(cfg.mu), 2 * cfg.n, seed=cfg.seed, observe_depth=0)
    return E.run_trials(sim, cfg.trials, workers=cfg.workers)


def _returns(cfg: ExperimentConfig) -> ExperimentReport:
    d, mu, n, s = cfg.d, cfg.mu, cfg.n, cfg.sigmas
    alpha = cfg.alpha if cfg.alpha is not None else mu / (d + 1) - 3 * d
    batch = returns_batch(cfg)
    N = batch.trials
    window = batch.returns[:, 2 : 2 * n + 1].sum(axis=1)
    void = float(np.mean(window == 0))
    records = [
        _upper_check(
            "void_probability",
            "return process dominates Poisson(alpha) at even times",
            void,
            math.exp(-alpha * n),
            conc.binomial_se(void, N),
            s,
            window=[2, 2 * n],
            void_trials=int(np.sum(window == 0)),
        ),
        _lower_check("mean_returns", "return process dominates Poisson(alpha) at even times", float(window.mean()), n * alpha, float(window.std(ddof=1) / math.sqrt(N)), s),
        CheckRecord("max_subtree_entries", "one surviving frog per subtree", batch.max_entries, 1, 0, batch.max_entries <= 1),
    ]
    tables = rec.compute_tables(d, mu, n)
    chi = pp.dominance_report(batch.returns, pp.IntensityOnEvens(list(tables.lam[:n])), cfg.confidence)
    alpha_rep = pp.dominance_report(batch.returns, pp.IntensityOnEvens([alpha] * n), cfg.confidence)
    for label, rep in (("chi", chi), ("alpha", alpha_rep)):
        for r in rep.records:
            records.append(CheckRecord(f"{label}_{r['name']}", "consistency with dominance (necessary condition)", r["statistic"], r["bound"], r["margin"], r["pass"]))
    rows = []
    for t in range(1, 2 * n + 1):
        rows.append([t, float(batch.returns[:, t].mean()), float(np.mean(batch.returns[:, 1 : t + 1].sum(axis=1) == 0))])
    return ExperimentReport(cfg, records, ["t", "mean_returns", "void_fraction_1_to_t"], rows)


def speed_batch(cfg: ExperimentConfig) -> E.BatchResult:
    sim = E.SimConfig(TreeKind.rooted(cfg.d), E.Variant.SELF_SIMILAR, E.InitLaw.poisson(cfg.mu), cfg.T, seed=cfg.seed, observe_depth=3)
    return E.run_trials(sim, cfg.trials, ray=E.InitialRay(2), workers=cfg.workers)


def lag_one_correlation(a: np.ndarray, b: np.ndarray) -> float:
    """Sample correlation, 0 when either sample is constant."""
    if len(a) < 2 or np.std(a) == 0 or np.std(b) == 0:
        return 0.0
    return float(np.corrcoef(a, b)[0, 1])


def _speed(cfg: ExperimentConfig) -> ExperimentReport:
    d, mu, s = cfg.d, cfg.mu, cfg.sigmas
    beta = cfg.beta if cfg.beta is not None else mu / (d * (d + 1)) - 3
    batch = speed_batch(cfg)
    tau = batch.tau  # columns: tau_0 (always 1), tau_1, tau_2
    N = batch.trials
    t1 = tau[:, 1]
    records = []
    rows = []
    for t in range(1, cfg.n + 1):
        frac = float(np.mean((t1 < 0) | (t1 > 2 * t - 1)))
        bound = math.exp(-beta * t)
        records.append(_upper_check(f"tau1_tail_t{t}", "P[tau_i > 2t-1] <= exp(-beta t)", frac, bound, conc.binomial_se(frac, N), s, t=t))
        rows.append([t, frac, bound])
    both = (tau[:, 1] >= 0) & (tau[:, 2] >= 0)
    r = lag_one_correlation(tau[both, 1].astype(float), tau[both, 2].astype(float))
    n_pairs = int(both.sum())
    records.append(CheckRecord("lag1_correlation", "passage times are i.i.d.", r, 3 / math.sqrt(max(n_pairs, 1)), 0, r < 3 / math.sqrt(max(n_pairs, 1)), {"pairs": n_pairs}))
    records.append(CheckRecord("max_subtree_entries", "one surviving frog per subtree", batch.max_entries, 1, 0, batch.max_entries <= 1))
    return ExperimentReport(cfg, records, ["t", "P_tau1_gt_2t_minus_1", "bound"], rows)


def _ball(cfg: ExperimentConfig, stop_on_truncation: bool = True) -> ExperimentReport:
    T = cfg.T
    sim = E.SimConfig(TreeKind.rooted(cfg.d), E.Variant.STANDARD, E.InitLaw.poisson(cfg.mu), T, seed=cfg.seed)
    D_rows = []
    truncations = 0
    partial = None
    for i in range(cfg.trials):
        try:
            tr = E.run(sim, trial=i)
        except E.TruncationError as exc:
            truncations += 1
            partial = (i, exc)
            if stop_on_truncation:
                break
            continue
        D_rows.append(tr.D)
    notes = []
    records = []
    if truncations:
        i, exc = partial
        done = exc.trace.steps_completed
        notes.append(f"trial {i}: {exc}; D_t for t <= {done}: {exc.trace.D[: done + 1].tolist()}")
        records.append(CheckRecord("runs_completed", "ball growth measured to the horizon", len(D_rows), cfg.trials, 0, False, {"truncated_trial": i, "steps_completed": done, "partial_D": exc.trace.D[: done + 1].tolist()}))
    D = np.array(D_rows) if D_rows else np.zeros((0, T + 1), np.int64)
    if len(D) >= 2:
        mono = bool(np.all(np.diff(D, axis=1) >= 0))
        records.append(CheckRecord("D_nondecreasing", "D_t is nondecreasing", float(mono), 1, 0, mono))
        speed = D[:, T] / T
        records.append(CheckRecord("median_speed_positive", "linear ball growth", float(np.median(speed)), 0, 0, float(np.median(speed)) > 0))
        half = len(D) // 2
        gap, m1, m2 = _rel_median_gap(speed[:half], speed[half:])
        records.append(CheckRecord("cross_batch_median", "linear ball growth", gap, 0.15, 0, gap <= 0.15, {"batch_medians": [m1, m2]}))
    rows = [[t, float(np.median(D[:, t])) if len(D) else "", float(D[:, t].mean()) if len(D) else ""] for t in range(T + 1)]
    return ExperimentReport(cfg, records, ["t", "median_D_t", "mean_D_t"], rows, truncations=truncations, notes=notes)


def root_visits_batch(cfg: ExperimentConfig) -> E.BatchResult:
    sim = E.SimConfig(TreeKind.rooted(cfg.d), E.Variant.STANDARD, E.InitLaw.poisson(cfg.mu), cfg.T, seed=cfg.seed, observe_depth=0)
    return E.run_trials(sim, cfg.trials, workers=cfg.workers)


def _root_visits(cfg: ExperimentConfig) -> ExperimentReport:
    T = cfg.T
    batch = root_visits_batch(cfg)
    V = batch.V
    mono = bool(np.all(np.diff(V, axis=1) >= 0))
    records = [CheckRecord("V_nondecreasing", "V_t is nondecreasing", float(mono), 1, 0, mono)]
    mT, mh = float(np.median(V[:, T])), float(np.median(V[:, T // 2]))
    records.append(CheckRecord("linear_growth", "root visits grow linearly", mT, 2 * mh * 0.75, 0, mT >= 2 * mh * 0.75, {"median_V_half": mh}))
    half = batch.trials // 2
    gap, m1, m2 = _rel_median_gap(V[:half, T], V[half:, T])
    records.append(CheckRecord("cross_batch_median", "root visits grow linearly", gap, 0.15, 0, gap <= 0.15, {"batch_medians": [m1, m2]}))
    rows = [[t, float(np.median(V[:, t])), float(V[:, t].mean())] for t in range(T + 1)]
    return ExperimentReport(cfg, records, ["t", "median_V_t", "mean_V_t"], rows)


# ---------------------------------------------------------------------------
# walk decomposition


ROOTED_STARTS = {"T2": ["", "0"], "T2^3": ["", "0", "0/1"]}
DILATION_SPINES = {
    "T2": ["0", "", "1", "1/0", "1/0/1", "1/0/1/1"],
    "T2^3": ["0/1", "0", "", "1", "1/0", "1/0/1", "1/0"],
}


def _tree_named(name: str, d: int) -> TreeKind:
    return TreeKind.rooted(d) if name == "T2" else TreeKind.finite(d, 3)


def _decompose(cfg: ExperimentConfig) -> ExperimentReport:
    d, steps, N, s = cfg.d, cfg.n, cfg.trials, cfg.sigmas
    records = []
    rows = []
    rep = W.spine_and_J_law_check(d, steps, N, trial_rng(cfg.seed, 0))
    records.append(CheckRecord("hom_path_tv", "excursion insertion gives simple random walk", rep.path_law_tv, 0.015, 0, rep.path_law_tv < 0.015))
    records.append(CheckRecord("hom_J_law", "joint law of path and spine index", rep.max_se_deviation, s, 0, rep.max_se_deviation <= s))
    stream = 1
    for name, starts in ROOTED_STARTS.items():
        tree = _tree_named(name, d)
        for start in starts:
            v = from_string(start)
            codes, _ = W.composed_path_codes(tree, v, steps, N, trial_rng(cfg.seed, stream))
            direct = W.srw_path_codes(tree, v, steps, N, trial_rng(cfg.seed, stream + 1))
            stream += 2
            emp = W.empirical_law(codes)
            tv_sim = W.tv_distance(emp, W.empirical_law(direct))
            tv_exact = W.tv_distance(emp, W.srw_path_law(tree, v, steps))
            label = f"{name}_from_{start or 'root'}"
            records.append(CheckRecord(f"{label}_tv_vs_simulated", "root-biased spine plus excursions gives simple random walk", tv_sim, 0.015, 0, tv_sim < 0.015, {"tv_vs_exact": tv_exact}))
            rows.append(["path_tv", label, tv_sim, tv_exact])
    for name, spine_s in DILATION_SPINES.items():
        tree = _tree_named(name, d)
        spine = [from_string(x) for x in spine_s]
        ell = W.insertion_samples(tree, spine, N, trial_rng(cfg.seed, stream))
        stream += 1
        worst = -math.inf
        for j in range(ell.shape[1]):
            for t in range(0, 21, 2):
                frac = float(np.mean(ell[:, j] >= t + 2))
                bound = W.dilation_tail_bound(t)
                se = conc.binomial_se(frac, N)
                worst = max(worst, frac - bound - s * se)
                rows.append(["dilation_tail", f"{name}_j{j}_t{t}", frac, bound])
        records.append(CheckRecord(f"{name}_dilation_tail", "P[ell_j >= t+2] <= ((1+e^(-1/14))/2)^(t/2)", worst, 0, 0, worst <= 0, {"spine": spine_s}))
    return ExperimentReport(cfg, records, ["kind", "label", "statistic", "reference"], rows)


# ---------------------------------------------------------------------------
# star-graph operator


def _operator(cfg: ExperimentConfig) -> ExperimentReport:
    d, mu, n, N, s = cfg.d, cfg.mu, cfg.n, cfg.trials, cfg.sigmas
    records = []
    rows = []
    horizon = 2 * n + 2
    out = E.star_A_counts(np.zeros((0, horizon + 1), np.int64), d, mu, N, trial_rng(cfg.seed, 0), horizon)
    m2 = float(out[:, 2].mean())
    records.append(_close_check("A_empty_atom2_mean", "A applied to the empty process is Poi(mu/(d+1)) at time 2", m2, mu / (d + 1), float(out[:, 2].std(ddof=1) / math.sqrt(N)), 3.0))
    records.append(CheckRecord("A_empty_other_times", "A applied to the empty process is supported on time 2", int(out.sum() - out[:, 2].sum()), 0, 0, out.sum() == out[:, 2].sum()))

    tables = rec.compute_tables(d, mu, n)
    lam = list(tables.lam[:n])
    rng = trial_rng(cfg.seed, 1)
    width = 2 * n + 2 + 2 * n
    chi = pp.poisson_counts(pp.IntensityOnEvens(lam), N, rng, width)
    S = pp.sample_S_batch(mu, d, lam, N, rng)
    shifted = pp.shift_counts(pp.thin_counts(chi, 1 / d, rng), 2 + 2 * S, width)
    for k in range(1, min(4, n - 1) + 1):
        voids, _ = pp.void_fraction(shifted, 4, 2 * k + 2)
        frac = voids / N
        target = rec.chi_prefix_void(tables, k)
        records.append(_close_check(f"shifted_chi_void_k{k}", "void probability of the shifted thinned chi equals P_(k+1)/P_1", frac, target, conc.binomial_se(target, N), s, window=[4, 2 * k + 2]))
        rows.append(["shifted_chi_void", k, frac, target])

    rhs = E.sample_rhs_dominated_counts(lam, d, mu, N, trial_rng(cfg.seed, 2), horizon)
    means = E.rhs_dominated_means(lam, d, mu, horizon)
    for t in (2, 4):
        m = float(rhs[:, t].mean())
        records.append(_close_check(f"rhs_mean_t{t}", "mean of the dominated decomposition", m, means[t], float(rhs[:, t].std(ddof=1) / math.sqrt(N)), 3.0))
        rows.append(["rhs_mean", t, m, means[t]])

    theta_trials = max(2, min(N, 2 * 10**4))
    theta_cfg = dataclasses.replace(cfg, n=cfg.T // 2, trials=theta_trials)
    theta = returns_batch(theta_cfg).returns
    A_theta = E.star_A_counts(theta, d, mu, max(2, min(N, 10**5)), trial_rng(cfg.seed, 3), theta.shape[1] - 1)
    for t in (2, 4):
        a, b = theta[:, t], A_theta[:, t]
        se = math.sqrt(a.var(ddof=1) / len(a) + b.var(ddof=1) / len(b))
        records.append(_close_check(f"fixed_point_t{t}", "the return process is a fixed point of A", float(b.mean()), float(a.mean()), se, s))
        rows.append(["fixed_point", t, float(b.mean()), float(a.mean())])
    return ExperimentReport(cfg, records, ["kind", "index", "statistic", "reference"], rows)


# ---------------------------------------------------------------------------
# concentration


EXP_SUM_CASES = ((1.0, 1.0, 0.05), (2.0, 0.5, 0.1), (1.0, 2.0, 0.02))


def _concentration(cfg: ExperimentConfig) -> ExperimentReport:
    N, s, n = cfg.trials, cfg.sigmas, cfg.n
    records = []
    rows = []
    for i, lam in enumerate((10.0, 100.0)):
        x = trial_rng(cfg.seed, i).poisson(lam, N)
        for alpha, side in ((0.5, "lower"), (2.0, "upper")):
            frac = float(np.mean(x <= alpha * lam) if side == "lower" else np.mean(x >= alpha * lam))
            bound = conc.poisson_tail_bound(lam, alpha, side)
            records.append(_upper_check(f"poisson_{side}_lam{lam:g}", "Poisson tail bound", frac, bound, conc.binomial_se(frac, N), s, alpha=alpha))
            rows.append([f"poisson_{side}", lam, alpha, frac, bound])
    trials = max(1, min(N, 10**5))
    for j, (C, b, b_prime) in enumerate(EXP_SUM_CASES):
        rng = trial_rng(cfg.seed, 10 + j)
        # tails exactly C exp(-b l) beyond log(C)/b
        X = (math.log(max(C, 1.0)) + rng.exponential(1.0, (trials, n))) / b
        Cp = conc.exp_sum_constant(C, b, b_prime)
        frac = float(np.mean(X.sum(axis=1) >= Cp * n))
        bound = math.exp(-b_prime * n)
        records.append(_upper_check(f"exp_sum_C{C:g}_b{b:g}_bp{b_prime:g}", "sum of exponentially tailed variables", frac, bound, conc.binomial_se(frac, trials), s, C_prime=Cp))
        rows.append(["exp_sum", C, b, frac, bound])
    return ExperimentReport(cfg, records, ["kind", "param1", "param2", "frequency", "bound"], rows)


_RUNNERS: dict = {
    "recurrence": _recurrence,
    "appendix_b": _appendix_b,
    "returns": _returns,
    "speed": _speed,
    "ball": _ball,
    "root_visits": _root_visits,
    "decompose": _decompose,
    "operator_fixed_point": _operator,
    "concentration": _concentration,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run a validated experiment and time it."""
    cfg = validate(cfg)
    start = time.perf_counter()
    report = _RUNNERS[cfg.experiment](cfg)
    report.runtime = time.perf_counter() - start
    if cfg.out:
        report.write(cfg.out)
    return report
