"""Seeded Monte Carlo sweeps pairing measured and predicted SNR.

Seeding rule: every trial draws from
``SeedSequence(seed, spawn_key=(M, K, trial))`` spawned into three children
(signal, matrix, noise). B, the algorithm and the scenario are not part of
the key, so every curve of a sweep sees the same signals and matrices
(common random numbers) and no result depends on the order in which
points are evaluated. With ``matrix_mode = "fixed"`` the matrix child comes
from ``spawn_key=(M, K)`` instead, giving one matrix per (M, K).
"""
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import theory
from .errors import ConfigError, InvalidSpecError, NumericalError
from .families import Family
from .quantizer import ArithmeticMode, FoldingSpec, QuantizerSpec, fold_coefficients, quantize
from .reconstruction import AlgoConfig, Algorithm, reconstruct
from .sensing import build_matrix, measure
from .signal_model import SignalSpec, TailSpec, generate, sparse_truncation

CSV_COLUMNS = (
    "family", "M", "K", "B", "scenario", "algorithm", "snr_st_db", "snr_th_db", "gap_db",
    "saturation_count", "trials", "failures", "support_misses", "matrix_mode",
)
STANDARD_B_LIST = (4, 6, 8, 10, 12, 14, 16, 18, 20, 24)


class Scenario(str, Enum):
    SPARSE = "sparse"
    NONSPARSE = "nonsparse"
    FOLDED = "folded"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep over M_list x K_list x B_list.

    ``tail_decay`` sets the nonsparse tail exp(-decay * p / K); the folded
    scenario uses a tail only when it is set. ``amplitude_scale`` multiplies
    the signal (headroom for matrices whose measurements can leave the
    register range). ``floating_power``, when set, rescales each trial so
    that the mean squared real measurement component equals it.
    """

    N: int
    M_list: tuple
    K_list: tuple
    B_list: tuple
    family: Family = Family.PARTIAL_DFT
    scenario: Scenario = Scenario.SPARSE
    algorithm: Algorithm = Algorithm.OMP
    trials: int = 100
    seed: int = 0
    fold: Optional[FoldingSpec] = None
    output_path: Optional[str] = None
    jitter: float = 0.2
    tail_decay: Optional[float] = None
    mode: ArithmeticMode = ArithmeticMode.FIXED_POINT
    floating_power: Optional[float] = None
    matrix_mode: str = "fresh"
    cap_at_one: bool = False
    amplitude_scale: float = 1.0
    snr_average: str = "energy"
    algo: dict = field(default_factory=dict)
    jobs: int = 1

    def __post_init__(self):
        for name in ("M_list", "K_list", "B_list"):
            vals = tuple(int(v) for v in getattr(self, name))
            if not vals:
                raise InvalidSpecError(f"{name} must not be empty")
            object.__setattr__(self, name, vals)
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        object.__setattr__(self, "mode", ArithmeticMode(self.mode))
        if self.trials < 1:
            raise InvalidSpecError("trials must be at least 1")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidSpecError("seed must be a 64-bit unsigned integer")
        if self.matrix_mode not in ("fresh", "fixed"):
            raise InvalidSpecError("matrix_mode must be 'fresh' or 'fixed'")
        if self.snr_average not in ("energy", "db"):
            raise InvalidSpecError("snr_average must be 'energy' or 'db'")
        if self.amplitude_scale <= 0:
            raise InvalidSpecError("amplitude_scale must be positive")
        if self.floating_power is not None and self.floating_power <= 0:
            raise InvalidSpecError("floating_power must be positive")
        if self.jobs < 1:
            raise InvalidSpecError("jobs must be at least 1")
        if self.scenario is Scenario.NONSPARSE and self.tail_decay is None:
            object.__setattr__(self, "tail_decay", 8.0)
        if self.scenario is Scenario.FOLDED and (self.fold is None or not self.fold.active):
            raise InvalidSpecError("the folded scenario needs an active fold spec")
        for M in self.M_list:
            if not 1 <= M <= self.N:
                raise InvalidSpecError(f"M={M} must lie in [1, N={self.N}]")
            for K in self.K_list:
                if not 1 <= K <= M:
                    raise InvalidSpecError(f"K={K} must lie in [1, M={M}]")
        for B in self.B_list:
            QuantizerSpec(B)
        AlgoConfig(K=1, **self.algo)

    def points(self):
        for M in self.M_list:
            for K in self.K_list:
                for B in self.B_list:
                    yield Point(self, M, K, B)


@dataclass(frozen=True)
class Point:
    config: ExperimentConfig
    M: int
    K: int
    B: int


@dataclass
class TrialResult:
    error_energy: float
    signal_energy: float
    predicted_error: float
    saturated: int
    support_miss: bool
    coefficient_error_variance: float


@dataclass
class PointResult:
    family: str
    M: int
    K: int
    B: int
    scenario: str
    algorithm: str
    snr_st_db: float
    snr_th_db: float
    gap_db: float
    saturation_count: int
    trials: int
    failures: int
    support_misses: int
    matrix_mode: str
    error_energy: float = 0.0
    predicted_error: float = 0.0
    coefficient_error_variance: float = 0.0
    failure_messages: list = field(default_factory=list)

    def row(self):
        return [getattr(self, c) for c in CSV_COLUMNS]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list

    def find(self, **where):
        return [r for r in self.rows if all(getattr(r, k) == v for k, v in where.items())]


def _seed_int(ss):
    return int(ss.generate_state(1, np.uint64)[0])


def trial_seeds(seed, M, K, trial, matrix_mode="fresh"):
    """(signal_seed, matrix_seed, noise_seed) for one trial."""
    sig, mat, noise = np.random.SeedSequence(seed, spawn_key=(M, K, trial)).spawn(3)
    if matrix_mode == "fixed":
        mat = np.random.SeedSequence(seed, spawn_key=(M, K))
    return _seed_int(sig), _seed_int(mat), _seed_int(noise)


def _scenario_tail(cfg):
    if cfg.scenario is Scenario.SPARSE or cfg.tail_decay is None:
        return None
    return TailSpec(cfg.tail_decay)


def _folding_variance(cfg, B):
    fold = cfg.fold
    var = fold.additive_noise_sigma ** 2
    if fold.quantize_coefficients:
        var += theory.sigma_e_sq(fold.B_z if fold.B_z is not None else B)
    return var


def run_trial(point, trial):
    """Generate, measure, (fold), quantise and reconstruct one realisation.

    Returns a :class:`TrialResult` whose error is measured against the
    K-term truncation of the original (pre-folding) signal.
    """
    cfg, M, K, B = point.config, point.M, point.K, point.B
    s_seed, m_seed, n_seed = trial_seeds(cfg.seed, M, K, trial, cfg.matrix_mode)
    x = generate(SignalSpec(cfg.N, K, M, cfg.jitter, _scenario_tail(cfg), s_seed, cfg.cap_at_one))
    A = build_matrix(cfg.family, M, cfg.N, m_seed)
    noise_rng = np.random.default_rng(n_seed)
    coef = x.coefficients * cfg.amplitude_scale
    if cfg.floating_power is not None:
        power = float(np.sum(np.abs(measure(A, coef)) ** 2)) / (2 * M)
        if power > 0:
            coef = coef * math.sqrt(cfg.floating_power / power)
    x_k, tail = sparse_truncation(coef, K)
    sensed = coef
    sigma_z_sq = 0.0
    if cfg.scenario is Scenario.FOLDED:
        folded = fold_coefficients(coef, cfg.fold, seed=noise_rng.integers(2 ** 63), B=B)
        sensed = folded.coefficients
        sigma_z_sq = _folding_variance(cfg, B)
    q = quantize(measure(A, sensed), QuantizerSpec(B, cfg.mode), noise_rng)
    out = reconstruct(cfg.algorithm, A, q.values, AlgoConfig(K=K, **cfg.algo), truth=x_k)
    signal_energy = x_k.energy()
    spec = theory.ScenarioSpec(
        N=cfg.N, M=M, K=K, B=B, family=cfg.family, tail_energy=tail, sigma_z_sq=sigma_z_sq,
        signal_energy_K=signal_energy, mode=cfg.mode,
        sigma_X_sq=theory.floating_sigma_x_sq(signal_energy, K),
    )
    pred = theory.predict(spec).expected_error_energy
    miss = not np.array_equal(np.sort(out.support), np.sort(x_k.support))
    diff = out.X_R[x_k.support] - x_k.coefficients[x_k.support]
    return TrialResult(out.error_energy_vs_truth, signal_energy, pred, q.saturated, miss,
                       float(np.mean(np.abs(diff) ** 2)))


def _db(num, den):
    if den <= 0:
        return math.inf if num > 0 else math.nan
    if num <= 0:
        return -math.inf
    return 10 * math.log10(num / den)


def run_point(point):
    cfg = point.config
    done, failures = [], []
    for trial in range(cfg.trials):
        try:
            done.append(run_trial(point, trial))
        except NumericalError as exc:
            failures.append(f"trial {trial}: {exc}")
    sig = sum(t.signal_energy for t in done)
    err = sum(t.error_energy for t in done)
    pred = sum(t.predicted_error for t in done)
    if cfg.snr_average == "db" and done:
        st = float(np.mean([_db(t.signal_energy, t.error_energy) for t in done]))
        th = float(np.mean([_db(t.signal_energy, t.predicted_error) for t in done]))
    else:
        st, th = _db(sig, err), _db(sig, pred)
    n = max(len(done), 1)
    return PointResult(
        family=cfg.family.value, M=point.M, K=point.K, B=point.B, scenario=cfg.scenario.value,
        algorithm=cfg.algorithm.value, snr_st_db=st, snr_th_db=th, gap_db=st - th,
        saturation_count=sum(t.saturated for t in done), trials=cfg.trials,
        failures=len(failures), support_misses=sum(t.support_miss for t in done),
        matrix_mode=cfg.matrix_mode, error_energy=err / n, predicted_error=pred / n,
        coefficient_error_variance=float(np.mean([t.coefficient_error_variance for t in done]))
        if done else math.nan,
        failure_messages=failures,
    )


def run_experiment(cfg, write=True):
    """Run every point of the sweep; write CSV and plot description when
    ``cfg.output_path`` is set and ``write`` is true."""
    points = list(cfg.points())
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(run_point, points))
    else:
        rows = [run_point(p) for p in points]
    result = ExperimentResult(cfg, rows)
    if write and cfg.output_path:
        write_csv(result, cfg.output_path)
        write_plot_description(result, plot_path_for(cfg.output_path))
    return result


def _fmt(v):
    if isinstance(v, float):
        return repr(round(v, 10)) if math.isfinite(v) else str(v)
    return str(v)


def write_csv(result, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in result.rows:
            w.writerow([_fmt(v) for v in r.row()])


def plot_path_for(csv_path):
    root, _ = os.path.splitext(csv_path)
    return root + ".plot.json"


def _json_num(v):
    return v if math.isfinite(v) else None


def plot_description(result):
    """Figure layout: one panel per M, SNR versus B, one curve pair per K."""
    cfg = result.config
    panels = []
    for M in cfg.M_list:
        curves = []
        for K in cfg.K_list:
            rows = sorted(result.find(M=M, K=K), key=lambda r: r.B)
            curves.append({
                "K": K,
                "B": [r.B for r in rows],
                "snr_st_db": [_json_num(r.snr_st_db) for r in rows],
                "snr_th_db": [_json_num(r.snr_th_db) for r in rows],
            })
        panels.append({"title": f"{cfg.family.value}, M={M}, {cfg.scenario.value}", "M": M,
                       "curves": curves})
    return {
        "x_label": "B [bits]",
        "y_label": "SNR [dB]",
        "series_style": {"snr_st_db": "black dots", "snr_th_db": "dash-dot line"},
        "family": cfg.family.value,
        "scenario": cfg.scenario.value,
        "algorithm": cfg.algorithm.value,
        "panels": panels,
    }


def write_plot_description(result, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(plot_description(result), fh, indent=2)
        fh.write("\n")


_FOLD_KEYS = {"quantize_coefficients": "quantize_coefficients", "B_z": "B_z",
              "sigma": "additive_noise_sigma"}


def config_from_dict(data, seed_override=None):
    """Build an :class:`ExperimentConfig` from a parsed TOML table."""
    data = dict(data)
    known = {f.name for f in fields(ExperimentConfig)}
    fold = data.pop("fold", None)
    if "output" in data:
        data["output_path"] = data.pop("output")
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if fold is not None:
        if not isinstance(fold, dict):
            raise ConfigError("[fold] must be a table")
        bad = set(fold) - set(_FOLD_KEYS)
        if bad:
            raise ConfigError(f"unknown [fold] keys: {', '.join(sorted(bad))}")
        data["fold"] = FoldingSpec(**{_FOLD_KEYS[k]: v for k, v in fold.items()})
    if seed_override is not None:
        data["seed"] = seed_override
    try:
        return ExperimentConfig(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def load_config(path, env=None):
    """Read a TOML config; ``QCS_SEED`` in ``env`` (default os.environ)
    overrides the seed."""
    env = os.environ if env is None else env
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    override = env.get("QCS_SEED")
    if override is not None:
        try:
            override = int(override, 0)
        except ValueError:
            raise ConfigError(f"QCS_SEED={override!r} is not an integer") from None
    return config_from_dict(data, override)


def _example_configs():
    k_list = (5, 10, 15, 20, 25, 30)
    dft = dict(N=256, M_list=(192, 170, 128), K_list=k_list, B_list=STANDARD_B_LIST,
               family=Family.PARTIAL_DFT, trials=100, jitter=0.2)
    noisy_fold = FoldingSpec(quantize_coefficients=True, additive_noise_sigma=1e-4)
    ex1 = dict(N=256, M_list=(128,), K_list=(10,), B_list=(6,), trials=100, jitter=0.4)
    return {
        "example1": [
            ExperimentConfig(**ex1, scenario=Scenario.SPARSE),
            ExperimentConfig(**ex1, scenario=Scenario.NONSPARSE, tail_decay=1.0),
        ],
        "example2": [
            ExperimentConfig(**dft, scenario=Scenario.SPARSE),
            ExperimentConfig(**dft, scenario=Scenario.NONSPARSE, tail_decay=8.0),
            ExperimentConfig(**dft, scenario=Scenario.FOLDED, tail_decay=8.0, fold=noisy_fold,
                             cap_at_one=True),
        ],
        "example3": [
            ExperimentConfig(**{**dft, "M_list": (128,), "family": fam}, scenario=sc,
                             tail_decay=None if sc is Scenario.SPARSE else 8.0,
                             fold=FoldingSpec(quantize_coefficients=True) if sc is Scenario.FOLDED else None,
                             cap_at_one=sc is Scenario.FOLDED, amplitude_scale=0.5)
            for fam in (Family.UNIFORM, Family.GAUSSIAN, Family.ETF)
            for sc in Scenario
        ],
        "example4": [
            ExperimentConfig(N=256, M_list=(192,), K_list=(1, 2, 4, 8, 12, 16), B_list=(8,),
                             family=Family.BERNOULLI, trials=500, jitter=0.2),
        ],
        "example5": [
            ExperimentConfig(**{**dft, "M_list": (128,)}, scenario=sc, algorithm=Algorithm.IHT,
                             tail_decay=None if sc is Scenario.SPARSE else 8.0,
                             fold=noisy_fold if sc is Scenario.FOLDED else None,
                             cap_at_one=sc is Scenario.FOLDED, algo={"iht_iterations": 300})
            for sc in Scenario
        ],
        "example6": [
            ExperimentConfig(**{**dft, "M_list": (128,), "family": Family.GAUSSIAN}, scenario=sc,
                             algorithm=Algorithm.BAYESIAN,
                             tail_decay=None if sc is Scenario.SPARSE else 8.0,
                             fold=noisy_fold if sc is Scenario.FOLDED else None,
                             cap_at_one=sc is Scenario.FOLDED, amplitude_scale=0.5)
            for sc in Scenario
        ],
    }


EXAMPLE_NAMES = ("example1", "example2", "example3", "example4", "example5", "example6")


def example_configs(name, trials=None, seed=None, jobs=None):
    """Built-in sweeps reproducing the worked examples and figures."""
    table = _example_configs()
    if name not in table:
        raise ConfigError(f"unknown example {name!r}; choose from {', '.join(EXAMPLE_NAMES)}")
    out = []
    for cfg in table[name]:
        changes = {}
        if trials is not None:
            changes["trials"] = trials
        if seed is not None:
            changes["seed"] = seed
        if jobs is not None:
            changes["jobs"] = jobs
        out.append(replace(cfg, **changes) if changes else cfg)
    return out

