"""
Replication protocol: repeated stratified splits (or fresh simulated draws), zero-one loss, AVTE summaries
and the comparison report files.
"""
import json
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src import ARTIFACT_VERSION, LOGGER
from src.classifiers import METHODS, make_classifier
from src.dataset import LabeledDataset, SplitPlan, split_indices
from src.errors import InfeasibleError, ToolkitError, UnknownMethodError, ValidationError
from src.schemas import report_rows_schema
from src.seeding import CLASSIFIER_STREAM, derive_seed
from src.synth import SimDesign, generate

REPORT_COLUMNS = (
    "source", "method", "n", "p", "G", "epsilon", "kappa", "rho", "R",
    "avte_mean", "avte_sd", "apparent_mean", "failure_count", "runtime_ms",
)
RAW_COLUMNS = ("avte_mean_raw", "avte_sd_raw", "apparent_mean_raw", "n_over_p", "sd_defined", "marker")
PLOT_COLUMNS = ("source", "method", "replication", "test_error")
BEST, SECOND, WORST = "*", "†", "‡"
NA = "NA"


@dataclass(frozen=True)
class EvalConfig:
    R: int = 200
    train_fraction: float = 2 / 3
    master_seed: int = 0
    methods: Tuple[str, ...] = METHODS
    fixed_dataset: bool = False

    def __post_init__(self):
        if self.R < 1:
            raise ValidationError(f"R must be >= 1, got {self.R}")
        if not 0 < self.train_fraction < 1:
            raise ValidationError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        unknown = [method for method in self.methods if method not in METHODS]
        if unknown:
            raise UnknownMethodError(f"Unknown method(s) {unknown}. Use any of: {', '.join(METHODS)}")
        object.__setattr__(self, "methods", tuple(self.methods))


@dataclass(frozen=True)
class MethodOutcome:
    test_error: Optional[float] = None
    apparent_error: Optional[float] = None
    error: Optional[str] = None
    runtime_ms: float = 0.0

    @property
    def ok(self):
        return self.error is None


@dataclass(frozen=True)
class ReplicationResult:
    replication_index: int
    outcomes: Dict[str, MethodOutcome]
    train_rows: Tuple[int, ...] = field(default=(), repr=False)
    test_rows: Tuple[int, ...] = field(default=(), repr=False)


@dataclass
class BenchmarkReport:
    source: str
    method: str
    n: int
    p: int
    G: int
    epsilon: Optional[float]
    kappa: Optional[float]
    rho: Optional[float]
    R: int
    avte_mean: Optional[float]
    avte_sd: Optional[float]
    apparent_mean: Optional[float]
    failure_count: int
    runtime_ms: Optional[float] = None
    sd_defined: bool = False
    marker: str = ""
    errors: List[str] = field(default_factory=list)
    trace: List[Optional[float]] = field(default_factory=list)


@dataclass(frozen=True)
class AvteResult:
    mean: float
    sd: float
    trace: Tuple[Optional[float], ...]
    sd_defined: bool
    failure_count: int


def zero_one_loss(y, yhat):
    """
    1 where the prediction misses, 0 where it hits; scalars in, int out
    """

    loss = (np.asarray(y) != np.asarray(yhat)).astype(int)
    return int(loss) if loss.ndim == 0 else loss


def apparent_error(method, train: LabeledDataset, settings, random_state=0) -> float:
    classifier = make_classifier(method, settings, random_state).fit(train.features, train.labels)
    return float(np.mean(zero_one_loss(train.labels, classifier.predict(train.features))))


def _run_method(method, train: LabeledDataset, test: LabeledDataset, settings, seed) -> MethodOutcome:
    started = time.perf_counter()
    try:
        classifier = make_classifier(method, settings, seed).fit(train.features, train.labels)
        test_error = float(np.mean(zero_one_loss(test.labels, classifier.predict(test.features))))
        apparent = float(np.mean(zero_one_loss(train.labels, classifier.predict(train.features))))
    except (ToolkitError, np.linalg.LinAlgError) as error:
        LOGGER.warning(f"{method} failed on '{train.name}': {error}")
        return MethodOutcome(error=str(error))
    return MethodOutcome(test_error, apparent, runtime_ms=1000 * (time.perf_counter() - started))


def replication_data(source, cfg: EvalConfig, r: int, base: Optional[LabeledDataset] = None):
    """
    The r-th (train, test) pair: a fresh draw seeded by (master_seed, r) for designs, a fresh split otherwise
    """

    if isinstance(source, SimDesign):
        ds = base if base is not None else generate(source.with_seed(derive_seed(cfg.master_seed, r)))
    else:
        ds = source
    train_idx, test_idx = split_indices(ds, SplitPlan(cfg.train_fraction, cfg.master_seed, r))
    return ds.subset(train_idx), ds.subset(test_idx), train_idx, test_idx


def replicate(source, methods: Sequence[str], cfg: EvalConfig, settings) -> List[ReplicationResult]:
    """
    Run every method on the same R splits so that comparisons are paired
    """

    base = generate(source) if isinstance(source, SimDesign) and cfg.fixed_dataset else None
    results = []
    for r in range(cfg.R):
        train, test, train_idx, test_idx = replication_data(source, cfg, r, base)
        seed = derive_seed(derive_seed(cfg.master_seed, r), CLASSIFIER_STREAM)
        outcomes = {method: _run_method(method, train, test, settings, seed) for method in methods}
        results.append(ReplicationResult(r, outcomes, tuple(train_idx.tolist()), tuple(test_idx.tolist())))
    return results


def summarize(trace: Sequence[Optional[float]]) -> AvteResult:
    errors = np.array([value for value in trace if value is not None], dtype=float)
    failures = len(trace) - errors.size
    if errors.size == 0:
        raise InfeasibleError(f"all {len(trace)} replications failed")
    sd_defined = errors.size > 1
    return AvteResult(
        mean=float(errors.mean()),
        sd=float(errors.std(ddof=1)) if sd_defined else 0.0,
        trace=tuple(trace),
        sd_defined=sd_defined,
        failure_count=failures,
    )


def avte(method, source, cfg: EvalConfig, settings) -> AvteResult:
    """
    Mean and sample standard deviation of the test error over R replications; failed ones are excluded
    """

    results = replicate(source, [method], cfg, settings)
    return summarize([result.outcomes[method].test_error for result in results])


def _describe(source):
    if isinstance(source, SimDesign):
        return {
            "source": source.name,
            "n": source.n,
            "p": source.p,
            "G": source.G,
            "epsilon": source.contamination.epsilon,
            "kappa": source.contamination.kappa,
            "rho": source.cov.rho,
        }
    return {"source": source.name, "n": source.n, "p": source.p, "G": source.G,
            "epsilon": None, "kappa": None, "rho": None}


def _report(source, method, results: List[ReplicationResult], cfg: EvalConfig, settings) -> BenchmarkReport:
    outcomes = [result.outcomes[method] for result in results]
    trace = [outcome.test_error for outcome in outcomes]
    ok = [outcome for outcome in outcomes if outcome.ok]
    report = BenchmarkReport(
        R=cfg.R,
        method=method,
        avte_mean=None,
        avte_sd=None,
        apparent_mean=None,
        failure_count=cfg.R - len(ok),
        errors=sorted({outcome.error for outcome in outcomes if not outcome.ok}),
        trace=trace,
        **_describe(source),
    )
    if ok:
        summary = summarize(trace)
        report.avte_mean, report.avte_sd, report.sd_defined = summary.mean, summary.sd, summary.sd_defined
        report.apparent_mean = float(np.mean([outcome.apparent_error for outcome in ok]))
        if settings.get("RECORD_RUNTIME"):
            report.runtime_ms = float(np.mean([outcome.runtime_ms for outcome in ok]))
    return report


def assign_markers(reports: List[BenchmarkReport]):
    """
    Per source: best "*", second best a dagger, worst a double dagger; ties keep method order
    """

    finite = [report for report in reports if report.avte_mean is not None]
    ranked = sorted(finite, key=lambda report: report.avte_mean)
    for report in reports:
        report.marker = ""
    if ranked:
        ranked[0].marker = BEST
    if len(ranked) > 1:
        ranked[1].marker = SECOND
    if len(ranked) > 2:
        ranked[-1].marker = WORST
    return reports


def compare(sources, methods, cfg: EvalConfig, settings) -> List[BenchmarkReport]:
    """
    One report row per (source, method) in input order
    """

    methods = list(methods)
    if not sources or not methods:
        raise ValidationError("compare needs at least one source and one method")
    unknown = [method for method in methods if method not in METHODS]
    if unknown:
        raise UnknownMethodError(f"Unknown method(s) {unknown}. Use any of: {', '.join(METHODS)}")

    reports = []
    for source in sources:
        LOGGER.info(f"Evaluate {len(methods)} method(s) on '{source.name}' over {cfg.R} replications")
        results = replicate(source, methods, cfg, settings)
        rows = [_report(source, method, results, cfg, settings) for method in methods]
        reports.extend(assign_markers(rows))
    return reports


def _percent(value):
    return NA if value is None else f"{100 * value:.2f}"


def _raw(value):
    return NA if value is None else f"{value:.17g}"


def report_frame(reports: List[BenchmarkReport]) -> pd.DataFrame:
    rows = []
    for report in reports:
        rows.append({
            "source": report.source,
            "method": report.method,
            "n": report.n,
            "p": report.p,
            "G": report.G,
            "epsilon": _raw(report.epsilon),
            "kappa": _raw(report.kappa),
            "rho": _raw(report.rho),
            "R": report.R,
            "avte_mean": _percent(report.avte_mean),
            "avte_sd": _percent(report.avte_sd),
            "apparent_mean": _percent(report.apparent_mean),
            "failure_count": report.failure_count,
            "runtime_ms": NA if report.runtime_ms is None else f"{report.runtime_ms:.1f}",
            "avte_mean_raw": _raw(report.avte_mean),
            "avte_sd_raw": _raw(report.avte_sd),
            "apparent_mean_raw": _raw(report.apparent_mean),
            "n_over_p": _raw(report.n / report.p),
            "sd_defined": str(report.sd_defined).lower(),
            "marker": report.marker,
        })
    return pd.DataFrame(rows, columns=list(REPORT_COLUMNS + RAW_COLUMNS))


def write_report(reports: List[BenchmarkReport], path):
    report_frame(reports).to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    LOGGER.info(f"Report written to '{path}'")


def write_plot_data(reports: List[BenchmarkReport], path):
    """
    Long format: one row per (source, method, replication); failed replications read NA
    """

    rows = [
        (report.source, report.method, r, _raw(error))
        for report in reports
        for r, error in enumerate(report.trace)
    ]
    pd.DataFrame(rows, columns=list(PLOT_COLUMNS)).to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    LOGGER.info(f"Plot data written to '{path}'")


def write_json_report(reports: List[BenchmarkReport], resolved_config, path):
    document = {
        "artifact_version": ARTIFACT_VERSION,
        "sd_denominator": "n-1",
        "config": resolved_config,
        "rows": report_rows_schema.dump(reports),
    }
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(json.dumps(document, sort_keys=True, indent=2))
        handle.write("\n")
