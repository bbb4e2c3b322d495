"""Deployment benchmark: single-frame latency, throughput and energy accounting."""

import json
import logging
import math
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import ConfigError, DataError
from .model import TrainedModel
from .nn import FLOP_CONVENTION, ModelGraph

log = logging.getLogger(__name__)

MIN_REPORTED_RUNS = 10

# FLOPs of the reference audio model
REFERENCE_FLOPS = 194_000_000

# Published TX2 deployments: (label, CPU MHz, GPU MHz, power mW, latency s)
REFERENCE_DEPLOYMENTS = [
    ("Denver CPU 345 MHz", 345.0, None, 881.0, 10.0),
    ("Denver CPU 2035 MHz", 2035.0, None, 3170.0, 0.9),
    ("ARM A57 CPU 345 MHz", 345.0, None, 1168.0, 3.7),
    ("ARM A57 CPU 2035 MHz", 2035.0, None, 4425.0, 0.6),
    ("TX2 CPU+GPU", 2035.0, 1300.5, 9106.0, 0.1),
]

TABLE_COLUMNS = [
    "Configuration",
    "Power (mW)",
    "Latency (s)",
    "Performance (GFLOP/s)",
    "Energy (J)",
    "Energy Eff (GFLOPS/W)",
]


@dataclass(frozen=True)
class BenchConfig:
    warmup_runs: int = 5
    measured_runs: int = 30
    power_mw: float | None = None
    power_file: str | None = None
    label: str = "local CPU"

    def __post_init__(self) -> None:
        if self.measured_runs < 1:
            raise ConfigError(f"measured_runs must be at least 1, got {self.measured_runs}")
        if self.warmup_runs < 0:
            raise ConfigError(f"warmup_runs must be >= 0, got {self.warmup_runs}")
        if self.power_mw is not None and not self.power_mw > 0:
            raise ConfigError(f"power_mw must be positive, got {self.power_mw}")

    def resolved_power_mw(self) -> float | None:
        if self.power_mw is not None:
            return float(self.power_mw)
        if self.power_file:
            return read_power_file(self.power_file)
        return None


@dataclass(frozen=True)
class LatencyStats:
    samples_s: tuple[float, ...]
    timer_resolution_s: float
    warnings: tuple[str, ...] = ()

    @property
    def median_s(self) -> float:
        return statistics.median(self.samples_s)

    @property
    def min_s(self) -> float:
        return min(self.samples_s)

    @property
    def max_s(self) -> float:
        return max(self.samples_s)


@dataclass(frozen=True)
class ThroughputStats:
    workers: int
    runs: int
    wall_s: float

    @property
    def frames_per_s(self) -> float:
        return self.runs / self.wall_s


@dataclass(frozen=True)
class DerivedMetrics:
    performance_gflops: float
    energy_j: float | None
    energy_eff_gflops_per_w: float | None


@dataclass(frozen=True)
class BenchReport:
    label: str
    flops: int
    latency_s: float
    latency_min_s: float | None = None
    latency_max_s: float | None = None
    power_mw: float | None = None
    performance_gflops: float = 0.0
    energy_j: float | None = None
    energy_eff_gflops_per_w: float | None = None
    convention: str = FLOP_CONVENTION
    runs: int = 0
    samples_s: tuple[float, ...] = ()
    warnings: tuple[str, ...] = ()
    throughput_fps: float | None = None
    workers: int | None = None


def _as_callable(model: Any, x: Any, aux: Mapping[str, Any] | None) -> Callable[[], Any]:
    graph = model.graph if isinstance(model, TrainedModel) else model
    if isinstance(graph, ModelGraph):
        x = np.asarray(x, dtype=graph.dtype)
        aux = {k: np.asarray(v, dtype=graph.dtype) for k, v in (aux or {}).items()}
        return lambda: graph.forward(x, aux, cache=False)
    if callable(model):
        return lambda: model(x)
    raise ConfigError(f"cannot benchmark object of type {type(model).__name__}")


def measure_latency(
    model: ModelGraph | TrainedModel | Callable[[Any], Any],
    x: Any,
    cfg: BenchConfig = BenchConfig(),
    aux: Mapping[str, Any] | None = None,
) -> LatencyStats:
    """Wall-clock seconds of single-frame forward passes after ``warmup_runs``.

    ``x`` is converted before timing starts. A zero-argument stand-in can be
    passed as a callable taking the input.
    """
    run = _as_callable(model, x, aux)
    for _ in range(cfg.warmup_runs):
        run()

    samples = []
    for _ in range(cfg.measured_runs):
        start = time.perf_counter()
        run()
        samples.append(time.perf_counter() - start)

    resolution = time.get_clock_info("perf_counter").resolution
    warnings = []
    if cfg.measured_runs < MIN_REPORTED_RUNS:
        warnings.append(f"only {cfg.measured_runs} measured runs; medians need {MIN_REPORTED_RUNS}")
    median = statistics.median(samples)
    if resolution > 0.01 * median:
        warnings.append(f"timer resolution {resolution:.3g}s exceeds 1% of median {median:.3g}s")
    for w in warnings:
        log.warning(w)
    return LatencyStats(tuple(samples), resolution, tuple(warnings))


def measure_throughput(
    model: ModelGraph | TrainedModel | Callable[[Any], Any],
    x: Any,
    workers: int,
    runs: int,
    aux: Mapping[str, Any] | None = None,
) -> ThroughputStats:
    """Frames per second with ``workers`` threads sharing one read-only model."""
    if workers < 1 or runs < 1:
        raise ConfigError("workers and runs must be positive")
    run = _as_callable(model, x, aux)
    start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(lambda _: run(), range(runs)))
    return ThroughputStats(workers, runs, time.perf_counter() - start)


def derive_metrics(flops: int, latency_s: float, power_mw: float | None = None) -> DerivedMetrics:
    """GFLOP/s from FLOPs and latency; energy (J) and GFLOPS/W when power is known."""
    if flops <= 0 or not latency_s > 0:
        raise ConfigError(f"flops and latency must be positive, got {flops}, {latency_s}")
    if power_mw is not None and not power_mw > 0:
        raise ConfigError(f"power must be positive, got {power_mw}")
    performance = flops / 1e9 / latency_s
    if power_mw is None:
        return DerivedMetrics(performance, None, None)
    watts = power_mw / 1000.0
    return DerivedMetrics(performance, watts * latency_s, performance / watts)


def make_report(
    label: str,
    flops: int,
    latency: LatencyStats | float,
    power_mw: float | None = None,
    throughput: ThroughputStats | None = None,
) -> BenchReport:
    if isinstance(latency, LatencyStats):
        median, lo, hi = latency.median_s, latency.min_s, latency.max_s
        samples, warnings = latency.samples_s, latency.warnings
    else:
        median, lo, hi, samples, warnings = float(latency), None, None, (), ()
    metrics = derive_metrics(flops, median, power_mw)
    return BenchReport(
        label=label,
        flops=int(flops),
        latency_s=median,
        latency_min_s=lo,
        latency_max_s=hi,
        power_mw=power_mw,
        performance_gflops=metrics.performance_gflops,
        energy_j=metrics.energy_j,
        energy_eff_gflops_per_w=metrics.energy_eff_gflops_per_w,
        runs=len(samples),
        samples_s=tuple(samples),
        warnings=tuple(warnings),
        throughput_fps=throughput.frames_per_s if throughput else None,
        workers=throughput.workers if throughput else None,
    )


def reference_reports(flops: int = REFERENCE_FLOPS) -> list[BenchReport]:
    """Deployment table re-derived from the published power and latency inputs."""
    return [
        make_report(label, flops, latency, power)
        for label, _, _, power, latency in REFERENCE_DEPLOYMENTS
    ]


def read_power_file(path: Path | str) -> float:
    """Sensor file: a single line holding integer milliwatts."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Power file not found at {path}")
    text = path.read_text().strip()
    try:
        value = int(text)
    except ValueError:
        raise DataError(f"{path}: expected integer milliwatts, got '{text[:20]}'") from None
    if value <= 0:
        raise DataError(f"{path}: power must be positive, got {value}")
    return float(value)


def format_sig(value: float | None, sig: int = 3) -> str:
    """Fixed-point text with ``sig`` significant figures; blank for missing values."""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    if value == 0:
        return "0"
    decimals = max(sig - 1 - int(math.floor(math.log10(abs(value)))), 0)
    return f"{value:.{decimals}f}"


def emit_report(reports: Sequence[BenchReport], fmt: str = "table") -> str:
    """Render reports as a plain-text table or as structured JSON."""
    if not reports:
        raise ValueError("emit_report needs at least one report")
    if fmt == "structured":
        return json.dumps(
            {"convention": FLOP_CONVENTION, "reports": [asdict(r) for r in reports]},
            indent=2,
            sort_keys=True,
        )
    if fmt != "table":
        raise ValueError(f"unknown report format '{fmt}'")

    df = pd.DataFrame(
        [
            [
                r.label,
                f"{r.power_mw:.0f}" if r.power_mw is not None else "",
                format_sig(r.latency_s),
                format_sig(r.performance_gflops),
                format_sig(r.energy_j),
                format_sig(r.energy_eff_gflops_per_w),
            ]
            for r in reports
        ],
        columns=TABLE_COLUMNS,
    )
    return df.to_string(index=False)


def parse_report(text: str) -> list[BenchReport]:
    """Inverse of ``emit_report(..., "structured")``."""
    data = json.loads(text)
    names = {f.name for f in fields(BenchReport)}
    reports = []
    for entry in data["reports"]:
        entry = {k: v for k, v in entry.items() if k in names}
        entry["samples_s"] = tuple(entry.get("samples_s", ()))
        entry["warnings"] = tuple(entry.get("warnings", ()))
        reports.append(BenchReport(**entry))
    return reports
