"""Runtime measurement of the annotation stages as a function of text length."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Engine, EngineError


@dataclass(frozen=True)
class StageTiming:
    text_bytes: int
    preprocess_seconds: float
    disambiguate_seconds: float

    @property
    def total_seconds(self) -> float:
        return self.preprocess_seconds + self.disambiguate_seconds


def time_documents(
    engine: Engine, texts: Sequence[str], language: str | None = None
) -> list[StageTiming]:
    """Per-document stage timings; documents the engine cannot annotate
    (say, an unsupported language) are skipped rather than aborting the run."""
    timings = []
    for text in texts:
        start = time.perf_counter()
        try:
            pre = engine.preprocess(text, language)
            mid = time.perf_counter()
            engine.disambiguate(pre, text)
        except EngineError:
            continue
        end = time.perf_counter()
        timings.append(
            StageTiming(
                text_bytes=len(text.encode("utf-8")),
                preprocess_seconds=mid - start,
                disambiguate_seconds=end - mid,
            )
        )
    return timings


def bucket_table(timings: Sequence[StageTiming]) -> list[dict]:
    """Mean stage times grouped into decade buckets of text length."""
    buckets: dict[int, list[StageTiming]] = {}
    for t in timings:
        magnitude = len(str(max(t.text_bytes, 1))) - 1
        buckets.setdefault(magnitude, []).append(t)
    rows = []
    for magnitude in sorted(buckets):
        group = buckets[magnitude]
        rows.append(
            {
                "bucket_lo": 10**magnitude,
                "bucket_hi": 10 ** (magnitude + 1) - 1,
                "documents": len(group),
                "preprocess_ms": 1e3 * sum(t.preprocess_seconds for t in group) / len(group),
                "disambiguate_ms": 1e3 * sum(t.disambiguate_seconds for t in group) / len(group),
                "total_ms": 1e3 * sum(t.total_seconds for t in group) / len(group),
            }
        )
    return rows


def linear_fit(timings: Sequence[StageTiming]) -> tuple[float, float, float]:
    """Least-squares fit of total time against text length.

    Returns (slope in seconds/byte, intercept, R^2).  R^2 of 1 is reported
    for degenerate inputs where the variance is zero.
    """
    if len(timings) < 2:
        return 0.0, (timings[0].total_seconds if timings else 0.0), 1.0
    x = np.array([t.text_bytes for t in timings], dtype=float)
    y = np.array([t.total_seconds for t in timings], dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    predicted = slope * x + intercept
    residual = float(((y - predicted) ** 2).sum())
    total = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if total == 0.0 else 1.0 - residual / total
    return float(slope), float(intercept), r2
