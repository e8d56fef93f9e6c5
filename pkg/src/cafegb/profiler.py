"""Wall-clock and peak-RSS measurement for pipeline stages."""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from typing import Callable, Optional

try:
    import psutil
except ImportError:  # pragma: no cover - psutil is a declared dependency
    psutil = None


@dataclass(frozen=True)
class StageProfile:
    stage: str
    dataset: str
    seed: int
    runtime_s: float
    peak_memory_mb: Optional[float]  # None when no RSS sampler is available


def _rss_mb(proc) -> float:
    return proc.memory_info().rss / (1024.0 * 1024.0)


def profile_stage(stage: str, work: Callable, *, dataset: str = "", seed: int = 0,
                  sample_interval: float = 0.05):
    """Run work() and return (StageProfile, result).

    Runtime comes from a monotonic clock. Peak memory is the maximum
    resident-set size seen by a background sampler (>= 10 Hz) plus a final
    read; best-effort and platform-dependent. Without psutil the memory
    field is None and the runtime is still valid.
    """
    sample_interval = min(max(sample_interval, 0.001), 0.1)
    peak = [float("-inf")]
    stop = threading.Event()
    sampler = None
    proc = psutil.Process() if psutil is not None else None

    if proc is not None:
        peak[0] = _rss_mb(proc)

        def sample():
            while not stop.wait(sample_interval):
                peak[0] = max(peak[0], _rss_mb(proc))

        sampler = threading.Thread(target=sample, daemon=True)
        sampler.start()

    start = time.perf_counter()
    try:
        result = work()
    finally:
        runtime = time.perf_counter() - start
        stop.set()
        if sampler is not None:
            sampler.join()
    if proc is not None:
        peak[0] = max(peak[0], _rss_mb(proc))
        peak_mb = peak[0]
    else:
        peak_mb = None
    profile = StageProfile(stage=stage, dataset=dataset, seed=seed,
                           runtime_s=runtime, peak_memory_mb=peak_mb)
    return profile, result
