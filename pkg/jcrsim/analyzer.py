#!/usr/bin/env python3

import math
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np
from scipy.signal import find_peaks

from logger import run_logger
from quasienergy import resonance_detunings

ANALYSIS_DEFAULTS = {
    "min_prominence": 0.01,
    "match_tolerance": 0.05,
    "hysteresis": 0.25,
    "dwell_bins": 40,
}


@dataclass(frozen=True)
class Peak:
    delta: float
    height: float
    prominence: float


class ResultAnalyzer:
    def __init__(self) -> None:
        self.analysis_cache: dict[str, Any] = {}

    def find_photon_peaks(self, deltas: Sequence[float], photons: Sequence[float],
                          min_prominence: Optional[float] = None) -> list[Peak]:
        """Peaks of a photon-number curve; prominence threshold relative to the curve's range"""
        y = np.asarray(photons, dtype=float)
        x = np.asarray(deltas, dtype=float)
        if len(y) < 3:
            return []
        span = float(np.ptp(y))
        if span == 0.0:
            return []
        rel = ANALYSIS_DEFAULTS["min_prominence"] if min_prominence is None else min_prominence
        indices, props = find_peaks(y, prominence=rel * span)
        peaks = [Peak(float(x[i]), float(y[i]), float(p)) for i, p in zip(indices, props["prominences"])]
        self.analysis_cache["peaks"] = peaks
        return peaks

    def match_resonances(self, peaks: Sequence[Peak], lam: float, n_max: int, drive_kind: str = "linear",
                         tolerance: Optional[float] = None) -> dict[float, Optional[Peak]]:
        """Nearest peak within tolerance (relative) of every predicted resonance"""
        tol = ANALYSIS_DEFAULTS["match_tolerance"] if tolerance is None else tolerance
        matches: dict[float, Optional[Peak]] = {}
        for target in resonance_detunings(lam, n_max, drive_kind):
            near = [p for p in peaks if abs(p.delta - target) <= tol * abs(target)]
            matches[target] = max(near, key=lambda p: p.prominence) if near else None
        self.analysis_cache["resonance_matches"] = matches
        return matches

    def prominence_near(self, peaks: Sequence[Peak], target: float, window: float) -> float:
        """Largest prominence within |delta - target| <= window * |target|; 0 when none"""
        near = [p.prominence for p in peaks if abs(p.delta - target) <= window * abs(target)]
        return max(near, default=0.0)

    def count_branch_switches(self, series: Sequence[float], low_level: float, high_level: float) -> int:
        """Hysteretic count of transitions between two dwell levels"""
        if high_level <= low_level:
            raise ValueError("high_level must exceed low_level")
        gap = high_level - low_level
        enter_high = high_level - ANALYSIS_DEFAULTS["hysteresis"] * gap
        enter_low = low_level + ANALYSIS_DEFAULTS["hysteresis"] * gap

        state: Optional[str] = None
        switches = 0
        for value in series:
            if value >= enter_high:
                current = "high"
            elif value <= enter_low:
                current = "low"
            else:
                continue
            if state is not None and current != state:
                switches += 1
            state = current
        return switches

    def dwell_histogram(self, series: Sequence[float], bins: Optional[int] = None,
                        value_range: Optional[tuple[float, float]] = None) -> tuple[np.ndarray, np.ndarray]:
        counts, edges = np.histogram(np.asarray(series, dtype=float),
                                     bins=bins or ANALYSIS_DEFAULTS["dwell_bins"], range=value_range)
        self.analysis_cache["dwell_histogram"] = (counts, edges)
        return counts, edges

    def is_bimodal(self, counts: Sequence[int], min_fraction: float = 0.05) -> bool:
        """Two separated maxima, each holding at least min_fraction of the samples"""
        c = np.concatenate([[0], np.asarray(counts, dtype=float), [0]])
        total = c.sum()
        if total == 0:
            return False
        indices, _ = find_peaks(c, prominence=min_fraction * total)
        return len(indices) >= 2

    def ensemble_stats(self, values: Sequence[float]) -> dict[str, float]:
        """Mean and standard error of independent samples"""
        v = np.asarray(values, dtype=float)
        if v.size == 0:
            return {"error": "no samples"}
        stderr = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
        stats = {"mean": float(v.mean()), "stderr": stderr, "count": int(v.size)}
        self.analysis_cache["ensemble_stats"] = stats
        return stats

    def generate_insights(self, matches: dict[float, Optional[Peak]]) -> list[str]:
        """Plain-text summary of resonance matching"""
        insights = []
        found = [t for t, p in matches.items() if p is not None]
        insights.append(f"{len(found)} of {len(matches)} predicted resonances matched")
        for target, peak in matches.items():
            if peak is None:
                insights.append(f"no peak near delta={target:.6g}")
            else:
                insights.append(f"peak at delta={peak.delta:.6g} (predicted {target:.6g}), prominence {peak.prominence:.3g}")
        run_logger.log_with_context("INFO", "resonance analysis", {"matched": len(found), "predicted": len(matches)})
        return insights
