#!/usr/bin/env python3

import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Iterable, Optional

from logger import run_logger

BATCH_DEFAULTS = {
    "progress_step": 0.1,
    "max_threads": 64,
}


class BatchProcessor:
    """Ordered parallel map over independent numerical tasks."""

    def __init__(self, threads: int = 1, label: str = "batch") -> None:
        if threads < 1:
            raise ValueError(f"threads must be >= 1, got {threads}")
        self.threads = min(int(threads), BATCH_DEFAULTS["max_threads"])
        self.label = label
        self.processed_count: int = 0
        self.error_count: int = 0
        self.failures: list[tuple[int, str]] = []
        self.elapsed: float = 0.0

    def _run_one(self, func: Callable[[Any], Any], index: int, task: Any) -> tuple[int, Any, Optional[BaseException]]:
        try:
            return index, func(task), None
        except Exception as e:
            return index, None, e

    def batch_process(self, func: Callable[[Any], Any], tasks: Iterable[Any], strict: bool = True) -> list[Any]:
        """Apply func to every task; results come back in task order"""
        tasks = list(tasks)
        total = len(tasks)
        results: list[Any] = [None] * total
        first_error: Optional[BaseException] = None
        next_report = BATCH_DEFAULTS["progress_step"]
        start_time = time.perf_counter()

        run_logger.log_with_context("INFO", f"{self.label}: processing {total} tasks", {
            "threads": self.threads
        })

        if self.threads == 1 or total <= 1:
            outcomes = (self._run_one(func, i, t) for i, t in enumerate(tasks))
            executor = None
        else:
            executor = ThreadPoolExecutor(max_workers=self.threads)
            outcomes = executor.map(lambda pair: self._run_one(func, *pair), enumerate(tasks))

        try:
            for done, (index, value, error) in enumerate(outcomes, 1):
                if error is None:
                    results[index] = value
                    self.processed_count += 1
                else:
                    self.error_count += 1
                    self.failures.append((index, repr(error)))
                    if first_error is None:
                        first_error = error
                    run_logger.log_with_context("WARNING", f"{self.label}: task {index} failed", {
                        "error": repr(error)
                    })

                if total and done / total >= next_report:
                    run_logger.log_with_context("INFO", f"{self.label}: progress {100.0 * done / total:.0f}% ({done}/{total})")
                    while next_report <= done / total:
                        next_report += BATCH_DEFAULTS["progress_step"]
        finally:
            if executor is not None:
                executor.shutdown(wait=True)

        self.elapsed += time.perf_counter() - start_time

        if strict and first_error is not None:
            raise first_error
        return results

    def get_stats(self) -> dict[str, Any]:
        """Get processing statistics"""
        attempted = self.processed_count + self.error_count
        return {
            "label": self.label,
            "threads": self.threads,
            "processed_count": self.processed_count,
            "error_count": self.error_count,
            "success_rate": self.processed_count / attempted if attempted > 0 else 0.0,
            "elapsed": self.elapsed,
        }
