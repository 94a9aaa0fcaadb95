#!/usr/bin/env python3

import threading
import time
from collections import OrderedDict
from dataclasses import dataclass
from typing import Any, Callable, Hashable, Optional


@dataclass
class CacheEntry:
    key: Hashable
    value: Any
    build_time: float
    hits: int = 0
    note: Optional[str] = None


class OperatorCache:
    """Thread-safe memo for expensive, read-only numerical objects."""

    def __init__(self, name: str, max_entries: int = 16) -> None:
        self.name = name
        self.max_entries = max_entries
        self.entries: "OrderedDict[Hashable, CacheEntry]" = OrderedDict()
        self.hits = 0
        self.misses = 0
        self._lock = threading.Lock()

    def get_or_build(self, key: Hashable, builder: Callable[[], Any]) -> Any:
        """Return the cached value for key, building it on a miss"""
        with self._lock:
            entry = self.entries.get(key)
            if entry is not None:
                entry.hits += 1
                self.hits += 1
                self.entries.move_to_end(key)
                return entry.value
            self.misses += 1

        # build outside the lock; a concurrent miss may build twice
        start_time = time.perf_counter()
        value = builder()
        build_time = time.perf_counter() - start_time

        with self._lock:
            if key not in self.entries:
                self.entries[key] = CacheEntry(key=key, value=value, build_time=build_time)
                while len(self.entries) > self.max_entries:
                    self.entries.popitem(last=False)
            return self.entries[key].value

    def clear(self) -> int:
        with self._lock:
            count = len(self.entries)
            self.entries.clear()
            self.hits = 0
            self.misses = 0
        return count

    def get_stats(self) -> dict[str, Any]:
        """Get cache statistics"""
        with self._lock:
            lookups = self.hits + self.misses
            return {
                "name": self.name,
                "entries": len(self.entries),
                "hits": self.hits,
                "misses": self.misses,
                "hit_rate": self.hits / lookups if lookups > 0 else 0.0,
                "total_build_time": sum(e.build_time for e in self.entries.values()),
            }


operator_cache = OperatorCache("quantum_operators")
spectrum_cache = OperatorCache("quasienergy_spectra", max_entries=8)
