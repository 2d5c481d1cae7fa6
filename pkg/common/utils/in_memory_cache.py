"""In-memory cache for pipeline stage results."""

import threading
import time
from typing import Any, Callable, Optional


class StageCache:
    """A thread-safe singleton holding computed stages per potential.

    Keys are ``(fingerprint, stage)`` pairs, so two potentials never share
    barrier tables or curves.
    """

    _instance: Optional["StageCache"] = None
    _lock: threading.Lock = threading.Lock()
    _initialized: bool = False

    def __new__(cls):
        if cls._instance is None:
            with cls._lock:
                if cls._instance is None:
                    cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self):
        if not self._initialized:
            with self._lock:
                if not self._initialized:
                    self._stages: dict[tuple[str, str], Any] = {}
                    self._expiry: dict[tuple[str, str], float] = {}
                    self._data_lock: threading.RLock = threading.RLock()
                    self._initialized = True

    def set(self, fingerprint: str, stage: str, value: Any, ttl: Optional[float] = None) -> None:
        """Store a stage result.

        Args:
            fingerprint: Potential fingerprint.
            stage: Stage name, e.g. ``"barrier_table"``.
            value: The computed result.
            ttl: Seconds to keep the entry. None keeps it until cleared.
        """
        key = (fingerprint, stage)
        with self._data_lock:
            self._stages[key] = value
            if ttl is not None:
                self._expiry[key] = time.monotonic() + ttl
            else:
                self._expiry.pop(key, None)

    def get(self, fingerprint: str, stage: str, default: Any = None) -> Any:
        key = (fingerprint, stage)
        with self._data_lock:
            if key in self._expiry and time.monotonic() > self._expiry[key]:
                del self._stages[key]
                del self._expiry[key]
                return default
            return self._stages.get(key, default)

    def get_or_compute(self, fingerprint: str, stage: str, factory: Callable[[], Any]) -> Any:
        """Return the cached stage or compute, store and return it.

        Args:
            fingerprint: Potential fingerprint.
            stage: Stage name.
            factory: Zero-argument callable producing the stage result.

        Returns:
            The cached or freshly computed value.
        """
        missing = object()
        with self._data_lock:
            value = self.get(fingerprint, stage, missing)
            if value is missing:
                value = factory()
                self.set(fingerprint, stage, value)
            return value

    def invalidate(self, fingerprint: str) -> int:
        """Drop every stage of one potential and return how many were removed."""
        with self._data_lock:
            keys = [key for key in self._stages if key[0] == fingerprint]
            for key in keys:
                del self._stages[key]
                self._expiry.pop(key, None)
            return len(keys)

    def clear(self) -> None:
        with self._data_lock:
            self._stages.clear()
            self._expiry.clear()
