"""Observable registry: named quantities a sweep can evaluate per point.

Observables are plain functions registered under a name together with the CSV
columns they produce. The sweep service looks them up by the name given in the
run config, so new observables can be added without touching the sweep code.
"""
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from threading import Lock
from typing import Any
import logging

logger = logging.getLogger(__name__)

Record = Mapping[str, float | int]
ObservableFunc = Callable[..., Record]


@dataclass(frozen=True)
class Observable:
    """A registered observable and the columns of its records."""

    name: str
    columns: tuple[str, ...]
    func: ObservableFunc

    def __call__(self, *args: Any, **kwargs: Any) -> dict[str, float | int]:
        record = dict(self.func(*args, **kwargs))
        missing = [c for c in self.columns if c not in record]
        if missing:
            raise KeyError(f"observable '{self.name}' did not produce columns: {missing}")
        return {c: record[c] for c in self.columns}


class ObservableRegistry:
    """Central registry for all sweep observables."""

    def __init__(self) -> None:
        self._observables: dict[str, Observable] = {}
        self._lock = Lock()

    def register(self, name: str, columns: tuple[str, ...], func: ObservableFunc) -> None:
        """Register an observable.

        Args:
            name: Name used in ``sweep.observable``
            columns: Keys of the record the function returns, in CSV order
            func: ``func(params, config) -> record``
        """
        if not columns:
            raise ValueError(f"Observable '{name}' must declare at least one column")
        with self._lock:
            if name in self._observables:
                raise ValueError(f"Observable '{name}' is already registered")
            self._observables[name] = Observable(name, tuple(columns), func)
            logger.debug(f"Registered observable {name}: {func.__name__}")

    def get(self, name: str) -> Observable:
        """Look up an observable by name."""
        try:
            return self._observables[name]
        except KeyError:
            raise KeyError(
                f"Unknown observable '{name}'. Registered: {', '.join(self.names())}"
            ) from None

    def names(self) -> list[str]:
        """List registered observable names, sorted."""
        return sorted(self._observables)


# Global observable registry instance
observable_registry = ObservableRegistry()


def observable(name: str, columns: tuple[str, ...]) -> Callable[[ObservableFunc], ObservableFunc]:
    """Decorator to register a sweep observable.

    Example:
        @observable("delta_e_closed", columns=("delta_e_closed",))
        def closed(params, config):
            return {"delta_e_closed": delta_e_closed(params).delta_e}
    """

    def decorator(func: ObservableFunc) -> ObservableFunc:
        observable_registry.register(name, columns, func)
        return func

    return decorator
