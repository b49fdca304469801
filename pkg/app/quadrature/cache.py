# app/quadrature/cache.py

import logging
from typing import Callable, Dict, Hashable, Iterator

from app.errors import InternalConsistencyError
from app.quadrature.rules import QuadratureRule

_log = logging.getLogger(__name__)


class QuadratureCache:
    """
    Rules keyed by cut entity (e.g. ("cell", l) or ("part", index)).

    Populated once, then frozen; a frozen cache only serves hits.
    """

    def __init__(self) -> None:
        self._rules: Dict[Hashable, QuadratureRule] = {}
        self._frozen = False
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._rules)

    def __contains__(self, key: Hashable) -> bool:
        return key in self._rules

    def __iter__(self) -> Iterator[Hashable]:
        return iter(self._rules)

    @property
    def frozen(self) -> bool:
        return self._frozen

    def put(self, key: Hashable, rule: QuadratureRule) -> None:
        if self._frozen:
            raise InternalConsistencyError(f"Quadrature cache is frozen; cannot insert {key!r}")
        self._rules[key] = rule

    def get(self, key: Hashable) -> QuadratureRule:
        try:
            rule = self._rules[key]
        except KeyError as exc:
            raise InternalConsistencyError(f"No cached quadrature rule for {key!r}") from exc
        self.hits += 1
        return rule

    def get_or_compute(self, key: Hashable, factory: Callable[[], QuadratureRule]) -> QuadratureRule:
        if key in self._rules:
            self.hits += 1
            return self._rules[key]
        self.misses += 1
        rule = factory()
        self.put(key, rule)
        return rule

    def freeze(self) -> "QuadratureCache":
        self._frozen = True
        _log.debug("Quadrature cache frozen with %d rules (%d hits, %d misses)", len(self), self.hits, self.misses)
        return self
