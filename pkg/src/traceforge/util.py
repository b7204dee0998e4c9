"""Small shared containers."""

from __future__ import annotations

from typing import Iterable, Iterator


class Multimap:
    """Ordered string multimap: keys keep first-seen order, values keep
    append order. Equality ignores key order but not value order."""

    def __init__(self, items: Iterable[tuple[str, str]] = ()):
        self._data: dict[str, list[str]] = {}
        for key, value in items:
            self.add(key, value)

    def add(self, key: str, value: str) -> None:
        self._data.setdefault(key, []).append(value)

    def get(self, key: str) -> list[str]:
        return list(self._data.get(key, []))

    def keys(self) -> list[str]:
        return list(self._data)

    def items(self) -> Iterator[tuple[str, list[str]]]:
        for key, values in self._data.items():
            yield key, list(values)

    def total_values(self) -> int:
        return sum(len(v) for v in self._data.values())

    def as_dict(self) -> dict[str, list[str]]:
        return {k: list(v) for k, v in self._data.items()}

    def __contains__(self, key: str) -> bool:
        return key in self._data

    def __len__(self) -> int:
        return len(self._data)

    def __bool__(self) -> bool:
        return bool(self._data)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Multimap):
            return self._data == other._data
        return NotImplemented

    def __repr__(self) -> str:
        return f"Multimap({self._data!r})"
