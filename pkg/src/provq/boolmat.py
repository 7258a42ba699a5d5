"""Square boolean matrices over the AND/OR semiring, stored as int bitmask rows.

Bit j of ``rows[i]`` holds entry (i, j).  Products are word-parallel: one OR
per set bit per row.  A module-level multiply counter backs the complexity
guards in the test suite.
"""

from __future__ import annotations

from typing import Iterable

_mul_count = 0


def reset_mul_count() -> None:
    global _mul_count
    _mul_count = 0


def mul_count() -> int:
    return _mul_count


class BoolMat:
    __slots__ = ("n", "rows")

    def __init__(self, n: int, rows: tuple[int, ...]):
        self.n = n
        self.rows = rows

    @staticmethod
    def zero(n: int) -> "BoolMat":
        return BoolMat(n, (0,) * n)

    @staticmethod
    def identity(n: int) -> "BoolMat":
        return BoolMat(n, tuple(1 << i for i in range(n)))

    @staticmethod
    def from_pairs(n: int, pairs: Iterable[tuple[int, int]]) -> "BoolMat":
        rows = [0] * n
        for i, j in pairs:
            rows[i] |= 1 << j
        return BoolMat(n, tuple(rows))

    def get(self, i: int, j: int) -> bool:
        return bool(self.rows[i] >> j & 1)

    def pairs(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.n) for j in range(self.n) if self.rows[i] >> j & 1]

    def union(self, other: "BoolMat") -> "BoolMat":
        return BoolMat(self.n, tuple(a | b for a, b in zip(self.rows, other.rows)))

    def mul(self, other: "BoolMat") -> "BoolMat":
        global _mul_count
        _mul_count += 1
        orows = other.rows
        out = []
        for r in self.rows:
            acc = 0
            x = r
            while x:
                low = x & -x
                acc |= orows[low.bit_length() - 1]
                x ^= low
            out.append(acc)
        return BoolMat(self.n, tuple(out))

    def is_identity(self) -> bool:
        return all(r == 1 << i for i, r in enumerate(self.rows))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, BoolMat) and self.n == other.n and self.rows == other.rows

    def __hash__(self) -> int:
        return hash((self.n, self.rows))

    def __repr__(self) -> str:
        return f"BoolMat({self.n}, {self.rows})"

    def grid(self) -> str:
        """Render as 0/1 rows, one line per row."""
        return "\n".join(" ".join("1" if r >> j & 1 else "0" for j in range(self.n)) for r in self.rows)


def mul_chain(mats: list[BoolMat], n: int) -> BoolMat:
    """Left-to-right product; identity for the empty chain."""
    acc = BoolMat.identity(n)
    for m in mats:
        acc = acc.mul(m)
    return acc
