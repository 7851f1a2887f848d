from itertools import product
from typing import Hashable, Iterator, List, Sequence, Tuple

from app.core.config import settings
from app.core.errors import CapabilityError, InputError

Symbol = Hashable
Database = Tuple[Symbol, ...]


class DatabaseSpace:
    """The set D^n of length-n vectors over a finite domain.

    Coordinates are 1-based in every public operation. The default symbol
    (first domain element unless given) fills a suppressed coordinate.
    """

    def __init__(self, domain: Sequence[Symbol], n: int, default_symbol: Symbol = None,
                 enumeration_cap: int = None):
        domain = tuple(domain)
        if not domain:
            raise InputError("Domain must contain at least one symbol")
        if len(set(domain)) != len(domain):
            raise InputError("Domain symbols must be distinct")
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise InputError(f"Database length must be a positive integer, got {n!r}")
        if default_symbol is None:
            default_symbol = domain[0]
        if default_symbol not in domain:
            raise InputError(f"Default symbol {default_symbol!r} is not in the domain")

        self.domain: Tuple[Symbol, ...] = domain
        self.n = n
        self.default_symbol = default_symbol
        self.enumeration_cap = settings.ENUMERATION_CAP if enumeration_cap is None else enumeration_cap
        self._symbols = frozenset(domain)

    @property
    def count(self) -> int:
        return len(self.domain) ** self.n

    @property
    def enumerable(self) -> bool:
        return self.count <= self.enumeration_cap

    def validate(self, x: Sequence[Symbol]) -> Database:
        x = tuple(x)
        if len(x) != self.n:
            raise InputError(f"Database {x!r} has length {len(x)}, expected {self.n}")
        for entry in x:
            if entry not in self._symbols:
                raise InputError(f"Database entry {entry!r} is not in the domain {list(self.domain)}")
        return x

    def check_index(self, i: int) -> int:
        if not isinstance(i, int) or isinstance(i, bool) or not 1 <= i <= self.n:
            raise InputError(f"Coordinate index {i!r} out of range 1..{self.n}")
        return i

    def databases(self) -> Iterator[Database]:
        self.require_enumerable()
        return product(self.domain, repeat=self.n)

    def require_enumerable(self):
        if not self.enumerable:
            raise CapabilityError(
                f"Database space |D|^n = {len(self.domain)}^{self.n} exceeds the enumeration cap "
                f"{self.enumeration_cap}; supply explicit neighbor pairs instead"
            )

    def neighbors(self, x: Sequence[Symbol]) -> List[Database]:
        x = self.validate(x)
        result = []
        for position in range(self.n):
            for symbol in self.domain:
                if symbol != x[position]:
                    result.append(x[:position] + (symbol,) + x[position + 1:])
        return result

    def suppress(self, x: Sequence[Symbol], i: int) -> Database:
        x = self.validate(x)
        self.check_index(i)
        if x[i - 1] == self.default_symbol:
            return x
        return x[:i - 1] + (self.default_symbol,) + x[i:]

    def all_default(self) -> Database:
        return (self.default_symbol,) * self.n

    def encode(self, x: Sequence[Symbol]) -> str:
        return ",".join(str(entry) for entry in x)

    def decode(self, text: str) -> Database:
        """Parse a comma-joined database string using the domain's own symbols."""
        lookup = {str(symbol): symbol for symbol in self.domain}
        parts = text.split(",") if text != "" else []
        try:
            return self.validate(tuple(lookup[part.strip()] for part in parts))
        except KeyError as exc:
            raise InputError(f"Database {text!r} has an entry outside the domain: {exc.args[0]!r}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, DatabaseSpace):
            return NotImplemented
        return (self.domain, self.n, self.default_symbol) == (other.domain, other.n, other.default_symbol)

    def __hash__(self):
        return hash((self.domain, self.n, self.default_symbol))

    def __repr__(self) -> str:
        return f"DatabaseSpace(domain={list(self.domain)}, n={self.n}, default={self.default_symbol!r})"


def hamming_distance(x: Sequence[Symbol], y: Sequence[Symbol]) -> int:
    return sum(1 for a, b in zip(x, y) if a != b)
