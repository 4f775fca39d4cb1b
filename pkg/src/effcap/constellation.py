"""Unit-energy input alphabets."""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Kind",
    "Constellation",
    "make_constellation",
    "average_energy",
    "from_name",
]


class Kind(str, enum.Enum):
    BPSK = "bpsk"
    PAM = "pam"
    QAM = "qam"
    PSK = "psk"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class Constellation:
    """A discrete input alphabet with its prior, or the Gaussian marker.

    ``points`` is empty for :attr:`Kind.GAUSSIAN`; downstream code switches
    to closed forms for that case.
    """

    kind: Kind
    points: np.ndarray = field(repr=False)
    probabilities: np.ndarray = field(repr=False)
    is_real: bool
    name: str = ""

    def __post_init__(self):
        # freeze the arrays so instances can be shared between workers
        self.points.setflags(write=False)
        self.probabilities.setflags(write=False)

    @property
    def is_gaussian(self) -> bool:
        return self.kind is Kind.GAUSSIAN

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def bits(self) -> float:
        """log2 of the alphabet size (inf for Gaussian)."""
        return math.inf if self.is_gaussian else math.log2(self.size)

    def key(self) -> tuple:
        """Hashable identity, used for caching derived tables."""
        return (self.kind.value, self.is_real, self.points.tobytes(), self.probabilities.tobytes())


def _normalized(points: np.ndarray) -> np.ndarray:
    return points / np.sqrt(np.mean(np.abs(points) ** 2))


def make_constellation(kind, order: int = 2) -> Constellation:
    """Build an equiprobable, unit-average-energy constellation.

    Parameters
    ----------
    kind : Kind or str
        One of ``bpsk``, ``pam``, ``qam``, ``psk``, ``gaussian``.
    order : int
        Alphabet size. Ignored for Gaussian; must be 2 for BPSK and a
        perfect square >= 4 for QAM.

    Raises
    ------
    ValueError
        For an unknown kind or an unsupported order.
    """
    try:
        kind = Kind(kind.lower() if isinstance(kind, str) else kind)
    except ValueError:
        raise ValueError(f"unknown constellation kind {kind!r}") from None

    if kind is Kind.GAUSSIAN:
        return Constellation(kind, np.zeros(0, complex), np.zeros(0), False, "gaussian")

    if not isinstance(order, (int, np.integer)) or order < 2:
        raise ValueError(f"{kind.value} order must be an integer >= 2, got {order!r}")

    if kind is Kind.BPSK:
        if order != 2:
            raise ValueError(f"BPSK has order 2, got {order}")
        pts = np.array([1.0, -1.0], dtype=complex)
        name = "bpsk"
    elif kind is Kind.PAM:
        pts = _normalized(np.arange(-(order - 1), order, 2, dtype=float).astype(complex))
        name = f"pam{order}"
    elif kind is Kind.QAM:
        side = math.isqrt(order)
        if side * side != order or order < 4:
            raise ValueError(f"QAM order must be a perfect square >= 4, got {order}")
        axis = np.arange(-(side - 1), side, 2, dtype=float)
        pts = _normalized((axis[:, None] + 1j * axis[None, :]).ravel())
        name = f"qam{order}"
    else:  # PSK
        pts = np.exp(2j * np.pi * np.arange(order) / order)
        if order == 2:
            # exact zeros on the imaginary axis keep BPSK-like PSK real
            pts = np.array([1.0, -1.0], dtype=complex)
        name = f"psk{order}"

    probs = np.full(len(pts), 1.0 / len(pts))
    is_real = bool(np.all(pts.imag == 0.0))
    return Constellation(kind, pts, probs, is_real, name)


def average_energy(c: Constellation) -> float:
    """Mean symbol energy sum_k p_k |x_k|^2 (1 for the Gaussian marker)."""
    if c.is_gaussian:
        return 1.0
    return float(np.sum(c.probabilities * np.abs(c.points) ** 2))


_NAME_RE = re.compile(r"^(bpsk|gaussian|qam|pam|psk)(\d*)$")


def from_name(name: str) -> Constellation:
    """Parse config names such as ``bpsk``, ``qam16``, ``psk8``, ``gaussian``."""
    m = _NAME_RE.match(name.strip().lower())
    if not m:
        raise ValueError(f"unknown constellation name {name!r}")
    kind, digits = m.groups()
    if kind in ("bpsk", "gaussian"):
        if digits and not (kind == "bpsk" and digits == "2"):
            raise ValueError(f"unknown constellation name {name!r}")
        return make_constellation(kind, 2)
    if not digits:
        raise ValueError(f"constellation {name!r} needs an order, e.g. {kind}4")
    return make_constellation(kind, int(digits))
