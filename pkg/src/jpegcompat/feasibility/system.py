"""Antecedent constraint system, verdicts, budgets and the verification step."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..codec import DctBlock, compress, decompress
from ..transform import DctMatrix, dct_matrix

__all__ = [
    "AntecedentRangeError",
    "Budget",
    "ConstraintSystem",
    "DEFAULT_EPS",
    "Status",
    "Verdict",
    "build_constraints",
    "k_bounds",
    "system_for_block",
    "verify_antecedent",
]

DEFAULT_EPS = 1e-9
# outward slack on the a-priori k box so float noise never cuts a true point
_BOUND_SLACK = 1e-9


class AntecedentRangeError(ValueError):
    """The candidate pixel block ``[y] - k`` leaves ``[0, 255]``."""


@dataclass(frozen=True, eq=False)
class ConstraintSystem:
    """``A k <= b`` with ``A = [M/q; -M/q]``.

    Row ``i`` of the top half bounds ``u~_i`` from above and row ``nm + i``
    bounds it from below.  ``strict`` marks the rows that stand for a strict
    inequality; those rows already have ``eps`` subtracted from ``b``.
    ``rounded`` is ``[y]`` so that ``x~ = rounded - k``.
    """

    A: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    strict: np.ndarray = field(repr=False)
    eps: float
    block: DctBlock
    e: np.ndarray = field(repr=False)
    rounded: np.ndarray = field(repr=False)

    @property
    def shape(self):
        return self.block.shape

    @property
    def quant(self):
        return self.block.quant

    @property
    def nm(self) -> int:
        return self.block.shape.size

    def box(self) -> tuple[np.ndarray, np.ndarray]:
        """Bounds ``lo <= M k <= hi`` equivalent to ``A k <= b``."""
        q = self.block.quant.values
        nm = self.nm
        return -q * self.b[nm:], q * self.b[:nm]

    def relaxed(self) -> "ConstraintSystem":
        """The same system with every inequality closed (``eps = 0``)."""
        nm = self.nm
        Me_q = self.A[:nm] @ self.e
        b = np.concatenate([0.5 + Me_q, 0.5 - Me_q])
        return replace(self, b=b, strict=np.zeros_like(self.strict), eps=0.0)

    def satisfied_by(self, k, tol: float = 1e-12) -> bool:
        return bool(np.all(self.A @ np.asarray(k, dtype=np.float64) <= self.b + tol))


def build_constraints(c: DctBlock, e, eps: float = DEFAULT_EPS,
                      rounded: Optional[np.ndarray] = None) -> ConstraintSystem:
    """Constraints on ``k`` for ``[y] - k`` to compress back to ``c``.

    With ``u~ = M (k - e) / q`` the coordinates must satisfy
    ``-0.5 < u~ <= 0.5`` where ``c >= 0`` and ``-0.5 <= u~ < 0.5`` where
    ``c < 0``; strict sides are tightened by ``eps``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    M = dct_matrix(c.shape)
    e = np.asarray(e, dtype=np.float64).reshape(-1)
    if e.size != c.shape.size:
        raise ValueError("spatial error length does not match the block")
    if rounded is None:
        rounded = decompress(c, M).rounded
    q = c.quant.values.astype(np.float64)
    Mq = M.entries / q[:, None]
    A = np.vstack([Mq, -Mq])
    Me_q = Mq @ e
    strict_top = c.coeffs < 0
    strict_bot = ~strict_top
    strict = np.concatenate([strict_top, strict_bot])
    b = np.concatenate([0.5 + Me_q, 0.5 - Me_q]) - eps * strict
    for arr in (A, b, strict):
        arr.setflags(write=False)
    rounded = np.asarray(rounded, dtype=np.int64)
    return ConstraintSystem(A, b, strict, float(eps), c, e, rounded)


def system_for_block(c: DctBlock, eps: float = DEFAULT_EPS) -> ConstraintSystem:
    """Decompress ``c`` and build its system in one go."""
    dec = decompress(c, dct_matrix(c.shape))
    return build_constraints(c, dec.e, eps, dec.rounded)


def k_bounds(system: ConstraintSystem, pixel_range: bool = False):
    """Integer box ``(lo, hi)`` enclosing every ``k`` that satisfies the system.

    From ``k - e = M^T (u~ q)`` with ``|u~| <= 1/2``, each ``k_i`` is within
    ``s_i = 0.5 * sum_j |M_ji| q_j`` of ``e_i``.  With ``pixel_range`` the box
    is also cut to keep ``[y] - k`` inside ``[0, 255]``.
    """
    M = dct_matrix(system.shape).entries
    q = system.quant.values
    s = 0.5 * (np.abs(M) * q[:, None]).sum(axis=0)
    lo = np.ceil(system.e - s - _BOUND_SLACK).astype(np.int64)
    hi = np.floor(system.e + s + _BOUND_SLACK).astype(np.int64)
    if pixel_range:
        lo = np.maximum(lo, system.rounded - 255)
        hi = np.minimum(hi, system.rounded)
    return lo, hi


def verify_antecedent(k, c: DctBlock, rounded: Optional[np.ndarray] = None,
                      M: Optional[DctMatrix] = None) -> bool:
    """Does ``[y] - k`` compress exactly to ``c``?

    Raises :class:`AntecedentRangeError` when the candidate is not a valid
    pixel block at all.
    """
    M = M or dct_matrix(c.shape)
    if rounded is None:
        rounded = decompress(c, M).rounded
    x = np.asarray(rounded, dtype=np.int64) - np.asarray(k, dtype=np.int64).reshape(-1)
    if x.min() < 0 or x.max() > 255:
        raise AntecedentRangeError("candidate antecedent leaves the pixel range")
    c2, _ = compress(x, c.quant, M)
    return bool(np.array_equal(c2.coeffs, c.coeffs))


@dataclass(frozen=True)
class Budget:
    """Search limits: solver nodes and/or wall-clock seconds.

    ``None`` means unlimited.  Node limits are deterministic; time limits
    are not.
    """

    max_nodes: Optional[int] = None
    max_time: Optional[float] = None

    def __post_init__(self):
        if self.max_nodes is not None:
            if isinstance(self.max_nodes, bool) or int(self.max_nodes) != self.max_nodes:
                raise ValueError("max_nodes must be an integer")
            if self.max_nodes < 1:
                raise ValueError("max_nodes must be at least 1")
            object.__setattr__(self, "max_nodes", int(self.max_nodes))
        if self.max_time is not None and not self.max_time > 0:
            raise ValueError("max_time must be positive")

    @property
    def unlimited(self) -> bool:
        return self.max_nodes is None and self.max_time is None

    @classmethod
    def nodes(cls, n: int) -> "Budget":
        return cls(max_nodes=n)


class Status(enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    EXHAUSTED = "exhausted"
    IGNORED = "ignored"


@dataclass(frozen=True, eq=False)
class Verdict:
    """Outcome of one feasibility decision.

    ``k`` is set only for FEASIBLE verdicts and always passed
    :func:`verify_antecedent`.  ``n_wrong`` counts leaves that satisfied the
    constraints but did not recompress to the block.
    """

    status: Status
    nodes: int = 0
    elapsed: float = 0.0
    k: Optional[np.ndarray] = field(default=None, repr=False)
    reason: str = ""
    n_wrong: int = 0

    @property
    def feasible(self) -> bool:
        return self.status is Status.FEASIBLE

    @property
    def infeasible(self) -> bool:
        return self.status is Status.INFEASIBLE

    @property
    def exhausted(self) -> bool:
        return self.status is Status.EXHAUSTED

    def antecedent(self, system: ConstraintSystem) -> Optional[np.ndarray]:
        if self.k is None:
            return None
        return system.rounded - self.k
