"""Core fixed-point IR: SIF formats, scaled signals, and the dataflow graph.

A SIF format partitions a two's-complement word into S sign bits, I integer
bits and F fraction bits. The S-1 extra sign bits are stored as literal
sign-extension copies, so a raw value is only well formed when it lies in
[-2^(I+F), 2^(I+F) - 1]. A ScaledSignal pairs a format with a binary scale
exponent E; the semantic value of a raw word is raw * 2^(E - F).

Raw values are plain Python integers (arbitrary precision), so full-width
products never overflow the host representation. Real values are exact
``fractions.Fraction`` throughout.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import CycleError, MalformedRawError, RangeError


class Quantize(enum.Enum):
    """Rounding mode used when a real value is encoded onto a format grid."""

    ROUND = "round"  # nearest, ties away from zero
    TRUNC = "trunc"  # toward -inf (matches an arithmetic right shift)


@dataclass(frozen=True)
class SifFormat:
    """(sign bits / integer bits / fraction bits) partition of a word."""

    s: int
    i: int
    f: int

    def __post_init__(self):
        if self.s < 1:
            raise ValueError(f"sign bits must be >= 1, got {self.s}")
        if self.i < 0 or self.f < 0:
            raise ValueError(f"integer/fraction bit counts must be >= 0, got ({self.i}/{self.f})")

    @property
    def width(self) -> int:
        return self.s + self.i + self.f

    @property
    def min_raw(self) -> int:
        return -(1 << (self.i + self.f))

    @property
    def max_raw(self) -> int:
        return (1 << (self.i + self.f)) - 1

    @property
    def min_value(self) -> Fraction:
        """Smallest decodable value, -2^I."""
        return Fraction(self.min_raw, 1 << self.f)

    @property
    def max_value(self) -> Fraction:
        """Largest decodable value, 2^I - 2^-F."""
        return Fraction(self.max_raw, 1 << self.f)

    @property
    def ulp(self) -> Fraction:
        return Fraction(1, 1 << self.f)

    def __str__(self):
        return f"({self.s}/{self.i}/{self.f})"


def sif_width(fmt: SifFormat) -> int:
    """Total bit count S + I + F."""
    return fmt.width


def decode(raw: int, fmt: SifFormat) -> Fraction:
    """Exact value of a raw two's-complement word: raw * 2^-F.

    Raises MalformedRawError when the redundant sign bits are inconsistent,
    i.e. the raw integer lies outside [-2^(I+F), 2^(I+F)-1].
    """
    if not fmt.min_raw <= raw <= fmt.max_raw:
        raise MalformedRawError(
            f"raw {raw} is not a valid {fmt} word: "
            f"expected range [{fmt.min_raw}, {fmt.max_raw}]"
        )
    return Fraction(raw, 1 << fmt.f)


def round_half_away(x: Fraction) -> int:
    """Round to the nearest integer, ties away from zero."""
    n, d = x.numerator, x.denominator
    if n >= 0:
        return (2 * n + d) // (2 * d)
    return -((-2 * n + d) // (2 * d))


def floor_to_grid(x: Fraction, grid: Fraction) -> Fraction:
    """Largest multiple of ``grid`` that is <= x."""
    return (x / grid).__floor__() * grid


def encode(value, fmt: SifFormat, mode: Quantize = Quantize.ROUND) -> int:
    """Encode a real value as a raw word of ``fmt``.

    ROUND picks the nearest representable value (ties away from zero),
    TRUNC floors toward -inf. Raises RangeError when the value lies outside
    the decodable range [-2^I, 2^I - 2^-F].
    """
    v = Fraction(value)
    if not fmt.min_value <= v <= fmt.max_value:
        raise RangeError(f"value {float(v)} is outside the decodable range of {fmt} "
                         f"[{float(fmt.min_value)}, {float(fmt.max_value)}]")
    scaled = v * (1 << fmt.f)
    if mode is Quantize.ROUND:
        raw = round_half_away(scaled)
    else:
        raw = scaled.__floor__()
    # rounding at the top edge cannot escape: value <= max_value implies raw <= max_raw
    assert fmt.min_raw <= raw <= fmt.max_raw
    return raw


@functools.lru_cache(maxsize=4096)
def _pow2_frac(e: int) -> Fraction:
    return Fraction(1 << e) if e >= 0 else Fraction(1, 1 << -e)


@dataclass(frozen=True)
class ScaledSignal:
    """A SIF format plus an accumulated binary scale exponent.

    semantic value = raw * 2^(-F) * 2^(scale). Every pre-scale right shift by
    k adds k to ``scale`` so the mathematical intent of the computation is
    recoverable from the raw output.
    """

    fmt: SifFormat
    scale: int = 0

    @property
    def grid(self) -> Fraction:
        """Semantic weight of one raw LSB: 2^(scale - F)."""
        return _pow2_frac(self.scale - self.fmt.f)

    @property
    def min_value(self) -> Fraction:
        return self.fmt.min_raw * self.grid

    @property
    def max_value(self) -> Fraction:
        return self.fmt.max_raw * self.grid

    def value_of(self, raw: int) -> Fraction:
        return raw * self.grid

    def __str__(self):
        return f"{self.fmt} E={self.scale}"


class NodeKind(enum.Enum):
    INPUT = "input"
    CONST = "const"
    MUL = "mul"
    ADD = "add"
    SHR = "shr"        # pre-scale arithmetic right shift, scale += amount
    TRUNC = "trunc"    # drop fraction LSBs (+ redundant MSBs), width shrinks
    OUTPUT = "output"


_ARITY = {
    NodeKind.INPUT: 0,
    NodeKind.CONST: 0,
    NodeKind.MUL: 2,
    NodeKind.ADD: 2,
    NodeKind.SHR: 1,
    NodeKind.TRUNC: 1,
    NodeKind.OUTPUT: 1,
}


@dataclass(frozen=True)
class Node:
    """One dataflow operation.

    ``value`` is set for CONST nodes (exact rational, pre-quantization).
    ``amount`` is the shift distance for SHR, or the count of dropped
    fraction LSBs for TRUNC; ``drop_msbs`` the count of dropped redundant
    MSBs for TRUNC. ``negate`` flags per-operand negation on ADD, which is
    how subtraction is carried without leaving the multiply-add vocabulary.
    """

    id: str
    kind: NodeKind
    operands: tuple[str, ...] = ()
    value: Fraction | None = None
    amount: int = 0
    drop_msbs: int = 0
    negate: tuple[bool, bool] = (False, False)

    def __post_init__(self):
        if len(self.operands) != _ARITY[self.kind]:
            raise ValueError(
                f"node '{self.id}': {self.kind.value} takes {_ARITY[self.kind]} "
                f"operand(s), got {len(self.operands)}"
            )
        if self.kind is NodeKind.CONST and self.value is None:
            raise ValueError(f"const node '{self.id}' has no value")
        if all(self.negate):
            raise ValueError(f"node '{self.id}': both-operand negation is not representable")


@dataclass(frozen=True)
class Dfg:
    """Directed acyclic dataflow graph. Nodes are stored in declaration order.

    Construction only checks id uniqueness and operand existence; acyclicity
    is established by topo_order (declaration order is not required to be
    topological).
    """

    nodes: tuple[Node, ...]
    _by_id: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        by_id = {}
        for n in self.nodes:
            if n.id in by_id:
                raise ValueError(f"duplicate node id '{n.id}'")
            by_id[n.id] = n
        for n in self.nodes:
            for op in n.operands:
                if op not in by_id:
                    raise ValueError(f"node '{n.id}' references unknown operand '{op}'")
        object.__setattr__(self, "_by_id", by_id)

    def node(self, node_id: str) -> Node:
        return self._by_id[node_id]

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._by_id

    @property
    def output_ids(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes if n.kind is NodeKind.OUTPUT)

    def consumers(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {n.id: [] for n in self.nodes}
        for n in self.nodes:
            for op in n.operands:
                out[op].append(n.id)
        return out

    def with_nodes(self, nodes) -> "Dfg":
        return Dfg(tuple(nodes))


def topo_order(dfg: Dfg) -> list[str]:
    """Deterministic topological order: by dataflow level, then declaration.

    Level-first ordering keeps all multiplies ahead of the first add in a
    multiply-accumulate graph, which is the order the emitted code uses.
    Raises CycleError (listing the cycle) when the graph is not a DAG.
    """
    index = {n.id: k for k, n in enumerate(dfg.nodes)}
    level: dict[str, int] = {}
    on_stack: set[str] = set()

    for root in dfg.nodes:
        if root.id in level:
            continue
        stack: list[tuple[str, int]] = [(root.id, 0)]
        path: list[str] = []
        while stack:
            nid, state = stack.pop()
            if state == 0:
                if nid in level:
                    continue
                if nid in on_stack:
                    raise CycleError(path[path.index(nid):] + [nid])
                on_stack.add(nid)
                path.append(nid)
                stack.append((nid, 1))
                for op in reversed(dfg.node(nid).operands):
                    if op not in level:
                        stack.append((op, 0))
            else:
                ops = dfg.node(nid).operands
                level[nid] = 0 if not ops else 1 + max(level[op] for op in ops)
                on_stack.discard(nid)
                path.pop()
    return sorted(level, key=lambda nid: (level[nid], index[nid]))
