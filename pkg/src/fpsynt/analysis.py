"""Format assignment, overflow analysis and worst-case error bounds.

The analyzer walks a dataflow graph in topological order and, for every
node, fixes a ScaledSignal (format + scale), an exact value interval and an
accumulated worst-case absolute error. Wherever a raw operation would not
fit the datapath it inserts formatting operations:

  * before an addition, operands are pre-scaled (arithmetic right shifts)
    until the exact sum interval fits the word width, leaving headroom for
    the carry;
  * after a multiplication, the full-width product is truncated back to the
    word width, dropping fraction LSBs and any MSBs the value interval
    proves redundant.

Shifts and truncations floor toward -inf, so their loss is one-sided and
bounded by (2^k - 1) * grid. Everything is computed in exact rational
arithmetic; the resulting bounds are sound by construction and validated by
simulation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

from .config import Config
from .core import (Dfg, Node, NodeKind, ScaledSignal, SifFormat, decode,
                   encode, floor_to_grid, topo_order)
from .errors import CannotFitError
from .parser import Bindings

log = logging.getLogger("fpsynt.analysis")

_ZERO = Fraction(0)


def _pow2(e: int) -> Fraction:
    return Fraction(1 << e) if e >= 0 else Fraction(1, 1 << -e)


@dataclass(frozen=True)
class Interval:
    """Closed interval of exact semantic values."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"bad interval [{self.lo}, {self.hi}]")

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __mul__(self, other: "Interval") -> "Interval":
        corners = (self.lo * other.lo, self.lo * other.hi,
                   self.hi * other.lo, self.hi * other.hi)
        return Interval(min(corners), max(corners))

    def floor_to(self, grid: Fraction) -> "Interval":
        return Interval(floor_to_grid(self.lo, grid), floor_to_grid(self.hi, grid))

    @property
    def max_abs(self) -> Fraction:
        return max(-self.lo, self.hi, _ZERO)

    def contains(self, v) -> bool:
        return self.lo <= v <= self.hi


def point(v: Fraction) -> Interval:
    return Interval(v, v)


def interval_of(node: Node, operands: list[Interval],
                operand_grids: list[Fraction] = (),
                const_value: Fraction | None = None) -> Interval:
    """Exact value interval of one node given its operand intervals.

    For CONST nodes pass the quantized value via ``const_value``. SHR/TRUNC
    need the operand grid to account for the floor loss.
    """
    if node.kind is NodeKind.CONST:
        return point(const_value if const_value is not None else node.value)
    if node.kind is NodeKind.MUL:
        return operands[0] * operands[1]
    if node.kind is NodeKind.ADD:
        a = -operands[0] if node.negate[0] else operands[0]
        b = -operands[1] if node.negate[1] else operands[1]
        return a + b
    if node.kind in (NodeKind.SHR, NodeKind.TRUNC):
        new_grid = operand_grids[0] * (1 << node.amount)
        return operands[0].floor_to(new_grid)
    if node.kind is NodeKind.OUTPUT:
        return operands[0]
    raise ValueError(f"no interval rule for {node.kind}")


@dataclass(frozen=True)
class NodeInfo:
    """Analysis result attached to one plan node.

    ``eff`` is the effective value grid: the coarsest power of two every
    reachable value of the node is a multiple of. It can be coarser than the
    format grid (a constant like 0.5 carries trailing zero bits through a
    product), in which case flooring those bits away costs nothing and the
    truncation bound tightens accordingly.
    """

    signal: ScaledSignal
    interval: Interval
    err: Fraction
    eff: Fraction = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.eff is None:
            object.__setattr__(self, "eff", self.signal.grid)

    @property
    def width(self) -> int:
        return self.signal.fmt.width

    def semantic_range(self) -> Interval:
        return Interval(self.signal.min_value, self.signal.max_value)


def floor_loss(eff: Fraction, new_grid: Fraction,
               interval: "Interval | None" = None) -> Fraction:
    """Worst loss of flooring values on grid ``eff`` to ``new_grid``.

    Zero when no information sits below the target grid; the classic
    (2^k - 1) * ulp bound falls out when eff equals the format grid. A
    point interval (a constant's downstream value) floors by a knowable,
    exact amount."""
    if interval is not None and interval.lo == interval.hi:
        return interval.lo - floor_to_grid(interval.lo, new_grid)
    return max(_ZERO, new_grid - eff)


def value_grid(v: Fraction) -> Fraction:
    """Coarsest power-of-two grid containing a single dyadic value; for zero
    (on every grid) the caller's format grid is the honest answer."""
    n = abs(v.numerator)
    if n == 0:
        return _ZERO  # sentinel, caller substitutes
    twos = (n & -n).bit_length() - 1
    return Fraction(1 << twos, v.denominator)


def infer_product_format(a: ScaledSignal, b: ScaledSignal) -> ScaledSignal:
    """Full product format: fields add, scales add, width doubles."""
    fa, fb = a.fmt, b.fmt
    return ScaledSignal(SifFormat(fa.s + fb.s, fa.i + fb.i, fa.f + fb.f), a.scale + b.scale)


def fit_format_to_interval(sig: ScaledSignal, interval: Interval) -> ScaledSignal:
    """Convert redundant sign bits to integer bits until the interval fits.

    Only the extreme corner product (-min * -min = +2^(I+F) ulps) ever needs
    this; it trades one sign copy for an integer bit at constant width.
    """
    while interval.hi > sig.max_value or interval.lo < sig.min_value:
        fmt = sig.fmt
        if fmt.s <= 1:
            raise CannotFitError(
                f"interval [{float(interval.lo)}, {float(interval.hi)}] exceeds {fmt}")
        sig = ScaledSignal(SifFormat(fmt.s - 1, fmt.i + 1, fmt.f), sig.scale)
    return sig


def _min_integer_bits(interval: Interval, f: int, scale: int) -> int:
    """Smallest i >= 0 such that interval fits (1/i/f) at the given scale."""
    i = 0
    while True:
        sig = ScaledSignal(SifFormat(1, i, f), scale)
        if interval.lo >= sig.min_value and interval.hi <= sig.max_value:
            return i
        i += 1


@dataclass(frozen=True)
class TruncSpec:
    """Planned effect of one TRUNC node."""

    drop_f: int
    drop_msbs: int
    signal: ScaledSignal
    interval: Interval
    added_error: Fraction
    eff: Fraction


def plan_truncate(info: NodeInfo, target_width: int) -> TruncSpec | None:
    """Plan the truncation of a signal down to ``target_width`` bits.

    Drops fraction LSBs plus whatever MSBs (redundant sign copies and
    integer bits the interval never reaches) can go for free, keeping as
    many information-bearing fraction bits as possible. Returns None when
    the signal already fits. Raises CannotFitError when even f = 0 cannot
    reach the target, which signals a true overflow risk.
    """
    sig, interval = info.signal, info.interval
    fmt = sig.fmt
    if fmt.width <= target_width:
        return None
    for f_r in range(min(fmt.f, target_width - 1), -1, -1):
        new_sig = ScaledSignal(SifFormat(1, 0, f_r), sig.scale)  # provisional, for grid
        floored = interval.floor_to(new_sig.grid) if f_r < fmt.f else interval
        i_r = _min_integer_bits(floored, f_r, sig.scale)
        if 1 + i_r + f_r <= target_width:
            pad = target_width - (1 + i_r + f_r)
            out = ScaledSignal(SifFormat(1 + pad, i_r, f_r), sig.scale)
            drop_f = fmt.f - f_r
            assert fmt.width - drop_f - target_width >= 0
            return TruncSpec(drop_f=drop_f,
                             drop_msbs=fmt.width - drop_f - target_width,
                             signal=out,
                             interval=floored,
                             added_error=floor_loss(info.eff, out.grid, interval),
                             eff=max(info.eff, out.grid))
    raise CannotFitError(
        f"cannot truncate {fmt} to {target_width} bits: integer part alone needs "
        f"{1 + _min_integer_bits(interval, 0, sig.scale)} bits")


@dataclass(frozen=True)
class AlignSpec:
    """Planned pre-scaling of the two operands of an addition."""

    shift_a: int
    shift_b: int
    a_view: NodeInfo       # operand as the adder sees it (post shift/relabel)
    b_view: NodeInfo
    f_star: int            # common fraction length of both views
    e_star: int            # common scale exponent
    result: NodeInfo


_ALIGN_GUARD = 200


def _shift_view(info: NodeInfo, shift: int, f_star: int, e_star: int) -> NodeInfo:
    """Operand view after an arithmetic right shift and a label-only move of
    fraction bits into integer bits. The shift floors away up to
    (2^k - 1) information-bearing ulps; the relabel is free (the raw word
    and its stored range are untouched)."""
    fmt = info.signal.fmt
    delta = fmt.f - f_star
    assert delta >= 0
    new_sig = ScaledSignal(SifFormat(fmt.s, fmt.i + delta, f_star), e_star)
    if shift == 0:
        return NodeInfo(new_sig, info.interval, info.err, info.eff)
    loss = floor_loss(info.eff, new_sig.grid, info.interval)
    return NodeInfo(new_sig, info.interval.floor_to(new_sig.grid),
                    info.err + loss, max(info.eff, new_sig.grid))


def plan_add(a: NodeInfo, b: NodeInfo, negate: tuple[bool, bool],
             width: int, extra: int = 0) -> AlignSpec:
    """Align two addition operands and fix the sum's format.

    Operands are brought to a common grid; the grid is then coarsened (each
    step shifting both views one more bit right) until the exact sum interval
    fits ``width`` bits, plus ``extra`` optional steps. Operands whose grid is
    already coarse enough are not shifted.
    """
    ga, gb = a.signal.grid, b.signal.grid
    g0 = max(ga, gb)

    def attempt(g) -> AlignSpec | None:
        sa = (g / ga).numerator.bit_length() - 1   # log2 of exact power-of-two ratio
        sb = (g / gb).numerator.bit_length() - 1
        f_star = min(a.signal.fmt.f, b.signal.fmt.f)
        # the operand achieving f_star fixes the common scale exponent
        e_star = (a.signal.scale + sa - (a.signal.fmt.f - f_star))
        assert e_star == b.signal.scale + sb - (b.signal.fmt.f - f_star)
        av = _shift_view(a, sa, f_star, e_star)
        bv = _shift_view(b, sb, f_star, e_star)
        ia = -av.interval if negate[0] else av.interval
        ib = -bv.interval if negate[1] else bv.interval
        total = ia + ib
        i_r = _min_integer_bits(total, f_star, e_star)
        if 1 + i_r + f_star > width:
            return None
        res = NodeInfo(ScaledSignal(SifFormat(1, i_r, f_star), e_star),
                       total, av.err + bv.err, min(av.eff, bv.eff))
        return AlignSpec(sa, sb, av, bv, f_star, e_star, res)

    g = g0
    for _ in range(_ALIGN_GUARD):
        spec = attempt(g)
        if spec is not None:
            break
        g *= 2
    else:
        raise CannotFitError(f"cannot align addition operands within {width} bits")
    if extra:
        spec = attempt(g * (1 << extra))
        assert spec is not None  # coarsening never un-fits a sum
    return spec


def mul_error_bound(a: NodeInfo, b: NodeInfo) -> Fraction:
    """Worst-case |computed - exact| of a product from its operand bounds.

    M_a*e_b + M_b*e_a + e_a*e_b with M taken from the computed operand
    intervals; the cross term keeps the bound strict. The result is clamped
    to max(e_a, e_b): a |factor| < 1 can genuinely shrink an absolute error,
    but keeping bounds non-decreasing along every path is what makes
    branch-and-bound pruning admissible, and a larger bound stays sound."""
    ma, mb = a.interval.max_abs, b.interval.max_abs
    return max(ma * b.err + mb * a.err + a.err * b.err, a.err, b.err)


def propagate_error(node: Node, operands: list[NodeInfo],
                    added_loss: Fraction = _ZERO,
                    quant_error: Fraction = _ZERO) -> Fraction:
    """Accumulated worst-case error at one node.

    ``added_loss`` carries shift/truncation floor losses, ``quant_error`` the
    constant-quantization error for CONST nodes."""
    if node.kind is NodeKind.INPUT:
        return _ZERO
    if node.kind is NodeKind.CONST:
        return quant_error
    if node.kind is NodeKind.MUL:
        return mul_error_bound(operands[0], operands[1]) + added_loss
    if node.kind is NodeKind.ADD:
        return operands[0].err + operands[1].err + added_loss
    if node.kind in (NodeKind.SHR, NodeKind.TRUNC):
        return operands[0].err + added_loss
    if node.kind is NodeKind.OUTPUT:
        return operands[0].err
    raise ValueError(f"no error rule for {node.kind}")


def choose_const_format(value: Fraction, width: int) -> SifFormat:
    """Most precise format for a constant: minimal integer bits, every
    remaining bit a fraction bit."""
    for i in range(0, width):
        f = width - 1 - i
        fmt = SifFormat(1, i, f)
        if fmt.min_value <= value <= fmt.max_value:
            return fmt
    raise CannotFitError(f"constant {float(value)} does not fit in {width} bits")


# ---------------------------------------------------------------------------
# chains of consecutive additions


@dataclass(frozen=True)
class Chain:
    """A maximal run of >= 2 connected ADD nodes, flattened to signed terms."""

    root: str
    members: tuple[str, ...]          # non-root ADD nodes absorbed by the chain
    terms: tuple[tuple[str, int], ...]  # (node id, +1/-1) in source order
    shape: tuple                       # original parenthesization over term indexes

    @property
    def n_terms(self) -> int:
        return len(self.terms)


def find_chains(dfg: Dfg) -> list[Chain]:
    """Locate every maximal chain of consecutive additions.

    An ADD belongs to its consumer's chain when it is that consumer's only
    use; shared subtrees stay intact. Chains are reported in declaration
    order of their root.
    """
    consumers = dfg.consumers()
    add_ids = {n.id for n in dfg.nodes if n.kind is NodeKind.ADD}

    def absorbed(nid: str) -> bool:
        if nid not in add_ids:
            return False
        cons = consumers[nid]
        return len(cons) == 1 and dfg.node(cons[0]).kind is NodeKind.ADD

    chains = []
    for node in dfg.nodes:
        if node.id not in add_ids or absorbed(node.id):
            continue
        members: list[str] = []
        terms: list[tuple[str, int]] = []

        def walk(nid: str, sign: int):
            n = dfg.node(nid)
            if n.id in add_ids and (n.id == node.id or absorbed(n.id)):
                if n.id != node.id:
                    members.append(n.id)
                left = walk(n.operands[0], -sign if n.negate[0] else sign)
                right = walk(n.operands[1], -sign if n.negate[1] else sign)
                return (left, right)
            terms.append((nid, sign))
            return len(terms) - 1

        shape = walk(node.id, 1)
        if len(members) >= 1:  # root + >= 1 member = >= 2 consecutive adds
            chains.append(Chain(node.id, tuple(members), tuple(terms), shape))
    return chains


@dataclass(frozen=True)
class AccumulatorInfo:
    """Widened accumulator allocated for one addition chain."""

    root: str
    width: int
    fraction_bits: int
    n_terms: int


# ---------------------------------------------------------------------------
# plan construction


@dataclass(frozen=True)
class Plan:
    """A fully fixed synthesis result: graph with formatting ops, per-node
    signals/intervals/error bounds, quantized constants."""

    graph: Dfg
    info: dict[str, NodeInfo]
    const_raws: dict[str, int]
    bindings: Bindings
    source: Dfg
    config: Config
    choices: tuple[tuple[str, int], ...]
    wide_ids: frozenset[str]
    accumulators: tuple[AccumulatorInfo, ...]
    topology: str = "source"

    @property
    def output_ids(self) -> tuple[str, ...]:
        return self.graph.output_ids

    @property
    def cost(self) -> Fraction:
        """Predicted worst-case output error (max across outputs)."""
        return max(self.info[o].err for o in self.output_ids)

    @property
    def cost_key(self):
        errs = [self.info[o].err for o in self.output_ids]
        return (max(errs), sum(errs))

    @property
    def n_format_nodes(self) -> int:
        return sum(1 for n in self.graph.nodes if n.kind in (NodeKind.SHR, NodeKind.TRUNC))

    def order(self) -> list[str]:
        cached = getattr(self, "_order", None)
        if cached is None:
            cached = topo_order(self.graph)
            object.__setattr__(self, "_order", cached)
        return cached

    def source_order(self) -> list[str]:
        cached = getattr(self, "_source_order", None)
        if cached is None:
            cached = topo_order(self.source)
            object.__setattr__(self, "_source_order", cached)
        return cached


class _Ctx:
    """Mutable build state; cloned at every search branch point."""

    __slots__ = ("nodes", "info", "alias", "const_raws", "used", "wide",
                 "accumulators", "live_err", "choices")

    def __init__(self, used: set[str]):
        self.nodes: list[Node] = []
        self.info: dict[str, NodeInfo] = {}
        self.alias: dict[str, str] = {}
        self.const_raws: dict[str, int] = {}
        self.used: set[str] = used
        self.wide: set[str] = set()
        self.accumulators: list[AccumulatorInfo] = []
        self.live_err: Fraction = _ZERO
        self.choices: list[tuple[str, int]] = []

    def clone(self) -> "_Ctx":
        c = _Ctx(set(self.used))
        c.nodes = list(self.nodes)
        c.info = dict(self.info)
        c.alias = dict(self.alias)
        c.const_raws = dict(self.const_raws)
        c.wide = set(self.wide)
        c.accumulators = list(self.accumulators)
        c.live_err = self.live_err
        c.choices = list(self.choices)
        return c

    def fresh(self, base: str) -> str:
        name = base
        while name in self.used:
            name += "_"
        self.used.add(name)
        return name

    def emit(self, node: Node, info: NodeInfo, wide: bool = False):
        self.nodes.append(node)
        self.info[node.id] = info
        if wide:
            self.wide.add(node.id)
        if info.err > self.live_err:
            self.live_err = info.err


class PlanBuilder:
    """Builds annotated plans for one graph, one position at a time.

    The optimizer drives it as a search tree: positions with a free choice
    (MUL extra truncation, ADD extra pre-scaling) branch; everything else is
    forced. ``build`` runs the whole walk with a fixed choice mapping.
    """

    def __init__(self, dfg: Dfg, bindings: Bindings, config: Config,
                 chain_roots: frozenset[str] = frozenset(), topology: str = "source",
                 source: Dfg | None = None):
        self.dfg = dfg
        self.bindings = bindings
        self.config = config
        self.topology = topology
        self.source = source if source is not None else dfg
        self.chains = {c.root: c for c in find_chains(dfg)
                       if c.root in chain_roots}
        self._absorbed = {m: c.root for c in self.chains.values() for m in c.members}
        # terms whose full-width value may feed the accumulator directly
        consumers = dfg.consumers()
        chain_adds = set(self._absorbed) | set(self.chains)
        self._full_width_terms = set()
        for c in self.chains.values():
            for tid, _sign in c.terms:
                if (dfg.node(tid).kind is NodeKind.MUL
                        and all(u in chain_adds for u in consumers[tid])):
                    self._full_width_terms.add(tid)

        reachable = self._reachable()
        self.positions = [nid for nid in topo_order(dfg)
                          if nid in reachable and nid not in self._absorbed]

    def _reachable(self) -> set[str]:
        seen = set(self.dfg.output_ids)
        stack = list(seen)
        while stack:
            for op in self.dfg.node(stack.pop()).operands:
                if op not in seen:
                    seen.add(op)
                    stack.append(op)
        seen.update(n.id for n in self.dfg.nodes if n.kind is NodeKind.INPUT)
        return seen

    def new_ctx(self) -> _Ctx:
        return _Ctx({n.id for n in self.dfg.nodes})

    def is_choice_point(self, nid: str) -> bool:
        node = self.dfg.node(nid)
        if nid in self.chains or nid in self._full_width_terms:
            return False
        return node.kind in (NodeKind.MUL, NodeKind.ADD)

    def candidates(self) -> range:
        return range(0, self.config.k_max + 1)

    # per-node assignment

    def step(self, ctx: _Ctx, nid: str, choice: int = 0):
        node = self.dfg.node(nid)
        W = self.config.width
        if node.kind is NodeKind.INPUT:
            fmt = self.bindings.input_format(nid)
            if fmt.width > W:
                raise CannotFitError(
                    f"input '{nid}' is {fmt.width} bits wide, word width is {W}")
            sig = ScaledSignal(fmt, 0)
            ctx.emit(node, NodeInfo(sig, Interval(sig.min_value, sig.max_value), _ZERO))
            ctx.alias[nid] = nid
        elif node.kind is NodeKind.CONST:
            self._step_const(ctx, node)
        elif node.kind is NodeKind.MUL:
            self._step_mul(ctx, node, choice)
        elif node.kind is NodeKind.ADD:
            if nid in self.chains:
                self._step_chain(ctx, self.chains[nid])
            else:
                self._step_add(ctx, node, choice)
        elif node.kind is NodeKind.OUTPUT:
            src = ctx.alias[node.operands[0]]
            ctx.emit(Node(nid, NodeKind.OUTPUT, (src,)), ctx.info[src])
            ctx.alias[nid] = nid
        else:
            raise ValueError(f"source graphs cannot contain {node.kind} nodes")

    def _step_const(self, ctx: _Ctx, node: Node):
        W = self.config.width
        try:
            fmt = choose_const_format(node.value, W)
        except CannotFitError as e:
            raise CannotFitError(f"const '{node.id}': {e}") from None
        raw = encode(node.value, fmt, self.config.quantize)
        q = decode(raw, fmt)
        sig = ScaledSignal(fmt, 0)
        eff = value_grid(q) or sig.grid
        ctx.emit(node, NodeInfo(sig, point(q), abs(node.value - q), eff))
        ctx.const_raws[node.id] = raw
        ctx.alias[node.id] = node.id

    def _step_mul(self, ctx: _Ctx, node: Node, choice: int):
        a = ctx.info[ctx.alias[node.operands[0]]]
        b = ctx.info[ctx.alias[node.operands[1]]]
        sig = infer_product_format(a.signal, b.signal)
        interval = a.interval * b.interval
        sig = fit_format_to_interval(sig, interval)
        info = NodeInfo(sig, interval, mul_error_bound(a, b), a.eff * b.eff)
        mul_node = Node(node.id, NodeKind.MUL,
                        (ctx.alias[node.operands[0]], ctx.alias[node.operands[1]]))
        ctx.emit(mul_node, info)
        ctx.alias[node.id] = node.id
        ctx.choices.append((node.id, choice))

        W = self.config.width
        if node.id in self._full_width_terms:
            if choice:
                raise CannotFitError("chain terms take no extra truncation")
            return
        target = min(sig.fmt.width, W) - choice
        spec = plan_truncate(info, target)
        if spec is None:
            return
        tid = ctx.fresh(f"{node.id}_q")
        ctx.emit(Node(tid, NodeKind.TRUNC, (node.id,),
                      amount=spec.drop_f, drop_msbs=spec.drop_msbs),
                 NodeInfo(spec.signal, spec.interval, info.err + spec.added_error,
                          spec.eff))
        ctx.alias[node.id] = tid

    def _step_add(self, ctx: _Ctx, node: Node, choice: int):
        a_id = ctx.alias[node.operands[0]]
        b_id = ctx.alias[node.operands[1]]
        spec = plan_add(ctx.info[a_id], ctx.info[b_id], node.negate,
                        self.config.width, extra=choice)
        refs = []
        for op_id, shift, view in ((a_id, spec.shift_a, spec.a_view),
                                   (b_id, spec.shift_b, spec.b_view)):
            if shift:
                sid = ctx.fresh(f"{node.id}_p{len(refs) + 1}")
                ctx.emit(Node(sid, NodeKind.SHR, (op_id,), amount=shift), view)
                refs.append(sid)
            else:
                refs.append(op_id)
        ctx.emit(Node(node.id, NodeKind.ADD, tuple(refs), negate=node.negate), spec.result)
        ctx.alias[node.id] = node.id
        ctx.choices.append((node.id, choice))

    # chain accumulator

    def _step_chain(self, ctx: _Ctx, chain: Chain):
        built = self._try_chain(ctx, chain)
        if built:
            return
        log.warning("chain at '%s' falls back to pairwise pre-scaling", chain.root)
        W = self.config.width
        for tid, _sign in chain.terms:
            # terms left at full width for the accumulator now need the
            # ordinary post-multiply truncation
            ref = ctx.alias[tid]
            spec = plan_truncate(ctx.info[ref], W)
            if spec is not None:
                qid = ctx.fresh(f"{ref}_q")
                ctx.emit(Node(qid, NodeKind.TRUNC, (ref,),
                              amount=spec.drop_f, drop_msbs=spec.drop_msbs),
                         NodeInfo(spec.signal, spec.interval,
                                  ctx.info[ref].err + spec.added_error, spec.eff))
                ctx.alias[tid] = qid
        # members were collected root-down; rebuild leaves-up
        for mid in reversed(chain.members):
            self._step_add(ctx, self.dfg.node(mid), 0)
        self._step_add(ctx, self.dfg.node(chain.root), 0)

    def _try_chain(self, ctx: _Ctx, chain: Chain) -> bool:
        W = self.config.width
        w_acc = W + math.ceil(math.log2(chain.n_terms))
        if w_acc > self.config.accumulator_width_limit:
            return False
        term_infos = [ctx.info[ctx.alias[tid]] for tid, _ in chain.terms]
        if any(t.signal.scale != 0 for t in term_infos):
            return False

        f_cap = min(t.signal.fmt.f for t in term_infos)
        plan = None
        for f_acc in range(f_cap, -1, -1):
            grid = _pow2(-f_acc)
            views = [t.interval.floor_to(grid) if t.signal.fmt.f > f_acc else t.interval
                     for t in term_infos]
            ok = all(1 + _min_integer_bits(v, f_acc, 0) + f_acc <= w_acc for v in views)
            if ok:
                run = views[0] if chain.terms[0][1] > 0 else -views[0]
                prefixes = [run]
                for (tid, sign), v in zip(chain.terms[1:], views[1:]):
                    run = run + (v if sign > 0 else -v)
                    if 1 + _min_integer_bits(run, f_acc, 0) + f_acc > w_acc:
                        ok = False
                        break
                    prefixes.append(run)
            if ok:
                plan = (f_acc, prefixes)
                break
        if plan is None:
            return False
        f_acc, prefixes = plan

        # one truncation per finer-grid term, no loss inside the accumulator
        refs = []
        for (tid, _sign), t in zip(chain.terms, term_infos):
            if t.signal.fmt.f > f_acc:
                spec = plan_truncate(t, 1 + _min_integer_bits(
                    t.interval.floor_to(_pow2(-f_acc)), f_acc, 0) + f_acc)
                assert spec is not None and spec.signal.fmt.f == f_acc
                qid = ctx.fresh(f"{ctx.alias[tid]}_q")
                ctx.emit(Node(qid, NodeKind.TRUNC, (ctx.alias[tid],),
                              amount=spec.drop_f, drop_msbs=spec.drop_msbs),
                         NodeInfo(spec.signal, spec.interval,
                                  t.err + spec.added_error, spec.eff),
                         wide=spec.signal.fmt.width > W)
                refs.append(qid)
            else:
                refs.append(ctx.alias[tid])

        running = refs[0]
        assert chain.terms[0][1] > 0, "chain cannot open with a negated term"
        for j, ((tid, sign), prefix) in enumerate(zip(chain.terms[1:], prefixes[1:]), 1):
            aid = chain.root if j == chain.n_terms - 1 else ctx.fresh(f"{chain.root}_acc{j}")
            i_p = _min_integer_bits(prefix, f_acc, 0)
            sig = ScaledSignal(SifFormat(1, i_p, f_acc), 0)
            prev = ctx.info[running]
            term = ctx.info[refs[j]]
            ctx.emit(Node(aid, NodeKind.ADD, (running, refs[j]),
                          negate=(False, sign < 0)),
                     NodeInfo(sig, prefix, prev.err + term.err,
                              min(prev.eff, term.eff)),
                     wide=sig.fmt.width > W)
            running = aid

        result = ctx.info[running]
        if result.width > W:
            spec = plan_truncate(result, W)
            qid = ctx.fresh(f"{chain.root}_q")
            ctx.emit(Node(qid, NodeKind.TRUNC, (running,),
                          amount=spec.drop_f, drop_msbs=spec.drop_msbs),
                     NodeInfo(spec.signal, spec.interval,
                              result.err + spec.added_error, spec.eff))
            running = qid
        ctx.alias[chain.root] = running
        ctx.accumulators.append(AccumulatorInfo(chain.root, w_acc, f_acc, chain.n_terms))
        return True

    # whole-graph entry points

    def finish(self, ctx: _Ctx) -> Plan:
        return Plan(graph=Dfg(tuple(ctx.nodes)),
                    info=dict(ctx.info),
                    const_raws=dict(ctx.const_raws),
                    bindings=self.bindings,
                    source=self.source,
                    config=self.config,
                    choices=tuple(ctx.choices),
                    wide_ids=frozenset(ctx.wide),
                    accumulators=tuple(ctx.accumulators),
                    topology=self.topology)

    def build(self, choices: dict[str, int] | None = None) -> Plan:
        choices = choices or {}
        ctx = self.new_ctx()
        for nid in self.positions:
            self.step(ctx, nid, choices.get(nid, 0))
        return self.finish(ctx)


def check_plan(plan: Plan):
    """Assert the analysis invariants of a finished plan.

    Raises AssertionError on: a value interval escaping its format range
    (overflow risk), a persisted signal wider than the word width, addition
    operands on unequal grids, a negative scale exponent, or an error bound
    decreasing along an edge.
    """
    W = plan.config.width
    acc_widths = {a.root: a.width for a in plan.accumulators}
    max_acc = max(acc_widths.values(), default=W)
    for node in plan.graph.nodes:
        info = plan.info[node.id]
        rng = info.semantic_range()
        assert rng.lo <= info.interval.lo and info.interval.hi <= rng.hi, \
            f"interval of '{node.id}' escapes its format"
        assert info.signal.scale >= 0, f"negative scale at '{node.id}'"
        assert info.err >= 0
        if node.kind is NodeKind.MUL:
            assert info.width <= 2 * W, f"product '{node.id}' beyond 2W bits"
        elif node.id in plan.wide_ids:
            assert info.width <= max_acc, f"wide node '{node.id}' beyond accumulator width"
        else:
            assert info.width <= W, f"node '{node.id}' is {info.width} bits, W={W}"
        if node.kind is NodeKind.ADD:
            a, b = (plan.info[op] for op in node.operands)
            assert a.signal.grid == b.signal.grid, f"unaligned add '{node.id}'"
        for op in node.operands:
            assert plan.info[op].err <= info.err + Fraction(0), \
                f"error bound shrank from '{op}' to '{node.id}'"
