"""Search over formatting choices and graph topologies.

Three passes, outermost first:

  * topology enumeration: every maximal addition chain is re-associated into
    all binary-tree shapes (Catalan(n-1) of them) up to a term limit, longer
    chains trying only the balanced tree besides the source shape;
  * chain allocation: a chain may instead accumulate in a single widened
    register of width W + ceil(log2 n) with no intra-chain loss and one
    final truncation;
  * combinatorial search: depth-first over per-node formatting candidates
    (extra product truncation, extra pre-scaling) with branch-and-bound
    pruning, admissible because accumulated bounds never decrease along a
    path.

The best plan is the one with the smallest predicted output bound; ties fall
to fewer inserted formatting nodes, then to the earlier candidate in the
deterministic enumeration order.
"""

from __future__ import annotations

import logging

from .analysis import Chain, Plan, PlanBuilder, find_chains
from .config import Config
from .core import Dfg, Node, NodeKind
from .errors import CannotFitError
from .parser import Bindings

log = logging.getLogger("fpsynt.optimizer")

_MAX_TOPOLOGY_PRODUCT = 1024


def combinatorial_search(dfg: Dfg, bindings: Bindings, config: Config,
                         chain_roots: frozenset[str] = frozenset(),
                         topology: str = "source",
                         prune: bool = True, source: Dfg | None = None) -> Plan:
    """Minimize the output error bound over all per-node formatting choices.

    Depth-first over nodes in topological order; candidate k at a node means
    k extra grid-coarsening steps beyond the mandatory minimum. A branch is
    pruned as soon as its accumulated error already matches or exceeds the
    best complete plan (with ``prune=False`` the full tree is walked, for
    oracle comparisons). The first plan found at the minimum cost wins, which
    is the lexicographically smallest choice vector.
    """
    builder = PlanBuilder(dfg, bindings, config, chain_roots, topology, source)
    best: Plan | None = None
    best_key = None
    last_fail: list[str] = [""]
    positions = builder.positions

    def rec(pos: int, ctx):
        nonlocal best, best_key
        if pos == len(positions):
            plan = builder.finish(ctx)
            key = plan.cost_key
            if best_key is None or key < best_key:
                best, best_key = plan, key
            return
        nid = positions[pos]
        if builder.is_choice_point(nid):
            for cand in builder.candidates():
                branch = ctx.clone()
                try:
                    builder.step(branch, nid, cand)
                except CannotFitError as e:
                    last_fail[0] = str(e)
                    continue
                if prune and best_key is not None and (branch.live_err, branch.live_err) >= best_key:
                    # added error grows with the candidate, so the rest of
                    # the row cannot beat the incumbent either
                    break
                rec(pos + 1, branch)
        else:
            try:
                builder.step(ctx, nid, 0)
            except CannotFitError as e:
                last_fail[0] = str(e)
                return
            rec(pos + 1, ctx)

    rec(0, builder.new_ctx())
    if best is None:
        detail = f": {last_fail[0]}" if last_fail[0] else ""
        raise CannotFitError(f"no formatting choice fits the word width{detail}")
    return best


# ---------------------------------------------------------------------------
# topology enumeration


def _all_shapes(lo: int, hi: int):
    """Every binary tree over the ordered leaves lo..hi-1."""
    if hi - lo == 1:
        yield lo
        return
    for split in range(lo + 1, hi):
        for left in _all_shapes(lo, split):
            for right in _all_shapes(split, hi):
                yield (left, right)


def _balanced_shape(lo: int, hi: int):
    if hi - lo == 1:
        return lo
    mid = (lo + hi + 1) // 2
    return (_balanced_shape(lo, mid), _balanced_shape(mid, hi))


def _shapes_for_chain(chain: Chain, n_max: int):
    n = chain.n_terms
    shapes = [chain.shape]
    if n <= n_max:
        pool = _all_shapes(0, n)
    else:
        pool = [_balanced_shape(0, n)]
    for s in pool:
        if s not in shapes:
            shapes.append(s)
    return shapes


def _rebuild_chain(nodes: list[Node], chain: Chain, shape, used: set[str]) -> list[Node]:
    """Replace a chain's ADD nodes with the given tree shape over its terms."""
    drop = set(chain.members) | {chain.root}
    out = [n for n in nodes if n.id not in drop]
    counter = [0]

    def fresh() -> str:
        while True:
            name = f"{chain.root}_r{counter[0]}"
            counter[0] += 1
            if name not in used:
                used.add(name)
                return name

    def build(node_shape, top: bool):
        if isinstance(node_shape, int):
            term_id, sign = chain.terms[node_shape]
            return term_id, sign
        (la, sa), (lb, sb) = build(node_shape[0], False), build(node_shape[1], False)
        if sa > 0:
            negate, sign = (False, sb < 0), 1
        elif sb > 0:
            negate, sign = (True, False), 1
        else:
            negate, sign = (False, False), -1
        nid = chain.root if top else fresh()
        out.append(Node(nid, NodeKind.ADD, (la, lb), negate=negate))
        return nid, sign

    _, sign = build(shape, True)
    assert sign > 0, "a chain cannot be globally negative"
    return out


def enumerate_topologies(dfg: Dfg, n_max: int) -> list[tuple[str, Dfg]]:
    """All distinct re-associations of the graph's addition chains.

    The source topology always comes first. Chains with more than ``n_max``
    terms contribute only the source shape and the balanced tree; when the
    cross product over several chains grows past a safety cap the same
    reduction is applied to every chain.
    """
    chains = [c for c in find_chains(dfg) if c.n_terms >= 3]
    if not chains:
        return [("source", dfg)]

    shape_lists = [_shapes_for_chain(c, n_max) for c in chains]
    total = 1
    for lst in shape_lists:
        total *= len(lst)
    if total > _MAX_TOPOLOGY_PRODUCT:
        shape_lists = [[c.shape, _balanced_shape(0, c.n_terms)] for c in chains]

    combos = [((), ())]
    for chain, shapes in zip(chains, shape_lists):
        combos = [(labels + (f"{chain.root}:{k}",), picks + ((chain, s),))
                  for labels, picks in combos
                  for k, s in enumerate(shapes)]

    result = []
    for labels, picks in combos:
        nodes = list(dfg.nodes)
        used = {n.id for n in dfg.nodes}
        changed = False
        for chain, shape in picks:
            if shape != chain.shape:
                nodes = _rebuild_chain(nodes, chain, shape, used)
                changed = True
        label = "source" if not changed else ",".join(labels)
        result.append((label, Dfg(tuple(nodes)) if changed else dfg))
    return result


# ---------------------------------------------------------------------------
# composed passes


def chain_allocate(dfg: Dfg, bindings: Bindings, config: Config,
                   topology: str = "source", prune: bool = True) -> Plan:
    """Plan with every eligible addition chain on a widened accumulator."""
    roots = frozenset(c.root for c in find_chains(dfg))
    if not roots:
        return combinatorial_search(dfg, bindings, config, topology=topology, prune=prune)
    return combinatorial_search(dfg, bindings, config, chain_roots=roots,
                                topology=topology + "+chain", prune=prune)


def _baseline(dfg: Dfg, bindings: Bindings, config: Config,
              chain_roots: frozenset[str] = frozenset(), topology: str = "source",
              source: Dfg | None = None) -> Plan:
    return PlanBuilder(dfg, bindings, config, chain_roots, topology, source).build()


def topological_optimize(dfg: Dfg, bindings: Bindings, config: Config) -> Plan:
    """Run the full optimization stack and return the cheapest plan.

    Candidate plans: for every enumerated topology, the combinatorial search
    result (or the greedy baseline when the search is disabled), plus the
    chain-accumulator plan, whose bound does not depend on the chain's shape.
    Ranking: (max output bound, summed bounds, inserted formatting nodes,
    enumeration order).
    """
    if config.enable_topology_opt:
        topologies = enumerate_topologies(dfg, config.n_max_topologies)
    else:
        topologies = [("source", dfg)]

    candidates: list[Plan] = []
    errors: list[str] = []
    for label, topo in topologies:
        try:
            if config.enable_comb:
                candidates.append(combinatorial_search(topo, bindings, config,
                                                       topology=label, source=dfg))
            else:
                candidates.append(_baseline(topo, bindings, config, topology=label,
                                            source=dfg))
        except CannotFitError as e:
            errors.append(f"{label}: {e}")
    if config.enable_chain_alloc and find_chains(dfg):
        try:
            if config.enable_comb:
                candidates.append(chain_allocate(dfg, bindings, config))
            else:
                roots = frozenset(c.root for c in find_chains(dfg))
                candidates.append(_baseline(dfg, bindings, config, roots, "source+chain"))
        except CannotFitError as e:
            errors.append(f"chain: {e}")

    if not candidates:
        raise CannotFitError("; ".join(errors) or "no feasible plan")
    best = min(enumerate(candidates),
               key=lambda kv: (kv[1].cost_key, kv[1].n_format_nodes, kv[0]))
    return best[1]
