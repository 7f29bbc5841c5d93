"""Shared specs and independent oracles.

The oracles here deliberately avoid the library's own evaluation paths:
exact_eval walks the parsed tree with plain Fraction arithmetic and
interval_eval propagates bounds the brute-force way, so tests compare two
independently written computations.
"""

from fractions import Fraction

import pytest

from fpsynt.core import NodeKind
from fpsynt.parser import parse_spec

FIR4_SRC = """\
# 4-tap FIR filter
input x0 : sif(1/0/15);
input x1 : sif(1/0/15);
input x2 : sif(1/0/15);
input x3 : sif(1/0/15);
const w0 = 0.15;
const w1 = 0.05;
const w2 = 0.45;
const w3 = 0.35;
output y = w0*x0 + w1*x1 + w2*x2 + w3*x3;
"""

FIR4_COEFFS = [Fraction(k, 100) for k in (15, 5, 45, 35)]


def make_fir_src(coeffs, sif=(1, 0, 15)) -> str:
    s, i, f = sif
    lines = [f"input x{k} : sif({s}/{i}/{f});" for k in range(len(coeffs))]
    lines += [f"const w{k} = {c};" for k, c in enumerate(coeffs)]
    expr = " + ".join(f"w{k}*x{k}" for k in range(len(coeffs)))
    lines.append(f"output y = {expr};")
    return "\n".join(lines) + "\n"


def exact_eval(dfg, bindings, values: dict) -> dict:
    """Independent exact evaluation of a source graph on given input values.

    Constants are taken at their declared (unquantized) values.
    """
    memo: dict[str, Fraction] = {}

    def ev(nid: str) -> Fraction:
        if nid in memo:
            return memo[nid]
        node = dfg.node(nid)
        if node.kind is NodeKind.INPUT:
            v = Fraction(values[nid])
        elif node.kind is NodeKind.CONST:
            v = node.value
        elif node.kind is NodeKind.MUL:
            v = ev(node.operands[0]) * ev(node.operands[1])
        elif node.kind is NodeKind.ADD:
            a = ev(node.operands[0])
            b = ev(node.operands[1])
            v = (-a if node.negate[0] else a) + (-b if node.negate[1] else b)
        elif node.kind is NodeKind.OUTPUT:
            v = ev(node.operands[0])
        else:
            raise AssertionError(node.kind)
        memo[nid] = v
        return v

    return {o: ev(o) for o in dfg.output_ids}


def interval_eval(dfg, bindings, input_ranges: dict, const_values: dict) -> dict:
    """Independent interval propagation over a source graph.

    input_ranges maps input name -> (lo, hi); const_values gives the value
    each constant actually takes in the datapath.
    """
    memo: dict[str, tuple] = {}

    def ev(nid: str):
        if nid in memo:
            return memo[nid]
        node = dfg.node(nid)
        if node.kind is NodeKind.INPUT:
            r = input_ranges[nid]
        elif node.kind is NodeKind.CONST:
            c = const_values.get(nid, node.value)
            r = (c, c)
        elif node.kind is NodeKind.MUL:
            (alo, ahi), (blo, bhi) = ev(node.operands[0]), ev(node.operands[1])
            prods = [alo * blo, alo * bhi, ahi * blo, ahi * bhi]
            r = (min(prods), max(prods))
        elif node.kind is NodeKind.ADD:
            (alo, ahi), (blo, bhi) = ev(node.operands[0]), ev(node.operands[1])
            if node.negate[0]:
                alo, ahi = -ahi, -alo
            if node.negate[1]:
                blo, bhi = -bhi, -blo
            r = (alo + blo, ahi + bhi)
        elif node.kind is NodeKind.OUTPUT:
            r = ev(node.operands[0])
        else:
            raise AssertionError(node.kind)
        memo[nid] = r
        return r

    return {o: ev(o) for o in dfg.output_ids}


@pytest.fixture
def fir4():
    return parse_spec(FIR4_SRC)
