"""Parsing the .fps dataflow DSL into a graph.

The frontend turns declarations and multiply-add expressions into a DAG of
input/const/mul/add nodes, preserving the source's parenthesization exactly;
re-association is the optimizer's job, not the parser's.
"""

from pathlib import Path

from fpsynt import parse_spec, pretty_print, topo_order, validate_formats

src = (Path(__file__).parent / "specs" / "fir4.fps").read_text()
dfg, bindings = parse_spec(src)

print("inputs: ", dict(bindings.inputs))
print("consts: ", {k: str(v) for k, v in bindings.consts.items()})
print("outputs:", bindings.outputs)
print()

for nid in topo_order(dfg):
    node = dfg.node(nid)
    ops = f" <- {', '.join(node.operands)}" if node.operands else ""
    print(f"  {nid:4s} {node.kind.value}{ops}")

print("\nformat diagnostics at width 16:", validate_formats(bindings, 16) or "none")
print("\nround-tripped source:\n")
print(pretty_print(dfg, bindings))
