"""Emitting C and VHDL from a plan.

The C function computes the output raw word from input raw words with
integer multiplies and arithmetic shifts; the VHDL architecture declares one
signed vector per node at its exact width. Both carry the per-node format
table in their header comment.
"""

from pathlib import Path

from fpsynt import emit_c, emit_vhdl, synthesize

src = (Path(__file__).parent / "specs" / "fir4.fps").read_text()
plan = synthesize(src)

c = emit_c(plan, name="fir4")
print(f"== {c.suggested_name} ==")
print(c.source)

vhdl = emit_vhdl(plan, name="fir4")
print(f"== {vhdl.suggested_name} ==")
print(vhdl.source)
