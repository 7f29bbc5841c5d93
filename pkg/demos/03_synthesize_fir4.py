"""Full synthesis of the 4-tap FIR filter at a 16-bit word width.

The planner assigns every node a SIF format and scale, inserts the
overflow-preventing truncations and pre-scales, and bounds the worst-case
output error. The summary table mirrors what `fpsynt synth` prints.
"""

from pathlib import Path

from fpsynt import Config, summary_table, synthesize

src = (Path(__file__).parent / "specs" / "fir4.fps").read_text()

plan = synthesize(src, Config(width=16))
print(summary_table(plan))
print(f"chosen topology: {plan.topology}")
print(f"formatting nodes inserted: {plan.n_format_nodes}")

# the same filter on an 8-bit datapath (inputs re-declared to fit):
# coarser grids, a bound three decades worse
src8 = src.replace("sif(1/0/15)", "sif(1/0/7)")
plan8 = synthesize(src8, Config(width=8))
print(f"\nat width 8 the bound grows to {float(plan8.cost):.3e} "
      f"(was {float(plan.cost):.3e} at width 16)")
