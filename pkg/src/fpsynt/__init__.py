"""fpsynt: automated synthesis of overflow-free fixed-point datapaths.

Compile a real-valued multiply-add dataflow description into a fixed-point
implementation with a minimized worst-case error bound, emit C and VHDL, and
validate the result bit-accurately against a floating-point reference.
"""

from .analysis import (AccumulatorInfo, Interval, NodeInfo, Plan, check_plan,
                       choose_const_format, find_chains, infer_product_format,
                       interval_of, mul_error_bound, plan_add, plan_truncate,
                       propagate_error)
from .codegen import EmittedArtifact, emit_c, emit_vhdl, quantize_const
from .config import Config
from .core import (Dfg, Node, NodeKind, Quantize, ScaledSignal, SifFormat,
                   decode, encode, sif_width, topo_order)
from .errors import (CannotFitError, CycleError, EmitError, FpsyntError,
                     InternalOverflowError, MalformedRawError, ParseError,
                     RangeError, SpecError, ValidationError, VectorError)
from .optimizer import (chain_allocate, combinatorial_search,
                        enumerate_topologies, topological_optimize)
from .parser import Bindings, parse_spec, pretty_print, validate_formats
from .pipeline import synthesize
from .report import build_report, report_json, summary_table
from .simulator import (ErrorStats, TestVector, VectorSet, compare,
                        generate_vectors, load_vectors_csv, run_fixed,
                        run_reference, save_vectors_csv)

__version__ = "0.1.0"
