"""Emitted C/VHDL: constants, shape, determinism, differential equivalence."""

import re
import shutil
import subprocess
from fractions import Fraction
from pathlib import Path

import pytest

from fpsynt.codegen import (emit_c, emit_vhdl, extract_c_expression,
                            interpret_c_expression, quantize_const)
from fpsynt.config import Config
from fpsynt.errors import CannotFitError
from fpsynt.pipeline import synthesize
from fpsynt.simulator import TestVector as Vec
from fpsynt.simulator import run_fixed

from conftest import FIR4_SRC

TWO_TAP_SRC = ("input x0 : sif(1/0/7);\ninput x1 : sif(1/0/7);\n"
               "const w0 = 0.3;\nconst w1 = 0.6;\n"
               "output y = w0*x0 + w1*x1;\n")


def test_quantize_const_reference_values():
    assert quantize_const(Fraction(15, 100), 25) == 5033165
    assert quantize_const(Fraction(5, 100), 28) == 13421773
    assert quantize_const(Fraction(1, 2), 4) == 8
    assert quantize_const(Fraction(-15, 100), 25) == -5033165


def test_quantize_const_magnitude_check():
    with pytest.raises(CannotFitError):
        quantize_const(Fraction(3), 15, width=16)
    assert quantize_const(Fraction(3), 15, width=32) == 3 << 15


def test_emitted_constants_match_quantize_const():
    plan = synthesize(FIR4_SRC)
    for name, value in plan.bindings.consts.items():
        f = plan.info[name].signal.fmt.f
        assert plan.const_raws[name] == quantize_const(value, f)


def test_c_contains_coefficients_and_only_mul_add_shift():
    plan = synthesize(FIR4_SRC)
    art = emit_c(plan, "fir4")
    for literal in ("4915", "1638", "14746", "11469"):
        assert literal in art.source
    expr = extract_c_expression(art.source, "fps_y")
    assert re.fullmatch(r"[\sA-Za-z0-9_()*+<>]*", expr), expr
    assert "/" not in expr and "%" not in expr and "-" not in expr


def test_c_passthrough_has_no_arithmetic():
    plan = synthesize("input x : sif(1/0/15);\noutput y = x;\n")
    expr = extract_c_expression(emit_c(plan, "p").source, "fps_y")
    assert expr == "x"


def test_c_header_documents_every_node():
    plan = synthesize(FIR4_SRC)
    src = emit_c(plan, "fir4").source
    for node in plan.graph.nodes:
        fmt = plan.info[node.id].signal.fmt
        assert f"-- {node.id}: SIF({fmt.s}/{fmt.i}/{fmt.f})" in src


def test_c_determinism():
    a = emit_c(synthesize(FIR4_SRC), "fir4")
    b = emit_c(synthesize(FIR4_SRC), "fir4")
    assert a.source == b.source


def test_c_keyword_inputs_are_renamed():
    plan = synthesize("input int : sif(1/0/7);\noutput y = int;\n")
    src = emit_c(plan, "kw").source
    assert "int32_t int_" in src


def _compile_and_run_c(tmp_path: Path, c_source: str, func: str, pairs):
    """Compile the emitted function plus a looping harness, return outputs."""
    cc = shutil.which("cc") or shutil.which("gcc")
    assert cc is not None
    (tmp_path / "dut.c").write_text(c_source)
    harness = f"""
#include <stdint.h>
#include <stdio.h>
extern int32_t {func}(int32_t x0, int32_t x1);
int main(void) {{
    int a, b;
    for (a = -128; a <= 127; a++)
        for (b = -128; b <= 127; b++)
            printf("%d\\n", (int){func}((int32_t)a, (int32_t)b));
    return 0;
}}
"""
    (tmp_path / "main.c").write_text(harness)
    exe = tmp_path / "dut"
    subprocess.run([cc, "-O1", "-o", str(exe), str(tmp_path / "dut.c"),
                    str(tmp_path / "main.c")], check=True)
    out = subprocess.run([str(exe)], capture_output=True, text=True, check=True)
    return [int(line) for line in out.stdout.split()]


def test_c_differential_exhaustive_two_tap(tmp_path):
    plan = synthesize(TWO_TAP_SRC, Config(width=8))
    art = emit_c(plan, "twotap")
    got = _compile_and_run_c(tmp_path, art.source, "fps_y",
                             [(a, b) for a in range(-128, 128) for b in range(-128, 128)])
    k = 0
    for a in range(-128, 128):
        for b in range(-128, 128):
            expected = run_fixed(plan, Vec((a, b)))["y"][0]
            assert got[k] == expected, (a, b)
            k += 1


@pytest.mark.parametrize("portable", [False, True])
def test_c_interpreter_matches_simulator(portable):
    plan = synthesize(TWO_TAP_SRC, Config(width=8))
    art = emit_c(plan, "twotap", portable_shift=portable)
    expr = extract_c_expression(art.source, "fps_y")
    for a in range(-128, 128, 11):
        for b in range(-128, 128, 7):
            sim = run_fixed(plan, Vec((a, b)))["y"][0]
            assert interpret_c_expression(expr, {"x0": a, "x1": b}) == sim


def test_portable_shift_compiles_and_matches(tmp_path):
    plan = synthesize(TWO_TAP_SRC, Config(width=8))
    art = emit_c(plan, "twotap", portable_shift=True)
    assert "fps_shr" in art.source
    got = _compile_and_run_c(tmp_path, art.source, "fps_y", None)
    k = 0
    for a in range(-128, 128):
        for b in range(-128, 128):
            assert got[k] == run_fixed(plan, Vec((a, b)))["y"][0]
            k += 1


def test_c_uses_wider_type_for_wide_plans():
    plan = synthesize(FIR4_SRC, Config(width=32))
    src = emit_c(plan, "wide").source
    assert "int64_t" in src and "LL" in src


def test_c_differential_randomized_fir4_w16(tmp_path):
    import random
    plan = synthesize(FIR4_SRC)
    art = emit_c(plan, "fir4")
    rng = random.Random(99)
    vectors = [tuple(rng.randint(-(1 << 15), (1 << 15) - 1) for _ in range(4))
               for _ in range(500)]
    cc = shutil.which("cc") or shutil.which("gcc")
    assert cc is not None
    rows = ",\n".join("{%d, %d, %d, %d}" % v for v in vectors)
    harness = f"""
#include <stdint.h>
#include <stdio.h>
extern int32_t fps_y(int32_t, int32_t, int32_t, int32_t);
static const int32_t vecs[][4] = {{{rows}}};
int main(void) {{
    unsigned k;
    for (k = 0; k < {len(vectors)}; k++)
        printf("%d\\n", (int)fps_y(vecs[k][0], vecs[k][1], vecs[k][2], vecs[k][3]));
    return 0;
}}
"""
    (tmp_path / "dut.c").write_text(art.source)
    (tmp_path / "main.c").write_text(harness)
    exe = tmp_path / "dut"
    subprocess.run([cc, "-O1", "-o", str(exe), str(tmp_path / "dut.c"),
                    str(tmp_path / "main.c")], check=True)
    out = subprocess.run([str(exe)], capture_output=True, text=True, check=True)
    got = [int(x) for x in out.stdout.split()]
    want = [run_fixed(plan, Vec(v))["y"][0] for v in vectors]
    assert got == want


# ---------------------------------------------------------------------------
# VHDL


def test_vhdl_fir4_structure():
    plan = synthesize(FIR4_SRC)
    src = emit_vhdl(plan, "fir4").source
    assert "toSIF" not in src
    consts = re.findall(r"^\s*(\w+) <= to_signed", src, re.MULTILINE)
    assert consts == ["w0", "w1", "w2", "w3"]
    assert src.index("--Constants") < src.index("--Multipliers") < src.index("--Adders")
    mults = re.findall(r"^\s*(\w+) <= \w+ \* \w+;", src, re.MULTILINE)
    assert len(mults) == 4
    adds = re.findall(r"<= resize\(\w+, \d+\) \+ resize\(\w+, \d+\);", src)
    assert len(adds) == 3


def test_vhdl_signal_widths_match_plan():
    plan = synthesize(FIR4_SRC)
    src = emit_vhdl(plan, "fir4").source
    decls = dict(re.findall(r"signal (\w+) : signed\((\d+) downto 0\);", src))
    for node in plan.graph.nodes:
        if node.id in decls:
            assert int(decls[node.id]) == plan.info[node.id].width - 1
    # ports carry the declared input widths and the output width
    for name in plan.bindings.inputs:
        assert f"{name} : in  signed({plan.info[name].width - 1} downto 0)" in src
    assert f"y : out signed({plan.info['y'].width - 1} downto 0)" in src


def test_vhdl_passthrough_single_assignment():
    plan = synthesize("input x : sif(1/0/15);\noutput y = x;\n")
    src = emit_vhdl(plan, "p").source
    body = src[src.index("begin"):]
    assert body.count("<=") == 1
    assert "y <= x;" in body


def test_vhdl_determinism():
    a = emit_vhdl(synthesize(FIR4_SRC), "fir4")
    b = emit_vhdl(synthesize(FIR4_SRC), "fir4")
    assert a.source == b.source


def test_vhdl_subtraction():
    plan = synthesize("input a : sif(1/0/7);\ninput b : sif(1/0/7);\n"
                      "output y = a - b;\n", Config(width=8))
    src = emit_vhdl(plan, "s").source
    assert re.search(r"<= resize\(\w+, \d+\) - resize\(\w+, \d+\);", src)


@pytest.mark.skipif(shutil.which("ghdl") is None, reason="no VHDL analyzer available")
def test_vhdl_analyzes_clean(tmp_path):
    plan = synthesize(FIR4_SRC)
    art = emit_vhdl(plan, "fir4")
    path = tmp_path / art.suggested_name
    path.write_text(art.source)
    subprocess.run(["ghdl", "-a", "--std=08", str(path)], check=True)
