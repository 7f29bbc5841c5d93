"""SIF fixed-point formats: encoding, decoding, and what the fields mean.

A SIF format splits a two's-complement word into Sign / Integer / Fraction
bit fields. (1/0/15) is the classic full-scale 16-bit sample format;
(2/2/4) is an 8-bit word with a redundant sign copy.
"""

from fractions import Fraction

from fpsynt import Quantize, ScaledSignal, SifFormat, decode, encode, sif_width

for fmt in (SifFormat(1, 0, 15), SifFormat(2, 3, 8), SifFormat(6, 3, 0)):
    print(f"{str(fmt):10s} width={sif_width(fmt):2d} bits  "
          f"range=[{float(fmt.min_value)}, {float(fmt.max_value)}]  "
          f"ulp=2^-{fmt.f}")

print()
fmt = SifFormat(2, 2, 4)
raw = 0b00111101
print(f"decode(0b00111101, {fmt}) = {float(decode(raw, fmt))}   # 0011.1101 -> 3 + 13/16")

v = Fraction("0.15")
fmt16 = SifFormat(1, 0, 15)
raw = encode(v, fmt16, Quantize.ROUND)
q = decode(raw, fmt16)
print(f"encode(0.15, {fmt16}) = {raw}  (decodes to {float(q):.10f}, "
      f"quantization error {float(abs(v - q)):.3e})")

# a scale exponent keeps the mathematical value recoverable after pre-scaling
sig = ScaledSignal(fmt16, scale=0)
shifted = ScaledSignal(fmt16, scale=1)
print(f"\nraw {raw} at E=0 means {float(sig.value_of(raw)):.6f}; "
      f"after one pre-scale shift raw {raw >> 1} at E=1 still means "
      f"{float(shifted.value_of(raw >> 1)):.6f}")
