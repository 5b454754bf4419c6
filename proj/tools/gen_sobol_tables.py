#!/usr/bin/env python3
"""Regenerate src/sobol_tables.cpp from scipy's Joe-Kuo direction numbers.

The C++ Sobol generator consumes the primitive polynomials and initial
direction numbers for the first 64 dimensions.  scipy ships the Joe-Kuo D6
tables as a compressed archive; this script slices out the rows we need and
formats them as the checked-in translation unit, so the data provenance is
reproducible:

    python3 tools/gen_sobol_tables.py > src/sobol_tables.cpp
"""

import sys
from pathlib import Path

import numpy as np
import scipy.stats._sobol as sob

DIMS = 64
MAX_DEGREE = 18


def main() -> None:
    npz = np.load(Path(sob.__file__).parent / "_sobol_direction_numbers.npz")
    poly = npz["poly"][:DIMS].astype(np.uint32)
    vinit = npz["vinit"][:DIMS].astype(np.uint32)
    if vinit.shape[1] < MAX_DEGREE:
        raise SystemExit("scipy tables narrower than expected")

    out = sys.stdout
    out.write(
        "// Primitive polynomials and initial direction numbers for the first\n"
        "// 64 Sobol dimensions (Joe-Kuo D6 tables), 18 initial values per row.\n"
        "// Generated by tools/gen_sobol_tables.py; do not edit by hand.\n"
        '#include "adrsched/sobol_tables.hpp"\n'
        "\n"
        "namespace adr::detail {\n"
        "\n"
        "const std::uint32_t kSobolPoly[kSobolTableDims] = {\n"
    )
    for start in range(0, DIMS, 16):
        row = ", ".join(str(x) for x in poly[start : start + 16])
        out.write(f"    {row},\n")
    out.write(
        "};\n"
        "\n"
        "const std::uint32_t kSobolVinit[kSobolTableDims][kSobolMaxDegree] = {\n"
    )
    for d in range(DIMS):
        row = ", ".join(str(x) for x in vinit[d, :MAX_DEGREE])
        out.write(f"    {{{row}}},\n")
    out.write("};\n\n}  // namespace adr::detail\n")


if __name__ == "__main__":
    main()
