#!/usr/bin/env python3
"""Regenerate the unit fixture files in data/units/ with PARI/GP (cypari2).

For each m the unit group of Q(beta), beta a root of x^10 + 11 m x^5 - m^2,
is computed with bnfinit and certified with bnfcertify. Units are written in
the power basis of beta with rational coefficients c0..c9.
"""
import sys
from pathlib import Path

import cypari2

pari = cypari2.Pari()
pari.allocatemem(2 * 10**9)

MS = [2, 3, 5, 6, 10, 11, 13, 14, 15, 17]


def coeffs(unit, g):
    lifted = pari.lift(unit)
    return [pari.polcoef(lifted, k) for k in range(10)]


def main(out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for m in MS:
        g = pari(f"x^10 + 11*{m}*x^5 - {m}^2")
        bnf = pari.bnfinit(g, 1)
        if pari.bnfcertify(bnf) != 1:
            raise SystemExit(f"m={m}: bnfcertify failed")
        lines = [
            "# quintic-pib-units v1",
            f"# fundamental units of Q(b), b^10 + {11 * m}*b^5 - {m * m} = 0",
            f"# class number {bnf.bnf_get_no()}, certified with bnfcertify",
            f"m {m}",
        ]
        for u in bnf.bnf_get_fu():
            lines.append(" ".join(str(c) for c in coeffs(u, g)))
        (out / f"m{m}.units").write_text("\n".join(lines) + "\n")
        print(f"m={m}: wrote {out / f'm{m}.units'}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/units")
