"""Walk the graded construction of the resonant normal form.

Computes the order-2 normal form on a small mode cutoff, prints the exact
rational coefficient tables stage by stage, and checks the homological
cancellations that define them.
"""

from fractions import Fraction

from stringnf.nf_engine import (
    chi3_explicit,
    commutator,
    quintic_rational_solve,
    resonant_normal_form,
    taylor_vf,
    z1_field,
)

N = 6


def show(label, vf, limit=4):
    print(f"  {label}: {len(vf.terms)} terms, orders {sorted(vf.orders())}")
    for key, c in sorted(vf.terms.items())[:limit]:
        a, kind, j = key[0], key[1], key[2]
        print(f"    mode {a:+d}  {kind:<4}  j={j}  coeff {c}")
    if len(vf.terms) > limit:
        print(f"    ... {len(vf.terms) - limit} more")


def main():
    print(f"resonant normal form, order 2, cutoff N={N}")
    nf = resonant_normal_form(2, N)

    print("\ncubic stage")
    show("taylor cubic term", taylor_vf(1, N))
    show("resonant remainder Z3", nf.z3)
    chi3 = chi3_explicit(N)
    show("generator chi3", chi3)
    res = commutator(z1_field(N), chi3) + taylor_vf(1, N) - nf.z3
    print(f"  homological residual is_zero: {res.is_zero()}")

    print("\nquintic stage")
    show("integrable part Z5", nf.z5)
    show("non-integrable part K5", nf.k5)
    full = nf.resonant_quintic
    print(f"  resonant quintic total: {len(full.terms)} terms")

    print("\nrational continuation of K5")
    s_gen, m_gen = quintic_rational_solve(nf.k5, N)
    print(f"  S generator: {len(s_gen.terms)} terms")
    print(f"  M generator: {len(m_gen.terms)} terms")
    peak = max(abs(c.re) + abs(c.im) for c in nf.k5.terms.values())
    print(f"  largest |K5| coefficient: {peak} = {float(peak):.6f}")
    print(f"\nskipped degrees start at {nf.min_skipped_degree}")


if __name__ == "__main__":
    main()
