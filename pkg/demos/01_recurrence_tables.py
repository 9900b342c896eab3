"""Void-probability sequences and their lower bounds.

Computes P_k, p_k and lambda_k for a few (d, mu), checks the monotonicity
properties, and shows how far P_k sits below exp(-gamma(k-1) - 2 log k).

    python demos/01_recurrence_tables.py
"""

import math

from froglab import recurrence as rec


def show(d: int, mu: float, n: int = 500) -> None:
    tables = rec.compute_tables(d, mu, n)
    gamma = mu / (d * (d + 1)) - 3
    mono = rec.verify_monotone(tables)
    inf = rec.check_inf_lambda(tables, gamma)
    print(f"d={d} mu={mu:g} gamma={gamma:.3f}")
    print(f"  monotone: {mono.passed}   lambda link error: {rec.lambda_link_error(tables):.1e}")
    print(f"  bounds hold: {inf.passed}   smallest log-margin {inf.margins['log_P_margin']:.3f}")
    print("     k     log P_k        p_k   lambda_k   log bound")
    for k in (1, 2, 3, 5, 10, 50, 200, 500):
        bound = -gamma * (k - 1) - 2 * math.log(k)
        print(f"  {k:4d}  {tables.log_P_at(k):10.2f}  {tables.p[k]:9.6f}  {tables.lam[k - 1]:9.4f}  {bound:10.2f}")
    print()


if __name__ == "__main__":
    show(2, 21)
    show(3, 45)
    show(5, 250)
    tables = rec.compute_tables(2, 21, 51)
    worst = max(rec.verify_appendix_b_chain(tables, n).margins["identity_rel_err"] for n in range(2, 51))
    print(f"weighted-average chain, n = 2..50: worst identity error {worst:.1e}")
