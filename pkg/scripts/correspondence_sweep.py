#!/usr/bin/env python3
"""Sweep the classical-quantum correspondence with level number.

For a ladder of quantized actions J = n h, prints how far the quantum
band amplitudes and the second-order frequency shift sit from their
classical counterparts. The deficits shrink like 1/n, which is the whole
point of quantizing the classical orbit at integer action.

    python3 scripts/correspondence_sweep.py [--force 2|3] [--max-level 2000]
"""

import argparse

from ampmech import OscillatorParams, classical_solve, solve_perturbative


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--force", type=int, default=2, choices=(2, 3))
    ap.add_argument("--max-level", type=int, default=2000)
    args = ap.parse_args()

    params = OscillatorParams(force_exponent=args.force)
    levels = [n for n in (5, 10, 30, 100, 300, 1000, 3000) if n <= args.max_level]
    print(f"force exponent {args.force}, units m = omega0 = hbar = 1")
    # the frequency column compares the leading anharmonic shift, which for
    # the quartic force is first order in the coupling (second for the cubic)
    k_freq = 2 if args.force == 2 else 1
    header = (
        f"{'n':>6} {'|a1_q/a1_c - 1|':>16} {'|a_hi_q/a_hi_c - 1|':>20}"
        f" {'|w_q/w_c - 1|':>16}"
    )
    print(header)
    for n in levels:
        quantum = solve_perturbative(params, 2, n + 4)
        cl = classical_solve(params, 2, action=n * params.h)
        d1 = abs(quantum.a(0, 1)[n] / cl.amp[0, 1] - 1.0)
        hi = 2 if args.force == 2 else 3
        d2 = abs(quantum.a(0, hi)[n] / cl.amp[0, hi] - 1.0)
        dw = abs(quantum.omega_band(k_freq, 1)[n] / cl.omega_coeffs[k_freq] - 1.0)
        print(f"{n:>6} {d1:>16.3e} {d2:>20.3e} {dw:>16.3e}")


if __name__ == "__main__":
    main()
