"""Follow one string state through the full coordinate chain.

Starts from a plucked displacement/velocity pair, passes through the complex
mode amplitudes, the elastic dilation, and the final diagonal variables, then
walks back and reports the roundtrip error and the dilation invariant.
"""

import math

from stringnf.transforms import (
    UVState,
    elastic_energy,
    eta_to_psi,
    eta_to_z,
    psi_to_eta,
    psi_to_uv,
    uv_to_psi,
    z_to_eta,
    z_to_uv,
    uv_to_z,
)

M = 12


def main():
    # a pluck: displacement concentrated low, velocity in the middle band
    u = {a: 0.3 * (-1) ** a / a**2 for a in range(1, M + 1)}
    v = {4: 0.08, 5: -0.05}
    state = UVState(u, v, M)
    print(f"initial data on {M} modes")
    print(f"  |u|_inf = {max(abs(x) for x in u.values()):.4f}")

    psi = uv_to_psi(state)
    q = elastic_energy(psi.seq)
    print("\nmode amplitudes")
    print(f"  elastic energy Q(psi) = {q:.6f}")

    eta = psi_to_eta(psi)
    print("\ndilated amplitudes")
    print(f"  stored elastic value  = {eta.elastic:.6f}")
    ident = abs(eta.elastic - q * math.sqrt(1.0 + 2.0 * q))
    print(f"  dilation invariant |Q(eta) - Q(psi) sqrt(1 + 2 Q(psi))| = {ident:.2e}")

    z = eta_to_z(eta)
    print("\ndiagonal variables")
    print(f"  |z_1| = {abs(z.seq[1]):.6f}, |z_{M}| = {abs(z.seq[M]):.6f}")

    # walk home the long way and compare coefficient by coefficient
    back = psi_to_uv(eta_to_psi(z_to_eta(z)))
    worst = 0.0
    for a in range(1, M + 1):
        worst = max(
            worst,
            abs(back.u.get(a, 0.0) - state.u.get(a, 0.0)),
            abs(back.v.get(a, 0.0) - state.v.get(a, 0.0)),
        )
    print(f"\nroundtrip u,v -> psi -> eta -> z -> eta -> psi -> u,v")
    print(f"  worst coefficient error = {worst:.2e}")

    # the short composites agree with the long way
    short = z_to_uv(uv_to_z(state))
    agree = max(
        abs(short.u.get(a, 0.0) - back.u.get(a, 0.0)) for a in range(1, M + 1)
    )
    print(f"  composite maps agree to {agree:.2e}")


if __name__ == "__main__":
    main()
