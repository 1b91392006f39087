#!/usr/bin/env python3
"""Tour of the trigonometric dictionary: geometry, norms, fast inner products.

Run:  python demos/dictionary_tour.py
"""

import time

import numpy as np

from tdcodec import TrigDictionary


def main():
    nb = 1024
    d = TrigDictionary(nb)   # half_size defaults to 2 * nb
    print(f"block size      : {d.block_size}")
    print(f"atoms           : {d.num_atoms} "
          f"({d.half_size} cosine + {d.half_size} sine)")
    print(f"redundancy      : {d.redundancy:.1f} atoms per dimension")

    # every atom is unit norm; the first cosine atom is the constant vector
    sample = np.arange(1, d.num_atoms + 1, 97)
    norms = np.linalg.norm(d.atoms_matrix(sample), axis=1)
    print(f"norm spread     : {norms.min():.12f} .. {norms.max():.12f}")
    print(f"atom(1)[0]      : {d.atom(1)[0]:.6f}  (= 1/sqrt({nb}))")

    # one zero-padded FFT answers "how much of each atom is in this block?"
    rng = np.random.default_rng(0)
    y = rng.normal(size=nb)
    panel = d.all_inner_products(y)
    top = np.argsort(-np.abs(panel))[:5]
    print("strongest atoms :", ", ".join(f"{n + 1} ({panel[n]:+.3f})" for n in top))

    atoms = d.atoms_matrix(np.arange(1, d.num_atoms + 1))
    direct = atoms @ y
    print(f"fft vs direct   : max abs diff {np.abs(panel - direct).max():.2e}")

    reps = 50
    t0 = time.perf_counter()
    for _ in range(reps):
        d.all_inner_products(y)
    fft_t = (time.perf_counter() - t0) / reps
    t0 = time.perf_counter()
    for _ in range(reps):
        atoms @ y
    mat_t = (time.perf_counter() - t0) / reps
    print(f"speed           : fft {fft_t * 1e6:.0f} us vs "
          f"matrix {mat_t * 1e6:.0f} us  ({mat_t / fft_t:.1f}x)")


if __name__ == "__main__":
    main()
