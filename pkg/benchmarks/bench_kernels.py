"""Compare the compiled and pure-Python kernels.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``.  Prints the
best wall time of each backend, the speedup and the largest disagreement.
"""
import argparse
import math
import timeit

import numpy as np

from purcell_bpf import _kernels_py
from purcell_bpf.coupled_mode import STABILITY_LIMIT, build_filter_network
from purcell_bpf.prototype import synth_maximally_flat
from purcell_bpf.tline import realize

try:
    from purcell_bpf import _kernels as _compiled
except ImportError:
    _compiled = None

W0 = 2 * math.pi * 6e9
DW = 2 * math.pi * 600e6


def _integrate_case():
    # reference 6th-order 20 dB filter, excitation in stage 1, rotating frame at w0
    net = build_filter_network(synth_maximally_flat(6, 20.0), W0, DW)
    h = net.effective_hamiltonian() - W0 * np.eye(net.n_modes)
    m = -1j * h
    dt = STABILITY_LIMIT / np.max(np.abs(np.linalg.eigvals(h)))
    a0 = np.zeros(net.n_modes, dtype=complex)
    a0[0] = 1.0
    return (m, net.port_modes, net.port_kappas, a0, dt, 2000, 1e-10, 1e-13)


def _cascade_case():
    real = realize(synth_maximally_flat(6, 20.0), W0, DW)
    kinds, angles = real.elements()
    x = np.linspace(0.05, 3.0, 20001)
    return (kinds, angles, x, real.z0)


def _bench(name, fn, args, repeat):
    times = {}
    results = {}
    impls = [("python", getattr(_kernels_py, fn))]
    if _compiled is not None:
        impls.insert(0, ("cython", getattr(_compiled, fn)))
    for label, impl in impls:
        results[label] = impl(*args)
        times[label] = min(timeit.repeat(lambda: impl(*args), number=1, repeat=repeat))
    line = f"{name:18s}" + "".join(f"  {k} {v * 1e3:9.2f} ms" for k, v in times.items())
    if len(times) == 2:
        a, b = results["cython"], results["python"]
        a = a[0] if isinstance(a, tuple) else a
        b = b[0] if isinstance(b, tuple) else b
        err = float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))
        line += f"  speedup {times['python'] / times['cython']:6.1f}x  rel diff {err:.1e}"
    print(line)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    if _compiled is None:
        print("compiled extension not built; timing the pure-Python kernels only")
    _bench("integrate_linear", "integrate_linear", _integrate_case(), args.repeat)
    _bench("cascade_abcd", "cascade_abcd", _cascade_case(), args.repeat)


if __name__ == "__main__":
    main()
