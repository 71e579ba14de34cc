#!/usr/bin/env python3
"""Smoke test for the triobs_py bindings.

Imports an installed module when available, otherwise loads the cdylib
straight out of the cargo target directory:

    cargo build --release -p triobs-py
    python3 python/smoke_test.py
"""

import math
import pathlib
import shutil
import sys


def load_module():
    try:
        import triobs_py  # noqa: F401
        return triobs_py
    except ImportError:
        pass
    root = pathlib.Path(__file__).resolve().parents[1]
    for profile in ("release", "debug"):
        for stem in ("libtriobs_py.so", "libtriobs_py.dylib", "triobs_py.dll"):
            built = root / "target" / profile / stem
            if built.exists():
                shim = root / "target" / "pyshim"
                shim.mkdir(exist_ok=True)
                dest = shim / ("triobs_py" + (".pyd" if stem.endswith(".dll") else ".so"))
                if not dest.exists() or built.stat().st_mtime > dest.stat().st_mtime:
                    shutil.copy2(built, dest)
                sys.path.insert(0, str(shim))
                import triobs_py
                return triobs_py
    sys.exit("bindings not built; run: cargo build --release -p triobs-py")


t = load_module()
checks = 0


def ok(cond, what):
    global checks
    if not cond:
        sys.exit(f"FAILED: {what}")
    checks += 1


# Scalar numerics.
ok(t.signed_power(-8.0, 1.0 / 3.0) == -2.0, "signed power cube root")
ok(t.signed_power(0.0, 0.5) == 0.0, "signed power at zero")
a, b, c = 2.37, 0.8, 1.7
ok(
    abs(t.signed_power(t.signed_power(a, b), c) - t.signed_power(a, b * c)) < 1e-12,
    "signed power composition",
)
ok(t.sign_select(0.0) == 0.0, "default sign selection at zero")
ok(t.sign_select(0.0, rule="upper-select") == 1.0, "upper selection at zero")
ok(t.sign_select(-3.0, rule="lower-select") == -1.0, "sign away from zero")
ok(t.saturate(7.0, 2.5) == 2.5, "saturation clamps")

# Weights and dilation homogeneity.
w = t.weights(4, -1.0)
ok(w == [4.0, 3.0, 2.0, 1.0, 0.0], "finite-time weight ladder")
e = [0.3, -1.2, 0.7, 0.4]
scaled = t.dilation(e, 2.0, w)
ok(abs(scaled[0] - 0.3 * 16.0) < 1e-15, "dilation scales by lam^r")

params = t.LyapunovParams(4, -1.0, 8.0, [2.2, 1.7, 1.4])
v = params.eval_v(e)
v2 = params.eval_v(t.dilation(e, 2.0, w))
ok(abs(v2 - 2.0**8 * v) <= 1e-10 * abs(v2), "Lyapunov degree-8 homogeneity")

# Gradient vs a central difference in one coordinate.
h = 1e-6
ep, em = list(e), list(e)
ep[1] += h
em[1] -= h
fd = (params.eval_v(ep) - params.eval_v(em)) / (2.0 * h)
g = params.grad_v(e)
ok(abs(fd - g[1]) <= 1e-5 * max(1.0, abs(g[1])), "gradient matches finite differences")
ok(abs(t.eval_v(params, e) - v) == 0.0, "module-level eval matches method")

# Benchmark immersion round trip away from the degenerate sets.
x = [1.0, -0.7, 0.8]
z = t.h4(x)
back = t.h4_inverse(z)
ok(max(abs(p - q) for p, q in zip(back, x)) < 1e-9, "immersion round trip")
try:
    t.h4_inverse([0.0, 0.0, 1.0, 1.0])
    sys.exit("FAILED: singular inverse should raise")
except ValueError:
    checks += 1

mag = abs(t.phi3(2.0, 0.6, -0.1))
ok(
    abs(mag - 5.0 * 2.0 * abs(-0.1 + 0.6) ** 0.8 * 0.6**0.2) < 1e-12,
    "third-line nonlinearity magnitude",
)
ok(t.example_dynamics([1.0, 0.0, 0.0], 2.0) == [0.0, -1.0, 2.0], "oscillator dynamics")
ok(t.default_highgain_k(4) == [4.0, 6.0, 4.0, 1.0], "binomial correction row")

# Gain design and certification.
designed, cert = t.design_gains(2, -1.0, samples=5000)
ok(cert["lambda"] > 0.0, "designed decrease rate positive")
fresh = t.verify_decrease(designed, samples=5000, seed=123)
ok(fresh["lambda"] > 0.9 * cert["lambda"], "fresh verification holds the rate")
try:
    t.design_gains(4, -1.0, d_v=6.0)
    sys.exit("FAILED: degree below threshold should raise")
except ValueError:
    checks += 1

# Comparison system: zero exactly at the finite hitting time.
ok(t.comparison_decay(1.0, 2.0, 1.0, 2.0, -1.0) == 0.0, "finite-time comparison hit")
ok(t.comparison_decay(1.0, 1.9, 1.0, 2.0, -1.0) > 0.0, "positive before the hit")

# Seeded noise is reproducible.
n1 = t.gen_noise(1000, 1e-3, seed=5)
n2 = t.gen_noise(1000, 1e-3, seed=5)
ok(n1 == n2, "noise reproducibility")
ok(max(abs(v) for v in n1) > 0.0, "noise is not degenerate")

# A short preset run end to end.
res = t.run_preset("table4", dt=1e-3, t_final=0.5, no_noise=True)
obs = res["observers"][0]
ok(len(res["times"]) == len(obs["errors"]), "aligned recording")
ok(all(math.isfinite(v) for v in obs["final_errors"]), "finite tail errors")
ok(obs["peaking"] > 0.0, "peaking recorded")
ok(obs["diverged_at"] is None, "no divergence on the short run")

print(f"all {checks} smoke checks passed")
