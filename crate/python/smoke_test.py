"""Smoke test for the tfse extension module.

Build and install first:  pip install ./crates/py   (or: maturin develop -m crates/py/Cargo.toml)
Then run:                 python python/smoke_test.py
"""

import math

import tfse


def check(cond, msg):
    if not cond:
        raise SystemExit(f"FAIL: {msg}")
    print(f"ok   {msg}")


check(abs(tfse.gamma(1.5) - math.sqrt(math.pi) / 2) < 1e-14, "gamma(1.5)")

k = tfse.L1Kernel(0.5, 1.0, 3)
check(abs(k.theta()[1] - 0.51913971359001578) < 1e-14, "theta_1 for alpha=0.5, tau=1")
u = [0.3, -1.0, 0.25, 2.0]
d = [0.0] + [k.apply(u[: n + 1]) for n in range(1, 4)]
check(abs(k.apply_theta(d) - (u[3] - u[0])) < 1e-13, "theta inverts the L1 operator")

m, h, sigma = 8, 1.0 / 8, 2.0 + 5.0j
rhs = [complex(j % 3, -(j % 5)) for j in range((m - 1) ** 2)]
fast = tfse.solve_shifted_laplacian(sigma, m, h, rhs, "dst")
dense = tfse.solve_shifted_laplacian(sigma, m, h, rhs, "dense")
check(max(abs(a - b) for a, b in zip(fast, dense)) < 1e-11, "dst and dense solvers agree")
back = [sigma * x + y for x, y in zip(fast, tfse.laplacian_5pt(m, h, fast))]
check(max(abs(a - b) for a, b in zip(back, rhs)) < 1e-10, "solution satisfies the system")

mesh = tfse.Mesh(0.5, 8, 64)
hist = tfse.run(1, mesh)
check(len(hist) == 65 and len(hist.last()) == 49, "run stores N+1 levels")
r = tfse.manufactured_errors(mesh)
check(0 < r.local_error <= r.global_error, f"manufactured errors {r}")

rows = tfse.convergence_table([0.5], [16, 32, 64])
check(rows[0].local_rate is None and abs(rows[2].local_rate - 1.0) < 0.2, "first-order local rate")

check(tfse.two_mesh(3, 0.5, 16, 8) > 0, "two-mesh estimate")
check(0 < tfse.stability_experiment(0.5, 32, 8, 1e-6) < 50, "stability amplification bounded")

try:
    tfse.Mesh(1.5, 8, 8)
except ValueError as e:
    check("alpha" in str(e), "invalid alpha raises ValueError")
else:
    raise SystemExit("FAIL: alpha=1.5 accepted")

print("smoke test passed")
