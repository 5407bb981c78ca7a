"""Smoke test for the smax Python module.

Build and install first:  maturin develop --release -m crates/python/Cargo.toml
"""

import math
import os
import tempfile

import smax


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b, tol)


def main():
    x = smax.softmax([2.0, 0.0, -2.0], 0.5)
    for got, want in zip(x, [0.66524095577, 0.24472847105, 0.09003057317]):
        close(got, want, 1e-10)
    close(smax.lse([0.3, -1.2, 2.7], 2.5), 2.70101353358802, 1e-12)
    close(smax.softmax([1.0, 0.0])[0], 1 / (1 + math.exp(-1)), 1e-15)
    assert smax.vecmax([1.0, 3.0, 3.0]) == (3.0, 1)

    jac = smax.softmax_jacobian([0.4, -0.1, 1.2], 2.0)
    assert all(abs(sum(row)) < 1e-15 for row in jac)
    u = [1.0, -2.0, 0.5]
    s = smax.softmax([0.4, -0.1, 1.2], 2.0)
    field = smax.replicator_field(s, u, 2.0)
    for i in range(3):
        close(field[i], sum(jac[i][j] * u[j] for j in range(3)), 1e-12)

    freq = smax.gumbel_frequencies([1.0, 0.0], 1.0, 200_000, 3)
    close(freq[0], 1 / (1 + math.exp(-1)), 5e-3)

    rps = smax.MatrixGame.rock_paper_scissors()
    assert rps.n == 3 and rps.is_stable()
    traj = smax.integrate(rps, [1.0, 0.5, 0.0], 1.0, 0.01, 50.0, 100)
    assert traj["t"][-1] == 50.0
    for p in traj["x"][-1]:
        close(p, 1 / 3, 1e-6)

    bound, certified = smax.contraction_certificate(rps, 0.1)
    close(bound, 0.34641016151377546, 1e-15)
    assert certified
    res = smax.solve_fixed_point(rps, 0.1, [1.0, 0.5, 0.0], damping=1.0)
    assert res["converged"] and res["residual"] <= 1e-10
    x_star = smax.logit_equilibrium(rps, 1.0)
    assert smax.verify_equilibrium(rps, x_star, 1.0) <= 1e-12

    coord = smax.MatrixGame([[1.0, 0.0], [0.0, 1.0]], "coordination")
    stuck = smax.solve_fixed_point(coord, 5.0, [0.5, 0.0], max_iter=10)
    assert not stuck["converged"]
    try:
        smax.logit_equilibrium(coord, 5.0, [0.5, 0.0], max_iter=10)
    except RuntimeError:
        pass
    else:
        raise AssertionError("expected non-convergence error")
    try:
        smax.softmax([1.0], 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "coord.json")
        coord.save(path)
        again = smax.MatrixGame.load(path)
        assert again.rows() == coord.rows() and again.name == "coordination"

    report = smax.run_suite([3], [1.0], 200, 1)
    assert report["passed"], report
    faulty = smax.run_suite([3], [1.0], 200, 1, lambda_scale=1.5)
    assert not faulty["passed"]

    print("python smoke test: OK")


if __name__ == "__main__":
    main()
