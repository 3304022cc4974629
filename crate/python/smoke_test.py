"""Smoke test for the pypataplectic extension module."""

import json
import math

import pypataplectic as pp


def main():
    kg = pp.Model.preset("klein_gordon", mass=1.0)
    assert kg.hamiltonian == "-1/2*p2_1^2 + 1/2*p1_1^2 + eps + 1/2*y1^2", kg.hamiltonian
    assert kg.eps_derivative_is_one()

    q, v, w = [0.1, -0.2, 0.3], [0.5, -0.7], 0.25
    pt = kg.forward(q, v, w)
    assert abs(kg.hamiltonian_value(pt) - w) < 1e-12
    assert max(abs(a - b) for a, b in zip(kg.invert(pt), v)) < 1e-12

    p = json.dumps({"kind": "momentum", "coordinate": "y1", "g": "1"})
    qf = json.dumps({"kind": "position", "field": 0, "f": ["x2", "0"]})
    assert kg.bracket(p, qf) == "(x2) dx2"

    custom = pp.Model(json.dumps({"chart": {"n": 1, "k": 1}, "lagrangian": "v1_1^2/2 - y1^2/2"}))
    assert custom.hamiltonian is not None
    try:
        pp.Model('{"preset": "klein_gordon", "masss": 1}')
    except ValueError as e:
        assert "masss" in str(e)
    else:
        raise AssertionError("unknown field accepted")

    residuals = []
    for nx in (32, 64):
        dx = 2 * math.pi / nx
        lattice = json.dumps({"axes": [{"nodes": nx // 2 + 1, "spacing": dx / 2}, {"nodes": nx, "spacing": dx}]})
        traj = kg.simulate(lattice, json.dumps({"y": ["cos(x2 - sqrt(2)*x1)"]}))
        assert traj.levels == nx // 2 + 1 and traj.nodes_per_slice == nx
        assert traj.to_csv().startswith("# pataplectic-trajectory ")
        residuals.append(traj.residuals())
    order = math.log2(residuals[0]["euler_lagrange"] / residuals[1]["euler_lagrange"])
    assert 1.7 < order < 2.3, order

    report = json.loads(pp.identity_suite(seed=1, instances=5))
    assert report["passed"], [c for c in report["checks"] if not c["passed"]]
    print("pypataplectic", pp.__version__, "smoke test passed; EL order", round(order, 2))


if __name__ == "__main__":
    main()
