"""Smoke test for the itsplit extension module.

Build and install first:
    pip install ./crates/python
"""

import math

import itsplit


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    a, b = itsplit.gen_matrices(10)
    assert len(a) == 10 and a[3][:4] == [0.01, 0.01, 0.01, -0.03]
    assert b[9][8:] == [0.01, -0.01]

    e = itsplit.mat_exp([[0.0, 1.0], [-1.0, 0.0]], math.pi / 2)
    assert close(e[0][1], 1.0, 1e-14) and close(e[0][0], 0.0, 1e-14)

    r = itsplit.mat_root([[4.0, 0.0], [0.0, 9.0]], 2)
    assert close(r[0][0], 2.0, 1e-14) and close(r[1][1], 3.0, 1e-14)

    assert itsplit.embed([[1 + 2j]]) == [[1.0, -2.0], [2.0, 1.0]]
    assert itsplit.commutator_norm(a, b) > 0.0

    c = itsplit.split_solve([[-1.0, 0.0], [0.0, -2.0]], [[0.0, 0.5], [0.5, 0.0]], [1.0, 1.0], 0.1, 10, "twoside-fused", 3)
    ref = itsplit.split_solve([[-1.0, 0.5], [0.5, -2.0]], [[0.0, 0.0], [0.0, 0.0]], [1.0, 1.0], 0.1, 10, "oneside-a", 1)
    assert all(close(x, y, 1e-6) for x, y in zip(c, ref))

    exp = itsplit.Experiment("integro", taus=[0.1, 0.05], sweeps=[1, 2], initial="consistent")
    assert exp.oracle == "integro_direct"
    state, l2, linf = exp.solve("twoside", 0.05, 4)
    assert len(state) == 10 and linf < 1e-3
    rows = exp.run()
    assert len(rows) == 3 * 2 * 2
    csv = exp.to_csv().splitlines()
    assert csv[0] == itsplit.CSV_HEADER and len(csv) == 13

    third = itsplit.Experiment("third-order", taus=[0.1], sweeps=[2], root_set="unity")
    assert len(third.roots) == 3
    assert third.run()[0].error_inf < 1e-12
    assert all(isinstance(z, complex) for z in third.reference)

    try:
        itsplit.Experiment("nope")
    except ValueError:
        pass
    else:
        raise AssertionError("bad example name accepted")
    assert issubclass(itsplit.NumericalError, ArithmeticError)

    print("itsplit smoke test ok:", ", ".join(itsplit.SCHEMES))


if __name__ == "__main__":
    main()
