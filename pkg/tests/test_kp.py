"""KP hierarchy: Lax algebra, flow systems, Schur polynomials."""

from fractions import Fraction

from solitonlab import kp
from solitonlab.diffpoly import (
    DiffPoly,
    jet,
    one,
    sym,
    total_derivative,
    zero,
)

u1 = kp.field(1)
u2 = kp.field(2)


def t(k):
    return sym(f"t{k}")


def test_a_operators():
    assert kp.a_operator(1).coeffs == {1: one()}
    assert kp.a_operator(2).coeffs == {2: one(), 0: 2 * u1}
    A3 = kp.a_operator(3)
    assert A3.coeffs == {3: one(), 1: 3 * u1, 0: 3 * (u2 + total_derivative(u1))}


def test_conserved_densities():
    assert kp.conserved_density(1) == u1
    assert kp.conserved_density(2) == 2 * u2 + total_derivative(u1)


def test_density_symmetry_23():
    # d_{t2} res L^3 = d_{t3} res L^2 exactly
    lhs = kp.flow_derivative(kp.conserved_density(3), 2)
    rhs = kp.flow_derivative(kp.conserved_density(2), 3)
    assert lhs == rhs


def test_first_flow_is_x_shift():
    flows = kp.field_flow(1)
    for i in (1, 2, 3):
        assert flows[i] == total_derivative(kp.field(i))


def test_flow_system_23_structure():
    eqs = kp.kp_flow_system(2, 3)
    assert set(eqs) == {0, 1}  # two equations for u_1, u_2
    # order-1 equation says d_{t2}u_1 = 2 u_2' + u_1'' (i.e. u_y = 4w_x + u_xx)
    e1 = eqs[1] / 3
    assert e1 == kp.marker(2, 1) - 2 * total_derivative(u2) - total_derivative(
        total_derivative(u1)
    )
    # order-0 equation couples d_{t2}u_2 and d_{t3}u_1
    e0 = eqs[0]
    expected = (
        6 * u1 * total_derivative(u1)
        + 3 * kp.marker(2, 2)
        - 2 * kp.marker(3, 1)
        + 3 * kp.marker(2, 1, 1)
        - 3 * total_derivative(total_derivative(u2))
        - total_derivative(total_derivative(total_derivative(u1)))
    )
    assert e0 == expected


def test_flow_system_1k_trivial():
    # zero curvature with m=1 is an identity once d_{t1} = d_x
    res = kp.zero_curvature_residual(1, 3)
    for k, c in res.coeffs.items():
        if res.floor is None or k >= res.floor:
            assert c == zero()


def test_kp0_elimination():
    assert kp.kp0_residual() == zero()


def test_zero_curvature_exact():
    for (m, n) in ((2, 3), (2, 4), (3, 4)):
        res = kp.zero_curvature_residual(m, n)
        for k, c in res.coeffs.items():
            if res.floor is None or k >= res.floor:
                assert c == zero(), (m, n, k)


def test_schur_h_first():
    assert kp.schur_h(0) == one()
    assert kp.schur_h(1) == t(1)
    assert kp.schur_h(2) == t(2) + t(1) * t(1) / 2
    # generating-function value (the printed h_3 has a typo in the t1 t2 term)
    assert kp.schur_h(3) == t(3) + t(1) * t(2) + t(1) ** 3 / 6


def test_schur_h_negative():
    assert kp.schur_h(-2) == zero()


def test_schur_derivative_identity():
    # d h_k / d t_j = h_{k-j}
    for k in range(0, 9):
        h = kp.schur_h(k)
        for j in range(1, k + 1):
            assert h.partial(("s", f"t{j}")) == kp.schur_h(k - j), (j, k)


def test_schur_weighted_sum_identity():
    # sum_j j t_j h_{n-j} = n h_n
    for n in range(1, 9):
        acc = zero()
        for j in range(1, n + 1):
            acc = acc + j * t(j) * kp.schur_h(n - j)
        assert acc == n * kp.schur_h(n), n


def test_schur_single_box():
    assert kp.schur_s((1,)) == t(1)


def test_schur_s_21():
    # s_(2,1) = det [[h2, h3], [h0, h1]] = h2 h1 - h3
    expected = kp.schur_h(2) * kp.schur_h(1) - kp.schur_h(3)
    assert kp.schur_s((2, 1)) == expected
    assert expected == t(1) ** 3 / 3 - t(3)


def test_partitions_and_transpose():
    parts = kp.partitions(4)
    assert (4,) in parts and (2, 1, 1) in parts and (1, 1, 1, 1) in parts
    assert len([p for p in parts if sum(p) == 4]) == 5
    assert kp.transpose((3, 1)) == (2, 1, 1)
    assert kp.transpose(kp.transpose((4, 2, 1))) == (4, 2, 1)
