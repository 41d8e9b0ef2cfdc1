import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import scalar_system
from liftlqr.errors import DimensionMismatch, ValidationError
from liftlqr.lifting import LiftedState, assemble_full, embed_initial, equivalence_check, lift, lifted_step
from liftlqr.model import random_stabilizable, simulate
from liftlqr.spacecraft import gen_magnetic_attitude


def test_lift_p1_is_degenerate():
    sys = random_stabilizable(1, 3, 2, 0)
    L = lift(sys)
    assert L.Abar1.shape == (0, 3) and L.Bbar1.shape == (0, 2) and L.qbar1_blocks.shape == (0, 3, 3)
    np.testing.assert_array_equal(L.Abar2, sys.A[0])
    np.testing.assert_array_equal(L.Bbar2, sys.B[0])
    np.testing.assert_array_equal(L.Qbar2, sys.Q[0])
    np.testing.assert_array_equal(L.Rbar, sys.R[0])
    Abar, Bbar, Qbar, Rbar = assemble_full(L)
    np.testing.assert_array_equal(Abar, sys.A[0])
    np.testing.assert_array_equal(Bbar, sys.B[0])


def test_lift_p2_scalar_substitution():
    a0, a1, b0, b1 = 0.7, 1.3, 2.0, -0.5
    L = lift(scalar_system([a0, a1], [b0, b1], [1, 2], [1, 1]))
    np.testing.assert_allclose(L.Abar1, [[a0]])
    np.testing.assert_allclose(L.Abar2, [[a1 * a0]])
    np.testing.assert_allclose(L.Bbar1, [[b0, 0.0]])
    np.testing.assert_allclose(L.Bbar2, [[a1 * b0, b1]])
    Abar, Bbar, _, _ = assemble_full(L)
    np.testing.assert_allclose(Abar, [[0.0, a0], [0.0, a1 * a0]])
    np.testing.assert_allclose(Bbar, [[b0, 0.0], [a1 * b0, b1]])


def test_assemble_unit_p3():
    L = lift(scalar_system([1, 1, 1], [1, 1, 1], [1, 1, 1], [1, 1, 1]))
    Abar, Bbar, _, _ = assemble_full(L)
    np.testing.assert_array_equal(Abar[:, 2], [1, 1, 1])
    np.testing.assert_array_equal(Abar[:, :2], 0)
    np.testing.assert_array_equal(Bbar, [[1, 0, 0], [1, 1, 0], [1, 1, 1]])


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), p=st.integers(1, 6), n=st.integers(1, 4), m=st.integers(1, 3))
def test_lift_structure(seed, p, n, m):
    sys = random_stabilizable(p, n, m, seed)
    L = lift(sys)
    Abar, Bbar, Qbar, Rbar = assemble_full(L)
    assert Abar.shape == (p * n, p * n) and Bbar.shape == (p * n, p * m)
    assert not Abar[:, : (p - 1) * n].any()
    prev = np.eye(n)
    for i in range(p):
        blk = Abar[i * n:(i + 1) * n, (p - 1) * n:]
        np.testing.assert_allclose(blk, sys.A[i] @ prev, rtol=1e-14, atol=1e-14)
        prev = blk
        for j in range(p):
            Bij = Bbar[i * n:(i + 1) * n, j * m:(j + 1) * m]
            if j > i:
                assert not Bij.any()
            elif j == i:
                np.testing.assert_array_equal(Bij, sys.B[i])
    for j in range(p):
        np.testing.assert_array_equal(Rbar[j * m:(j + 1) * m, j * m:(j + 1) * m], sys.R[j])


def test_weight_orders():
    sys = random_stabilizable(3, 2, 1, 2)
    aligned = lift(sys)
    np.testing.assert_array_equal(aligned.qbar1_blocks, sys.Q[[1, 2]])
    np.testing.assert_array_equal(aligned.Qbar2, sys.Q[0])
    literal = lift(sys, weight_order="natural")
    np.testing.assert_array_equal(literal.qbar1_blocks, sys.Q[[0, 1]])
    np.testing.assert_array_equal(literal.Qbar2, sys.Q[2])
    with pytest.raises(ValueError):
        lift(sys, weight_order="sideways")


def test_lift_validates():
    with pytest.raises(ValidationError):
        lift(scalar_system([1, 1], [1, 1], [1, 1], [1, 0]))


def test_embed_initial():
    assert not embed_initial(np.zeros(2), 3).blocks.any()
    np.testing.assert_array_equal(embed_initial([5.0], 3).blocks[:, 0], [0, 0, 5])
    one = embed_initial([1.0, 2.0], 1)
    np.testing.assert_array_equal(one.vector, [1.0, 2.0])


def test_lifted_step_examples():
    a0, a1, b0, b1 = 0.7, 1.3, 2.0, -0.5
    L = lift(scalar_system([a0, a1], [b0, b1], [1, 1], [1, 1]))
    zero = lifted_step(L, embed_initial([0.0], 2), np.zeros(2))
    assert not zero.blocks.any() and zero.K == 1
    x, u0, u1 = 1.5, 0.2, -0.3
    out = lifted_step(L, embed_initial([x], 2), [u0, u1])
    np.testing.assert_allclose(out.blocks[:, 0], [a0 * x + b0 * u0, a1 * a0 * x + a1 * b0 * u0 + b1 * u1])
    with pytest.raises(DimensionMismatch):
        lifted_step(L, embed_initial([x], 2), [u0])


def test_lifted_step_matches_dense():
    sys = random_stabilizable(3, 2, 2, 8)
    L = lift(sys)
    Abar, Bbar, _, _ = assemble_full(L)
    rng = np.random.default_rng(1)
    xb = LiftedState(0, rng.standard_normal((3, 2)))
    ub = rng.standard_normal(6)
    np.testing.assert_allclose(lifted_step(L, xb, ub).vector, Abar @ xb.vector + Bbar @ ub, atol=1e-12)


def test_equivalence_examples():
    sys = scalar_system([0.7, 1.3], [2.0, -0.5], [1, 1], [1, 1])
    L = lift(sys)
    assert equivalence_check(sys, L, [0.0], np.zeros((4, 1))) == 0.0
    ctrl = np.random.default_rng(0).standard_normal((20, 1))
    assert equivalence_check(sys, L, [1.0], ctrl) <= 1e-12
    with pytest.raises(DimensionMismatch):
        equivalence_check(sys, L, [1.0], np.zeros((3, 1)))


def test_equivalence_spacecraft_scale():
    sys = gen_magnetic_attitude(p=10, check=False)
    L = lift(sys)
    rng = np.random.default_rng(3)
    x0 = rng.standard_normal(6)
    ctrl = rng.standard_normal((50, 3))
    scale = np.abs(simulate(sys, x0, controls=ctrl).states).max()
    assert equivalence_check(sys, L, x0, ctrl) <= 1e-9 * scale


def test_no_overlap_blocks_cover_trajectory_once():
    sys = random_stabilizable(4, 2, 1, 3)
    L = lift(sys)
    rng = np.random.default_rng(2)
    x0 = rng.standard_normal(2)
    ctrl = rng.standard_normal((12, 1))
    ref = simulate(sys, x0, controls=ctrl).states[1:]
    xb, stacked = embed_initial(x0, 4), []
    for K in range(3):
        xb = lifted_step(L, xb, ctrl[K * 4:(K + 1) * 4].reshape(-1))
        stacked.append(xb.blocks)
    np.testing.assert_allclose(np.concatenate(stacked), ref, rtol=1e-12, atol=1e-12)
