import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from deephybrid.harness import SynthSpec, gen_hierarchical
from deephybrid.mbp import mbp_linear, mbp_nonlinear, run_mbp, semi_nmf_update
from deephybrid.sender_core import SenderConfig, decompose, layer_loss


def _depth_loss(data, dec):
    return layer_loss(dec.residual_input(data), dec.layers, dec.depth, dec.rho, dec.act)


@pytest.fixture(scope="module")
def fitted():
    truth = gen_hierarchical(SynthSpec(50, 70, (8, 4), (6, 3), seed=1))
    dec = decompose(truth.noisy, SenderConfig(initial_rank=8, seed=1, mbp_enabled=False))
    return truth.noisy, dec


class TestSemiNmf:
    def test_parts(self, rng):
        g = rng.standard_normal((4, 6))
        f = rng.standard_normal((10, 4))
        z = rng.standard_normal((10, 6))
        new, gp, gn = semi_nmf_update(g, f, z)
        np.testing.assert_array_equal(new, gp - gn)
        assert gp.min() >= 0 and gn.min() >= 0

    def test_fixed_point_at_exact_fit(self, rng):
        f = rng.standard_normal((10, 3))
        g = np.abs(rng.standard_normal((3, 5)))
        new, _, _ = semi_nmf_update(g, f, f @ g)
        np.testing.assert_allclose(new, g, rtol=1e-10)

    def test_zero_denominator_entries_unchanged(self):
        # f = 0 makes every denominator vanish.
        g = np.array([[1.0, -2.0]])
        new, _, _ = semi_nmf_update(g, np.zeros((3, 1)), np.ones((3, 2)))
        np.testing.assert_array_equal(new, g)

    @settings(max_examples=40, deadline=None)
    @given(
        g=arrays(np.float64, (3, 4), elements=st.floats(-3, 3)),
        seed=st.integers(0, 2**16),
    )
    def test_signs_preserved(self, g, seed):
        rng = np.random.default_rng(seed)
        new, gp, gn = semi_nmf_update(g, rng.standard_normal((8, 3)), rng.standard_normal((8, 4)))
        assert np.all(np.isfinite(new))
        assert np.all(gp[g <= 0] == 0) and np.all(gn[g >= 0] == 0)


class TestPasses:
    def test_linear_does_not_increase_loss(self, fitted):
        data, dec = fitted
        out = mbp_linear(data, dec)
        assert _depth_loss(data, out) <= _depth_loss(data, dec)

    def test_nonlinear_does_not_increase_loss(self, fitted):
        data, dec = fitted
        out, iters, changes = mbp_nonlinear(data, dec, return_info=True)
        assert _depth_loss(data, out) <= _depth_loss(data, dec)
        assert 1 <= iters <= 30 and len(changes) == dec.depth

    def test_sigmoid(self):
        truth = gen_hierarchical(SynthSpec(30, 40, (6, 3), (4, 2), activation="sigmoid", seed=2))
        cfg = SenderConfig(activation="sigmoid", initial_rank=6, mbp_enabled=False, max_outer_sweeps=20)
        dec = decompose(truth.noisy, cfg)
        out, report = run_mbp(truth.noisy, dec, dataclasses.replace(cfg, mbp_enabled=True))
        assert report.loss_after <= report.loss_before

    def test_sparse_components_fixed(self, fitted):
        data, dec = fitted
        out, _ = run_mbp(data, dec, SenderConfig())
        for a, b in zip(dec.layers, out.layers):
            np.testing.assert_array_equal(a.s, b.s)


class TestRunMbp:
    def test_report_and_history(self, fitted):
        data, dec = fitted
        out, report = run_mbp(data, dec, SenderConfig())
        assert report.loss_after <= report.loss_before
        assert report.loss_before == pytest.approx(_depth_loss(data, dec))
        assert report.loss_after == pytest.approx(_depth_loss(data, out))
        assert len(out.loss_history) == len(dec.loss_history) + 2
        assert out.loss_history[-1][2] == pytest.approx(report.loss_after)
        assert len(report.per_layer_change) == dec.depth

    def test_disabled_is_identity(self, fitted):
        data, dec = fitted
        out, report = run_mbp(data, dec, SenderConfig(mbp_enabled=False))
        assert out is dec
        assert report.loss_after == report.loss_before
