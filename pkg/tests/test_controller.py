"""
Tests for the tracking dynamics, the control laws and the episode runner.
"""

import math
from unittest.mock import Mock

import numpy as np
import pytest

from src.control.controller import (
    ChanceConstrainedSparseController,
    FeedbackController,
    baseline_control,
    feedforward,
    plant_step,
    reference_input,
    reference_step,
    run_episode,
    sparse_control,
    summarize,
)
from src.inference.dataset import sinusoid_mean, zero_mean
from src.inference.hgp import draw_ensemble, interval_probability
from src.models.episode import EpisodeRow


def mock_ensemble(gamma_u, gamma_l):
    """Ensemble whose levels are fixed: targets below 0.5 give gamma_u."""
    point = Mock()
    point.solve = Mock(side_effect=lambda target: gamma_u if target < 0.5 else gamma_l)
    ensemble = Mock()
    ensemble.at = Mock(return_value=point)
    return ensemble


def make_row(t, u, violation=False, infeasible=False):
    return EpisodeRow(
        t=t, r1=0.0, r2=0.0, xi1=0.0, xi2=0.0, u_ff=0.0, u=u,
        infeasible=infeasible, violation=violation, r2_next=0.0, xi2_next=0.0,
    )


@pytest.mark.unit
class TestDynamics:
    """Tests for the reference, the plant and the feedforward term."""

    def test_reference_input(self, control_config):
        """Test v(0) = A and v at a quarter period."""
        assert reference_input(0, control_config) == 3.0
        # pi * 0.005 * 100 = pi / 2
        assert reference_input(100, control_config) == pytest.approx(0.0, abs=1e-14)

    def test_reference_step(self):
        """Test r+ = r + tau (r2, v)."""
        np.testing.assert_allclose(reference_step([1.0, 2.0], 3.0, 0.5), [2.0, 3.5])

    def test_plant_step(self):
        """Test xi+ = xi + tau (xi2, f + u_hat + u)."""
        true_f = lambda X: np.full(X.shape[0], 4.0)
        xi = plant_step([1.0, 2.0], 1.0, 0.5, true_f, 0.1)
        assert xi == pytest.approx([1.2, 2.55], rel=1e-15)

    def test_plant_passes_state_as_row(self):
        """Test that f receives a (1, 2) array."""
        true_f = Mock(return_value=np.zeros(1))
        plant_step([0.3, -0.1], 0.0, 0.0, true_f, 0.01)
        (X,), _ = true_f.call_args
        assert X.shape == (1, 2)
        assert X[0].tolist() == [0.3, -0.1]

    def test_feedforward(self):
        """Test u_hat = v - (xi1 - r1) / tau."""
        assert feedforward([1.0, 0.0], [0.5, 0.0], 2.0, 0.5) == 1.0

    def test_baseline_control(self):
        """Test u = -kappa (xi2 - r2) / tau."""
        assert baseline_control(0.5, [0.0, 0.12], [0.0, 0.1], 0.005) == pytest.approx(-2.0, rel=1e-12)
        assert baseline_control(1.0, [0.0, 0.2], [0.0, 0.2], 0.005) == 0.0


@pytest.mark.unit
class TestSparseControl:
    """Tests for the chance-constrained input selection (reach r_bar / tau = 20)."""

    @pytest.mark.parametrize(
        "gamma_u, gamma_l, expected_u, u_u, u_l",
        [
            (5.0, -5.0, 0.0, 15.0, -15.0),
            (30.0, 25.0, -10.0, -10.0, -45.0),
            (-25.0, -30.0, 10.0, 45.0, 10.0),
        ],
    )
    def test_feasible_cases(self, control_config, gamma_u, gamma_l, expected_u, u_u, u_l):
        """Test zero input, upper bound and lower bound selection."""
        decision = sparse_control(mock_ensemble(gamma_u, gamma_l), [0.0, 0.0], 0.0, 0.0, control_config)
        assert decision.u == pytest.approx(expected_u, abs=1e-12)
        assert decision.u_u == pytest.approx(u_u, abs=1e-12)
        assert decision.u_l == pytest.approx(u_l, abs=1e-12)
        assert not decision.infeasible

    def test_zero_is_exact(self, control_config):
        """Test that an admissible zero gives u = 0.0 exactly."""
        decision = sparse_control(mock_ensemble(5.0, -5.0), [0.0, 0.0], 0.0, 0.0, control_config)
        assert decision.u == 0.0

    def test_infeasible_midpoint(self, control_config):
        """Test the midpoint fallback for an empty interval."""
        decision = sparse_control(mock_ensemble(25.0, -35.0), [0.0, 0.0], 0.0, 0.0, control_config)
        assert decision.infeasible
        assert decision.u == pytest.approx(5.0, abs=1e-12)

    def test_levels_requested(self, control_config):
        """Test the two tail targets delta*/2 and 1 - delta*/2."""
        ensemble = mock_ensemble(1.0, -1.0)
        sparse_control(ensemble, [0.2, 0.3], 0.0, 0.0, control_config)
        point = ensemble.at.return_value
        targets = sorted(call.args[0] for call in point.solve.call_args_list)
        assert targets == pytest.approx([0.005, 0.995])
        np.testing.assert_array_equal(ensemble.at.call_args.args[0], [0.2, 0.3])

    def test_eta_shifts_bounds(self, control_config):
        """Test eta = -u_hat + (r2(t+1) - xi2) / tau."""
        decision = sparse_control(mock_ensemble(0.0, 0.0), [0.0, 0.1], 0.2, 3.0, control_config)
        eta = -3.0 + 0.1 / 0.005
        assert decision.u_u == pytest.approx(20.0 + eta, rel=1e-12)
        assert decision.u_l == pytest.approx(-20.0 + eta, rel=1e-12)

    def test_with_posterior(self, small_ensemble, control_config):
        """Test that [gamma_l, gamma_u] carries 1 - delta* of the posterior mass."""
        xi = [0.2, 0.1]
        decision = sparse_control(small_ensemble, xi, 0.3, 1.0, control_config)
        assert decision.gamma_l < decision.gamma_u
        mass = interval_probability(small_ensemble, xi, decision.gamma_l, decision.gamma_u)
        assert mass == pytest.approx(0.99, abs=1e-9)
        if not decision.infeasible:
            assert decision.u_l <= decision.u <= decision.u_u
            assert decision.u in (0.0, decision.u_l, decision.u_u)


@pytest.mark.unit
class TestControllers:
    """Tests for the controller classes."""

    def test_feedback_names(self):
        """Test the kappa labels."""
        assert FeedbackController(1.0).name == "kappa_1"
        assert FeedbackController(0.5).name == "kappa_0.5"
        assert FeedbackController(0.1).name == "kappa_0.1"

    def test_proposed_name(self, control_config):
        assert ChanceConstrainedSparseController(mock_ensemble(1.0, -1.0), control_config).name == "proposed"

    def test_feedback_has_no_levels(self, control_config):
        """Test that baseline decisions leave diagnostics at NaN."""
        record = run_episode(FeedbackController(0.5), sinusoid_mean, control_config)
        assert all(math.isnan(row.gamma_u) for row in record.rows)

    def test_redraw_per_step(self, control_config):
        """Test that a redraw callback is asked for each step's ensemble."""
        redraw = Mock(return_value=mock_ensemble(1.0, -1.0))
        fixed = mock_ensemble(1.0, -1.0)
        config = control_config.model_copy(update={"horizon": 3})
        controller = ChanceConstrainedSparseController(fixed, config, redraw=redraw)
        run_episode(controller, zero_mean, config)
        assert [call.args[0] for call in redraw.call_args_list] == [0, 1, 2]
        fixed.at.assert_not_called()


@pytest.mark.unit
class TestEpisode:
    """Tests for run_episode and summarize."""

    def test_feedback_on_zero_truth(self, control_config):
        """Test perfect tracking and zero cost when f = 0."""
        record = run_episode(FeedbackController(1.0), zero_mean, control_config)
        assert record.summary.cost == 0.0
        assert record.summary.violations == 0
        for row in record.rows:
            assert row.xi1 == row.r1
            assert row.xi2 == row.r2

    def test_proposed_on_zero_truth(self, zero_truth_model, control_config):
        """Test that the sparse controller stays silent when f = 0."""
        ensemble = draw_ensemble(zero_truth_model, 50, seed=3)
        controller = ChanceConstrainedSparseController(ensemble, control_config)
        record = run_episode(controller, zero_mean, control_config)
        assert [row.u for row in record.rows] == [0.0] * control_config.horizon
        assert record.summary.cost == 0.0
        assert record.summary.violations == 0
        assert record.summary.infeasible_steps == 0

    def test_mechanics(self, control_config):
        """Test the recursions linking consecutive rows."""
        tau = control_config.time_step
        config = control_config.model_copy(update={"horizon": 30})
        record = run_episode(FeedbackController(0.5), sinusoid_mean, config)
        rows = record.rows
        assert len(rows) == 30
        assert [rows[0].xi1, rows[0].xi2, rows[0].r1, rows[0].r2] == [0.0, 0.0, 0.0, 0.0]

        for t, row in enumerate(rows):
            assert row.t == t
            assert row.u == baseline_control(0.5, [row.xi1, row.xi2], [row.r1, row.r2], tau)
            assert row.u_ff == feedforward([row.xi1, row.xi2], [row.r1, row.r2], reference_input(t, config), tau)
            f = float(sinusoid_mean(np.array([[row.xi1, row.xi2]]))[0])
            assert row.xi2_next == row.xi2 + tau * (f + row.u_ff + row.u)
            assert row.violation == (abs(row.xi2_next - row.r2_next) > config.margin)

        for prev, row in zip(rows, rows[1:]):
            assert row.xi1 == prev.xi1 + tau * prev.xi2
            assert row.r1 == prev.r1 + tau * prev.r2
            assert row.xi2 == prev.xi2_next
            assert row.r2 == prev.r2_next

    def test_summary_recomputed_from_rows(self, control_config):
        """Test that the episode summary matches summarize(rows)."""
        record = run_episode(FeedbackController(0.1), sinusoid_mean, control_config)
        assert record.summary == summarize(record.controller, record.rows)

    def test_summarize(self):
        """Test the cost and the counters."""
        rows = [
            make_row(0, -1.5, violation=True),
            make_row(1, 0.0),
            make_row(2, 2.25, infeasible=True),
        ]
        summary = summarize("proposed", rows)
        assert summary.cost == 3.75
        assert summary.violations == 1
        assert summary.infeasible_steps == 1
        assert summary.values() == ["proposed", 3.75, 1, 1]

    def test_row_columns(self):
        """Test the CSV column order of episode rows."""
        columns = EpisodeRow.columns()
        assert columns[:7] == ["t", "r1", "r2", "xi1", "xi2", "u_ff", "u"]
        assert columns[-2:] == ["r2_next", "xi2_next"]
        assert len(make_row(0, 1.0).values()) == len(columns)
