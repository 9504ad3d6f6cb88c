import numpy as np
import pytest

from dynastop.codes import modulate, structure_matrices
from dynastop.decoding import (
    DecoderModel,
    Trial,
    classify,
    correlation_score,
    fit_cca,
    predict_templates,
    score,
    score_trace,
)
from dynastop.simulate import SimConfig, make_dataset, resolve_config


def two_class_structures(rng, n_samples=60, response_samples=8):
    codes = modulate(rng.integers(0, 2, (2, n_samples // 2)).astype(np.uint8))
    return structure_matrices(codes, 1, 1, n_samples, response_samples)


def toy_model(templates, fs=100.0):
    """Single-channel model with given templates; handy for score tests."""
    templates = np.asarray(templates, dtype=float)
    return DecoderModel(
        spatial_filter=np.array([1.0]),
        response=np.zeros(2),
        templates=templates,
        fs=fs,
        canonical_correlation=1.0,
    )


class TestFitCca:
    def test_perfect_single_channel_fixed_point(self, rng):
        structures = two_class_structures(rng)
        true_response = rng.standard_normal(structures[0].shape[0])
        trials = [
            Trial((true_response @ structures[label])[None, :], label, 100.0)
            for label in (0, 1, 0, 1)
        ]
        model = fit_cca(trials, structures)
        assert model.canonical_correlation > 0.999
        r_corr = abs(np.corrcoef(model.response, true_response)[0, 1])
        assert r_corr > 0.999

    def test_planted_filter_and_response_recovered(self):
        cfg = SimConfig(n_classes=6, n_channels=4, sigma=1.0, seed=5)
        sim = resolve_config(cfg)
        trials = make_dataset(cfg, 6, resolved=sim)
        model = fit_cca(trials, sim.structures)
        w_corr = abs(np.corrcoef(model.spatial_filter, sim.spatial_pattern)[0, 1])
        r_corr = abs(np.corrcoef(model.response, sim.response)[0, 1])
        assert w_corr > 0.95
        assert r_corr > 0.95

    def test_shuffled_labels_reduce_correlation(self, small_sim, rng):
        cfg, sim, trials = small_sim
        model = fit_cca(trials, sim.structures)
        labels = np.array([t.label for t in trials])
        shuffled = labels.copy()
        while np.array_equal(shuffled, labels):
            rng.shuffle(shuffled)
        broken = [Trial(t.data, int(l), t.fs) for t, l in zip(trials, shuffled)]
        worse = fit_cca(broken, sim.structures)
        assert worse.canonical_correlation < model.canonical_correlation

    def test_channel_permutation_invariance(self, small_sim):
        cfg, sim, trials = small_sim
        model = fit_cca(trials, sim.structures)
        perm = np.array([1, 0])
        permuted = [Trial(t.data[perm], t.label, t.fs) for t in trials]
        model_p = fit_cca(permuted, sim.structures)
        np.testing.assert_allclose(model_p.templates, model.templates, atol=1e-8)
        np.testing.assert_allclose(
            model_p.spatial_filter, model.spatial_filter[perm], atol=1e-8
        )

    def test_canonical_correlation_beats_fixed_pairs(self, small_sim, rng):
        cfg, sim, trials = small_sim
        model = fit_cca(trials, sim.structures)
        data = np.concatenate([t.data for t in trials], axis=1)
        design = np.concatenate([sim.structures[t.label] for t in trials], axis=1)
        for _ in range(5):
            w = rng.standard_normal(data.shape[0])
            r = rng.standard_normal(design.shape[0])
            rho = abs(np.corrcoef(w @ data, r @ design)[0, 1])
            assert rho <= model.canonical_correlation + 1e-9

    def test_unit_norm_and_sign_convention(self, small_sim):
        cfg, sim, trials = small_sim
        model = fit_cca(trials, sim.structures)
        assert np.linalg.norm(model.spatial_filter) == pytest.approx(1.0)
        lead = np.flatnonzero(
            np.abs(model.spatial_filter) > 1e-12 * np.abs(model.spatial_filter).max()
        )
        assert model.spatial_filter[lead[0]] > 0

    def test_deterministic(self, small_sim):
        cfg, sim, trials = small_sim
        a = fit_cca(trials, sim.structures)
        b = fit_cca(trials, sim.structures)
        np.testing.assert_array_equal(a.spatial_filter, b.spatial_filter)
        np.testing.assert_array_equal(a.templates, b.templates)

    def test_validation_errors(self, rng):
        structures = two_class_structures(rng)
        t = Trial(rng.standard_normal((2, 60)), 0, 100.0)
        with pytest.raises(ValueError, match="two training trials"):
            fit_cca([t], structures)
        with pytest.raises(ValueError, match="distinct labels"):
            fit_cca([t, Trial(t.data, 0, 100.0)], structures)
        with pytest.raises(ValueError, match="labeled"):
            fit_cca([t, Trial(t.data, None, 100.0)], structures)
        other = Trial(rng.standard_normal((3, 60)), 1, 100.0)
        with pytest.raises(ValueError, match="shapes differ"):
            fit_cca([t, other], structures)

    def test_all_zero_data_rejected(self, rng):
        structures = two_class_structures(rng)
        trials = [Trial(np.zeros((2, 60)), label, 100.0) for label in (0, 1)]
        with pytest.raises(ValueError, match="rank deficient"):
            fit_cca(trials, structures)


class TestPredictTemplates:
    def test_zero_structure_gives_zero_template(self, rng):
        model = toy_model(np.zeros((1, 4)))
        model.response = rng.standard_normal(6)
        out = predict_templates(model, [np.zeros((6, 9))])
        assert out.shape == (1, 9)
        assert not out.any()

    def test_single_short_event_selects_response_segment(self, rng):
        response = rng.standard_normal(8)
        model = toy_model(np.zeros((1, 4)))
        model.response = response
        structure = np.zeros((8, 4))
        for j in range(4):
            structure[j, j] = 1.0  # short event at sample 0
        out = predict_templates(model, [structure])
        np.testing.assert_allclose(out[0], response[:4])

    def test_identical_structures_identical_templates(self, rng):
        model = toy_model(np.zeros((1, 4)))
        model.response = rng.standard_normal(6)
        s = rng.integers(0, 2, (6, 10)).astype(float)
        out = predict_templates(model, [s, s.copy()])
        np.testing.assert_array_equal(out[0], out[1])

    def test_dimension_mismatch_rejected(self, rng):
        model = toy_model(np.zeros((1, 4)))
        model.response = rng.standard_normal(6)
        with pytest.raises(ValueError, match="rows"):
            predict_templates(model, [np.zeros((5, 9))])


class TestScores:
    def setup_method(self):
        base = np.array(
            [[1.0, 0.0, -1.0, 0.5], [0.0, 1.0, 0.5, -1.0], [0.5, 0.5, 0.5, 0.5]]
        )
        self.model = toy_model(base)

    def test_self_inner_product_is_max(self):
        t = self.model.templates
        trial = Trial(t[1][None, :], None, 100.0)
        sv = score(self.model, trial, 4)
        assert sv.scores[1] == pytest.approx(t[1] @ t[1])
        assert classify(sv) == 1

    def test_orthogonal_trial_scores_zero(self):
        x = np.array([0.0, 0.0, 0.0, 0.0])
        sv = score(self.model, Trial(x[None, :], None, 100.0), 4)
        np.testing.assert_array_equal(sv.scores, 0.0)

    def test_noiseless_scores_match_gram(self):
        alpha = 2.5
        t = self.model.templates
        trial = Trial((alpha * t[0])[None, :], None, 100.0)
        sv = score(self.model, trial, 4)
        np.testing.assert_allclose(sv.scores, alpha * (t @ t[0]))

    def test_scale_invariance_of_classify(self, rng):
        x = rng.standard_normal(4)
        a = score(self.model, Trial(x[None, :], None, 100.0), 4)
        b = score(self.model, Trial((7.3 * x)[None, :], None, 100.0), 4)
        assert classify(a) == classify(b)

    def test_window_validation(self):
        trial = Trial(np.zeros((1, 4)), None, 100.0)
        with pytest.raises(ValueError):
            score(self.model, trial, 0)
        with pytest.raises(ValueError):
            score(self.model, trial, 9)

    def test_correlation_score_endpoints(self):
        t = self.model.templates
        up = correlation_score(self.model, Trial(t[0][None, :], None, 100.0), 4)
        down = correlation_score(self.model, Trial(-t[0][None, :], None, 100.0), 4)
        assert up.scores[0] == pytest.approx(1.0)
        assert down.scores[0] == pytest.approx(-1.0)
        assert np.all(np.abs(up.scores) <= 1.0 + 1e-12)

    def test_correlation_degeneracy_flag(self):
        const = Trial(np.ones((1, 4)), None, 100.0)
        sv = correlation_score(self.model, const, 4)
        assert sv.degenerate is not None and sv.degenerate.all()
        np.testing.assert_array_equal(sv.scores, 0.0)
        # template 2 is constant: degenerate against any input
        varying = Trial(np.array([[1.0, -1.0, 2.0, 0.0]]), None, 100.0)
        sv2 = correlation_score(self.model, varying, 4)
        assert sv2.degenerate[2]
        assert sv2.scores[2] == 0.0

    def test_noiseless_trials_classify_to_their_label(self):
        # Full-window self-energy beats every cross product on generated
        # codebooks, so noiseless trials decode perfectly.
        cfg = SimConfig(n_classes=36, n_channels=1, sigma=1e-12, seed=3,
                        spatial_pattern=np.array([1.0]))
        sim = resolve_config(cfg)
        model = toy_model(sim.templates)
        for label in range(36):
            trial = Trial(sim.templates[label][None, :], label, cfg.fs)
            sv = score(model, trial, sim.templates.shape[1])
            assert classify(sv) == label

    def test_classify_examples(self):
        assert classify(np.array([0.1, 0.9, 0.3])) == 1
        assert classify(np.array([0.5, 0.5])) == 0
        with pytest.raises(ValueError):
            classify(np.array([]))

    def test_score_trace_shapes_and_consistency(self):
        trial = Trial(np.array([[1.0, 0.5, -0.5, 2.0]]), None, 100.0)
        trace = score_trace(self.model, trial, [1, 2, 4], "inner")
        assert trace.shape == (3, 3)
        np.testing.assert_allclose(trace[2], score(self.model, trial, 4).scores)
        with pytest.raises(ValueError, match="similarity"):
            score_trace(self.model, trial, [1], "cosine")
