"""Smoke tests for the cvs_select extension module."""

import math

import pytest

import cvs_select as cs


def test_version():
    assert cs.__version__


def test_manifest_round_trip(tmp_path):
    records = [
        cs.SampleRecord("a", "1.png", "what is it?", "a cat"),
        cs.SampleRecord("b", "2.png", "", "ein Bär"),
    ]
    path = tmp_path / "m.jsonl"
    cs.write_manifest(records, path)
    loaded, stats, warnings = cs.load_manifest(path)
    assert [r.id for r in loaded] == ["a", "b"]
    assert loaded[1].answer == "ein Bär"
    assert stats.total_count == 2
    assert stats.empty_question_count == 1
    assert warnings


def test_manifest_duplicate_id_raises(tmp_path):
    path = tmp_path / "m.jsonl"
    path.write_text(
        '{"id":"x","image":"1.png","question":"q","answer":"a"}\n'
        '{"id":"x","image":"2.png","question":"q","answer":"b"}\n'
    )
    with pytest.raises(ValueError):
        cs.load_manifest(path)


def test_cvs_shift_values():
    assert cs.cvs_shift(0.8, 0.4) == pytest.approx(math.log(2), abs=1e-12)
    assert cs.cvs_shift(0.5, 0.5) == 0.0
    with pytest.raises(ValueError):
        cs.cvs_shift(0.0, 0.5)


def test_extract_yes_no_probs():
    p_yes, p_no = cs.extract_yes_no_probs(
        [("Yes", math.log(0.7)), (" yes", math.log(0.1)), ("No", math.log(0.15))]
    )
    assert p_yes == pytest.approx(0.8, abs=1e-12)
    assert p_no == pytest.approx(0.15, abs=1e-12)

    p_yes, p_no = cs.extract_yes_no_probs([("Maybe", -0.1)])
    assert p_yes == 1e-10
    assert p_no == 1e-10


def test_prompt_rendering():
    templates = cs.PromptTemplateSet.defaults()
    sample = cs.SampleRecord("s", "img.png", "what color?", "red")
    full = cs.render_full(sample, templates)
    assert "what color?" in full.text
    assert full.attach_image
    assert full.context_kind == cs.ContextKind.FULL

    prior = cs.render_prior(sample, templates, cs.PriorVariant.TEXT_ONLY)
    assert "what color?" not in prior.text
    assert not prior.attach_image


def test_mock_scoring_and_selection(tmp_path):
    mock = cs.MockEvaluator()
    mock.set_entry("s0", cs.ContextKind.FULL, 0.9, 0.05)
    mock.set_entry("s0", cs.ContextKind.PRIOR, 0.3, 0.4)

    records = [cs.SampleRecord(f"s{i}", "img.png", f"q{i}", "item") for i in range(10)]
    templates = cs.PromptTemplateSet.defaults()
    scores, newly, hits, failures = cs.score_pool(
        records, mock, templates, cache_path=str(tmp_path / "cache.jsonl")
    )
    assert newly == 10
    assert hits == 0
    assert not failures
    assert mock.calls() == 20
    assert scores[0].cvs_yes == pytest.approx(math.log(3), abs=1e-12)

    # rerun hits the cache
    cold = cs.MockEvaluator()
    scores2, newly2, hits2, _ = cs.score_pool(
        records, cold, templates, cache_path=str(tmp_path / "cache.jsonl")
    )
    assert newly2 == 0
    assert hits2 == 10
    assert cold.calls() == 0
    assert [s.sample_id for s in scores2] == [s.sample_id for s in scores]

    config = cs.SelectionConfig(cs.Strategy.LOW, cs.Budget.from_count(3))
    result = cs.select(scores, config)
    assert len(result.selected_ids) <= 3
    assert result.pool_size == 10
    kept = cs.filter_aligned(scores)
    assert result.filtered_pool_size == len(kept)
    assert all(result.mask[i] in (0, 1) for i in result.mask)


def test_selection_determinism_and_ties():
    def score(i, yes, no):
        s = cs.CvsScore()
        s.sample_id = f"id{i:03d}"
        s.cvs_yes = yes
        s.cvs_no = no
        return s

    scores = [score(0, 0.4, -1.0), score(1, 0.4, -1.0), score(2, 0.1, -1.0)]
    low = cs.select(scores, cs.SelectionConfig(cs.Strategy.LOW, cs.Budget.from_count(2)))
    assert low.selected_ids == ["id002", "id000"]

    rand_a = cs.select(
        scores, cs.SelectionConfig(cs.Strategy.RANDOM, cs.Budget.from_count(3), rng_seed=7)
    )
    rand_b = cs.select(
        scores, cs.SelectionConfig(cs.Strategy.RANDOM, cs.Budget.from_count(3), rng_seed=7)
    )
    assert rand_a.selected_ids == rand_b.selected_ids


def test_retention_and_arp():
    def score(i, yes, no):
        s = cs.CvsScore()
        s.sample_id = str(i)
        s.cvs_yes = yes
        s.cvs_no = no
        return s

    scores = [score(i, 0.5 if i < 6 else -0.5, -0.5 if i < 6 else 0.5) for i in range(10)]
    assert cs.retention_fraction(scores) == 0.6

    assert cs.compute_arp([("gqa", 52.4, 50.0)]) == pytest.approx(104.8, abs=1e-9)
    assert cs.compute_arp([("a", 50.0, 50.0), ("b", 70.0, 70.0)]) == 100.0
    with pytest.raises(ValueError):
        cs.compute_arp([])


def test_histogram():
    def score(v):
        s = cs.CvsScore()
        s.sample_id = str(v)
        s.cvs_yes = v
        return s

    hist = cs.histogram([score(-1.0), score(0.0), score(0.5)], cs.Metric.CVS_YES, [-2.0, 0.0, 1.0])
    assert list(hist.counts) == [1, 2]
    assert hist.underflow == 0
    assert "bin_left" in hist.to_text()
