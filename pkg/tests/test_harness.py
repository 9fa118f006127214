import json

import numpy as np
import pytest

from ldaselect.errors import ValidationError
from ldaselect.harness import (ExperimentConfig, derive_seed, read_results, resolve_threads, run_monte_carlo,
                               summarize)
from ldaselect.presets import PRESETS, make_preset


def _config(out, **kw):
    base = dict(preset="mini", replications=2, k_min=2, k_max=4, iterations=30, seed=7, out=str(out))
    base.update(kw)
    return ExperimentConfig(**base)


class _Stop(Exception):
    pass


def test_derive_seed_is_pure():
    assert derive_seed(3, 1, 0) == derive_seed(3, 1, 0)
    assert len({derive_seed(3, 1, 0), derive_seed(3, 2, 0), derive_seed(3, 1, 1), derive_seed(4, 1, 0)}) == 4


def test_one_row_per_criterion_and_bitwise_rerun(tmp_path):
    cfg = _config(tmp_path / "a", replications=1)
    summary = run_monte_carlo(cfg)
    rows = read_results(tmp_path / "a" / "results.csv")
    assert sorted(r["criterion"] for r in rows) == sorted(cfg.criterion_names())
    assert summary.completed == 1
    run_monte_carlo(_config(tmp_path / "b", replications=1))
    assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()
    assert (tmp_path / "a" / "scores.csv").read_bytes() == (tmp_path / "b" / "scores.csv").read_bytes()


def test_interrupt_and_resume(tmp_path):
    full = tmp_path / "full"
    run_monte_carlo(_config(full, replications=5, criteria=["sbic", "cao_juan"]))

    part = tmp_path / "part"

    def stop_after_three(res):
        if res.replication == 3:
            raise _Stop

    with pytest.raises(_Stop):
        run_monte_carlo(_config(part, replications=5, criteria=["sbic", "cao_juan"]), on_commit=stop_after_three)
    before = (part / "results.csv").read_bytes()
    assert {r["replication"] for r in read_results(part / "results.csv")} == {1, 2, 3}
    summary = run_monte_carlo(_config(part, replications=5, criteria=["sbic", "cao_juan"]))
    after = (part / "results.csv").read_bytes()
    assert after.startswith(before)
    assert after == (full / "results.csv").read_bytes()
    assert summary.completed == 5


def test_rejects_foreign_output_directory(tmp_path):
    run_monte_carlo(_config(tmp_path, replications=1, criteria=["cao_juan"]))
    with pytest.raises(ValidationError, match="different experiment"):
        run_monte_carlo(_config(tmp_path, replications=1, criteria=["cao_juan"], seed=8))


def test_parallel_matches_serial(tmp_path):
    run_monte_carlo(_config(tmp_path / "s", replications=3, criteria=["sbic", "optop"]))
    run_monte_carlo(_config(tmp_path / "p", replications=3, criteria=["sbic", "optop"], threads=2))
    assert (tmp_path / "s" / "results.csv").read_bytes() == (tmp_path / "p" / "results.csv").read_bytes()


def test_summary_recomputed_from_disk(tmp_path):
    cfg = _config(tmp_path, replications=2)
    in_run = run_monte_carlo(cfg)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    again = summarize(read_results(tmp_path / "results.csv"), tuple(manifest["k_range"]), manifest["K_true"])
    assert again == in_run
    for cs in in_run.criteria.values():
        assert sum(cs.histogram.values()) == cs.n == 2
        assert set(cs.histogram) == {2, 3, 4}


def _rows(ks, criterion="sbic"):
    return [{"dgp": "x", "replication": i + 1, "criterion": criterion, "K_selected": k, "recall": 1.0,
             "precision": 0.5, "f1": 2 / 3, "recall_weighted": 0.9, "precision_weighted": 0.45,
             "f1_weighted": 0.6} for i, k in enumerate(ks)]


def test_summarize_small():
    cs = summarize(_rows([1, 2, 3])).criteria["sbic"]
    assert (cs.mean, cs.median, cs.std, cs.skewness) == (2.0, 2.0, 1.0, 0.0)
    assert cs.histogram == {1: 1, 2: 1, 3: 1}
    assert cs.eval["precision_mean"] == 0.5


def test_summarize_single_replication():
    cs = summarize(_rows([4])).criteria["sbic"]
    assert cs.std is None and cs.skewness is None and cs.median == 4.0


def test_summarize_empty():
    with pytest.raises(ValidationError):
        summarize([])


def test_config_validation(tmp_path):
    with pytest.raises(ValidationError, match="unknown configuration"):
        ExperimentConfig.from_dict({"bogus": 1})
    with pytest.raises(ValidationError):
        ExperimentConfig(replications=0)
    with pytest.raises(ValidationError):
        ExperimentConfig(criteria=["perplexity"])
    with pytest.raises(ValidationError):
        ExperimentConfig(preset="dgp9")
    with pytest.raises(ValidationError):
        _config(tmp_path, k_min=4, k_max=4).candidate_range(make_preset("mini"))
    assert _config(tmp_path).experiment_hash() == _config(tmp_path / "x", threads=3, replications=9).experiment_hash()


def test_resolve_threads(monkeypatch):
    monkeypatch.setenv("LDASELECT_THREADS", "3")
    assert resolve_threads(None) == 3
    assert resolve_threads(2) == 2
    monkeypatch.setenv("LDASELECT_THREADS", "many")
    with pytest.raises(ValidationError):
        resolve_threads(None)


def test_mini_preset_shape():
    dgp = make_preset("mini")
    assert (dgp.n_docs, dgp.n_words, dgp.K_true) == (200, 100, 5)
    assert (dgp.doc_lengths == 60).all()
    assert 0 < dgp.cutoff < 1
    assert np.array_equal(make_preset("mini").beta_true, dgp.beta_true)
    assert PRESETS["mini"].k_range == (2, 12)
