"""Synthetic DGP presets.

The original source corpora are not redistributable, so every preset is a
sparse Dirichlet draw with the corpus shape of the experiment it stands in for.
A preset name always yields the same Dgp (fixed synthesis seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ldaselect.errors import ValidationError
from ldaselect.generator import Dgp, pairwise_similarities


@dataclass(frozen=True)
class PresetSpec:
    n_docs: int
    vocab_size: int
    k_true: int
    mean_length: int
    percentile: float
    k_range: tuple[int, int]
    fixed_length: bool = False
    topic_concentration: float = 0.05
    doc_concentration: float = 0.1
    floor: float = 0.01
    seed: int = 0


PRESETS = {
    "mini": PresetSpec(200, 100, 5, 60, 0.95, (2, 12), fixed_length=True, topic_concentration=0.2, seed=5),
    "dgp1": PresetSpec(704, 3911, 38, 3000, 0.99, (18, 58), seed=1),
    "dgp2": PresetSpec(11387, 1796, 12, 80, 0.95, (2, 32), seed=2),
    "dgp3": PresetSpec(50000, 4675, 70, 120, 0.99, (50, 90), seed=3),
}


# Full-scale reference figures for the presets (selected K over 500 replications,
# mean recall/precision/F1 of the selected model). These are reproduction targets
# for long runs, not checked by the test suite.
REFERENCE_TARGETS = {
    "dgp1": {"sbic": {"std": 1.23, "mean": 40.15, "median": 40.0, "skewness": -0.24,
                      "recall": 0.99, "precision": 0.94, "f1": 0.97},
             "mimno": {"std": 9.23, "mean": 47.88, "median": 50.0, "skewness": -1.89}},
    "dgp2": {"sbic": {"std": 1.35, "mean": 12.28, "median": 12.0, "skewness": 0.0}},
    "dgp3": {"sbic": {"std": 4.09, "mean": 65.43, "median": 66.0, "skewness": -0.04}},
}


def preset_names() -> list[str]:
    return sorted(PRESETS)


def make_preset(name: str) -> Dgp:
    """Build the named preset Dgp.

    Topic-word rows are sparse Dirichlet draws mixed with a small uniform floor
    (as smoothing leaves in a fitted model, so no word has zero probability);
    document-topic rows are Dirichlet(0.1) draws. Document lengths are fixed for ``mini`` and
    log-normal around the target mean otherwise. The matching cutoff stored in
    the provenance is the preset's percentile of the pairwise topic
    similarities.
    """
    try:
        spec = PRESETS[name]
    except KeyError:
        raise ValidationError(f"unknown preset {name!r}; choose from {preset_names()}") from None
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, spec.n_docs, spec.vocab_size]))
    beta = rng.dirichlet(np.full(spec.vocab_size, spec.topic_concentration), size=spec.k_true)
    theta = rng.dirichlet(np.full(spec.k_true, spec.doc_concentration), size=spec.n_docs)
    beta = (1.0 - spec.floor) * beta + spec.floor / spec.vocab_size
    beta /= beta.sum(axis=1, keepdims=True)
    theta /= theta.sum(axis=1, keepdims=True)
    if spec.fixed_length:
        lengths = np.full(spec.n_docs, spec.mean_length, dtype=np.int64)
    else:
        sigma = 0.6
        raw = rng.lognormal(np.log(spec.mean_length) - sigma**2 / 2, sigma, size=spec.n_docs)
        lengths = np.maximum(1, np.rint(raw)).astype(np.int64)
    cutoff = float(np.percentile(pairwise_similarities(beta), 100 * spec.percentile))
    provenance = {
        "source": f"preset {name}: Dirichlet({spec.topic_concentration}) topics with floor {spec.floor}, "
                  f"Dirichlet({spec.doc_concentration}) document weights",
        "preset": name,
        "percentile": spec.percentile,
        "cutoff": cutoff,
    }
    return Dgp(beta, theta, lengths, provenance)
