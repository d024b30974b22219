import json
import math

import numpy as np
import pytest

from vorpoly import experiments, stats
from vorpoly.experiments import ConfigError, ExperimentConfig, run, run_report


def _cfg(**kw):
    base = dict(experiment="t1-min", r=(2, 3, 4), s=(4,), replicates=100, seed=3)
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_validation():
    with pytest.raises(ConfigError):
        _cfg(experiment="nope")
    with pytest.raises(ConfigError):
        _cfg(replicates=10)
    with pytest.raises(ConfigError):
        _cfg(r=())
    with pytest.raises(ConfigError):
        _cfg(n=8)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "t1-min", "r": [1], "s": [1], "bogus": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json("{not json")


def test_config_json_round_trip():
    cfg = _cfg(n=16, delta=0.5)
    back = ExperimentConfig.from_json(cfg.to_json())
    assert back == cfg
    assert json.loads(cfg.to_json())["schema"] == experiments.SCHEMA_VERSION


def test_run_is_byte_identical():
    cfg = _cfg()
    a = stats.to_csv(run(cfg))
    b = stats.to_csv(run(cfg))
    assert a == b


def test_replicates_are_order_independent():
    cfg = _cfg()
    whole = experiments._chunk(cfg, range(100))
    parts = [experiments._chunk(cfg, range(a, a + 25)) for a in (75, 0, 50, 25)]
    assert np.array_equal(whole[0], sum(p[0] for p in parts))
    assert whole[1] == sum(p[1] for p in parts)


def test_hits_match_direct_computation():
    from vorpoly import polyomino

    cfg = _cfg(replicates=100)
    rep = run_report(cfg)
    direct = np.zeros(3, dtype=int)
    for k in range(100):
        t = polyomino.Tiling(experiments.environment(cfg, k))
        ex = polyomino.cover_extremes(t, 4)
        direct += [ex.mins[r - 1] <= 4 for r in (2, 3, 4)]
    assert [e.hits for e in rep.estimates] == direct.tolist()
    assert rep.invariants.checked > 0 and not rep.invariants.failures


@pytest.mark.parametrize("exp,grid", [
    ("t1-max", dict(r=(2,), s=(8, 10))),
    ("c1-paths", dict(r=(2, 4), s=(4,))),
    ("t2-inverse", dict(r=(4, 6), s=(1, 2))),
    ("c2-segment", dict(r=(3, 5), s=(1, 2))),
    ("thm4-reward", dict(r=(2, 4), s=(0,), p=(0.7,))),
])
def test_each_experiment_runs(exp, grid):
    rep = run_report(ExperimentConfig(experiment=exp, replicates=100, seed=1, **grid))
    assert rep.passed and len(rep.estimates) == len(rep.config.grid())
    assert experiments.monotone_hits(rep.estimates)


def test_modified_environment_is_aligned():
    cfg = _cfg(n=16, delta=0.5)
    pts = experiments.environment(cfg, 0)
    from vorpoly.modified import verify_modified_invariants
    assert verify_modified_invariants(pts, cfg.modified).passed
    assert pts.window.hi[0] >= cfg.core_half + cfg.margin


def test_bound_only_in_tail_regime():
    cfg = ExperimentConfig(experiment="lemma1", r=(5, 40), s=(1,), replicates=100)
    b1 = experiments.lattice.lemma1_bound_constant(2)
    ests = run(cfg)
    assert math.isnan(ests[0].bound)
    assert 40 >= b1 and math.isclose(ests[1].bound, math.exp(-20))


def test_lemma1_shards_merge():
    cfg = ExperimentConfig(experiment="lemma1", r=(2, 3), s=(1, 2), replicates=100)
    a = experiments.lemma1_shard(cfg, 0, 60)
    b = experiments.lemma1_shard(cfg, 1, 40)
    merged = stats.merge_all(a + b)
    assert [e.n_rep for e in merged] == [100] * 4


def test_lemma1_single_box_is_poisson():
    cfg = ExperimentConfig(experiment="lemma1", r=(1, 2, 3), s=(1,), replicates=20000, seed=2)
    for e in run(cfg):
        lo, hi = e.ci
        exact = e.extra["exact_single_box"]
        assert lo - 0.005 <= exact <= hi + 0.005


def test_lemma2_and_lemma5_rows():
    l2 = run(ExperimentConfig(experiment="lemma2", r=(1,), s=(4,), p=(0.9,), replicates=200))
    assert l2[0].passed
    l5 = run(ExperimentConfig(experiment="lemma5", r=(1,), s=(3,), L=18.0, lam=3.0, replicates=100))
    assert "p_marginal" in l5[0].extra


def test_confinement_suite_small():
    res = experiments.confinement_suite(5.0, 2.0, 20, seed=1)
    assert res.passed and res.checked == 20


def test_modified_suite_small():
    reports, alt, tot, prob = experiments.modified_suite(16, 0.5, 1.0, 3, half=10.0)
    assert all(r.passed for r in reports)
    assert 0 < alt < tot and 0 < prob < 1


def test_decay_fits_and_monotone():
    ests = [stats.TailEstimate("t1-min", h, 100, r=r, s=5) for r, h in zip(range(1, 6), [80, 40, 20, 9, 4])]
    fits = experiments.decay_fits(ests)
    (key, fit), = fits.items()
    assert key[0] == "t1-min" and key[1] == "r" and fit.slope < 0 and fit.r2 > 0.95
    assert experiments.monotone_hits(ests)
    assert not experiments.monotone_hits(ests[:2] + [stats.TailEstimate("t1-min", 50, 100, r=3, s=5)])


def test_suite_configs_are_valid():
    for n in (None, 8, 16, 32):
        for cfg in experiments.suite_configs(n, replicates=100):
            assert cfg.grid()
