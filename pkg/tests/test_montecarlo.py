import numpy as np
import pytest
from scipy.stats import norm

from bucksim import (ConfigError, DomainError, McConfig, bad_event_probs,
                     distance_moment, gaussian_tail, gaussian_tail_bound,
                     sweep, wilson_interval)
from bucksim.montecarlo import CSV_COLUMNS


def test_gaussian_tail_examples():
    assert gaussian_tail(0.0) == 0.5
    assert abs(gaussian_tail(1.959964) - 0.025) <= 1e-6
    with pytest.raises(DomainError):
        gaussian_tail(-0.1)


def test_gaussian_tail_relative_accuracy():
    # Independent route: scipy.stats.norm.sf uses ndtr, not erfc.
    xs = np.linspace(0.0, 8.0, 81)
    ours = gaussian_tail(xs)
    ref = norm.sf(xs)
    rel = np.abs(ours - ref) / ref
    assert rel.max() <= 1e-12


def test_gaussian_tail_bound_dominates_on_grid():
    xs = np.arange(1.0, 6.0 + 1e-9, 0.5)
    assert np.all(gaussian_tail(xs) <= gaussian_tail_bound(xs))


def test_gaussian_tail_decreasing():
    xs = np.linspace(0.0, 6.0, 61)
    assert np.all(np.diff(gaussian_tail(xs)) < 0.0)


def test_wilson_interval_edges():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and 0.0 < hi < 0.05
    lo, hi = wilson_interval(100, 100)
    assert hi == 1.0 and 0.95 < lo < 1.0
    lo, hi = wilson_interval(5, 10)
    assert lo < 0.5 < hi


def test_mcconfig_validation():
    ok = McConfig(epsilons=(0.1,), nu=0.0, varsigma=0.8)
    ok.validate()
    with pytest.raises(ConfigError):
        McConfig(epsilons=(0.1,), nu=0.7).validate()
    with pytest.raises(ConfigError):
        McConfig(epsilons=(0.1,), nu=0.3, varsigma=0.2).validate()
    with pytest.raises(ConfigError):
        McConfig(epsilons=(0.1,), varsigma=1.0).validate()
    with pytest.raises(ConfigError):
        McConfig(epsilons=(-0.1,)).validate()
    with pytest.raises(ConfigError):
        McConfig(epsilons=(0.1,), dt=3e-4).validate()
    with pytest.raises(ConfigError):
        McConfig(epsilons=(0.1,), frak_t=0).validate()


def test_horizon_scaling_rule():
    cfg = McConfig(epsilons=(0.04,), nu=0.5, varsigma=0.8, frak_t=10)
    assert cfg.horizon_for(0.04) == 50
    assert cfg.horizon_for(0.0) == 10
    capped = McConfig(epsilons=(0.04,), nu=0.5, varsigma=0.8, frak_t=10, t_cap=20)
    assert capped.horizon_for(0.04) == 20
    flat = McConfig(epsilons=(0.1,), nu=0.0, varsigma=0.8, frak_t=7)
    assert flat.horizon_for(0.1) == 7
    assert flat.delta_for(0.1) == pytest.approx(0.1 ** 0.8, abs=1e-15)
    assert flat.delta_for(0.0) == 0.0


def _small_cfg(**kw):
    base = dict(epsilons=(0.1,), nu=0.0, varsigma=0.8, frak_t=3, p=1.0,
                replicas=200, dt=1e-2, seed=7, batch_size=64)
    base.update(kw)
    return McConfig(**base)


def test_bad_events_zero_noise(p0, dc0):
    cfg = _small_cfg(epsilons=(0.0,))
    tab = bad_event_probs(p0, dc0, cfg, 0.0)
    assert np.all(tab.emp_prob == 0.0)
    assert tab.good_freq == 1.0
    assert tab.bound == 0.0


def test_bad_events_structure(p0, dc0):
    cfg = _small_cfg()
    tab = bad_event_probs(p0, dc0, cfg, 0.1)
    assert tab.t_eps == 3
    assert tab.delta == pytest.approx(0.1 ** 0.8)
    # decomposition: good + sum of disjoint first-bad counts == replicas
    total_bad = tab.emp_prob.sum() * tab.replicas
    assert tab.good_freq * tab.replicas + total_bad == tab.replicas
    assert tab.union_prob == pytest.approx(tab.emp_prob.sum(), abs=1e-12)
    # split is a partition of each first-bad count
    np.testing.assert_allclose(tab.emp_minus + tab.emp_plus, tab.emp_prob, atol=1e-15)
    # bound is definitional
    assert tab.bound == pytest.approx(3.0 * gaussian_tail(dc0.k * tab.delta / 0.1))
    assert tab.bound_minus == pytest.approx(2.0 * gaussian_tail(dc0.k_minus * tab.delta / 0.1))
    assert tab.bound_plus == pytest.approx(gaussian_tail(dc0.k_plus * tab.delta / 0.1))
    assert np.all(tab.wilson_lo <= tab.emp_prob + 1e-12)
    assert np.all(tab.emp_prob <= tab.wilson_hi + 1e-12)
    assert tab.delta_within_dplus == (tab.delta < dc0.delta_plus)


def test_bad_event_first_cycle_monotone_in_eps(p0, dc0):
    cfg = McConfig(epsilons=(0.1, 0.05, 0.02), nu=0.0, varsigma=0.8, frak_t=1,
                   p=1.0, replicas=2000, dt=1e-2, seed=11, batch_size=512)
    p_first = [bad_event_probs(p0, dc0, cfg, e).emp_prob[0] for e in cfg.epsilons]
    assert p_first[0] > p_first[1] > p_first[2]


def test_distance_moment_zero_noise_is_exactly_zero(p0, dc0):
    cfg = _small_cfg(epsilons=(0.0,))
    mom = distance_moment(p0, dc0, cfg, 0.0)
    assert mom.moment == 0.0 and mom.se == 0.0 and mom.mean_d == 0.0
    assert mom.good_freq == 1.0


def test_distance_moment_basic(p0, dc0):
    cfg = _small_cfg(replicas=100)
    mom = distance_moment(p0, dc0, cfg, 0.1)
    assert mom.moment > 0.0
    assert mom.se > 0.0
    assert 0.0 <= mom.good_freq <= 1.0
    assert mom.q90 <= mom.q99 + 1e-15


def test_sweep_report_rows_and_csv(p0, dc0):
    cfg = _small_cfg(epsilons=(0.1, 0.0), replicas=50)
    rep = sweep(p0, dc0, cfg)
    assert len(rep.rows) == 2 * 3  # two eps rows, T_eps = 3 cycles each
    text = rep.to_csv_text()
    lines = text.strip().split("\n")
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 1 + len(rep.rows)
    summary = rep.summary()
    assert len(summary["per_epsilon"]) == 2
    assert summary["all_bounds_ok"] in (True, False)


def test_sweep_empty_grid_ok(p0, dc0):
    cfg = _small_cfg(epsilons=())
    rep = sweep(p0, dc0, cfg)
    assert rep.rows == []
    assert rep.to_csv_text().strip() == ",".join(CSV_COLUMNS)
    assert rep.summary()["per_epsilon"] == []


def test_sweep_deterministic_and_worker_independent(p0, dc0):
    base = dict(epsilons=(0.05,), nu=0.0, varsigma=0.8, frak_t=2, p=1.0,
                replicas=64, dt=1e-2, seed=13, batch_size=16)
    a = sweep(p0, dc0, McConfig(workers=1, **base)).to_csv_text()
    b = sweep(p0, dc0, McConfig(workers=1, **base)).to_csv_text()
    c = sweep(p0, dc0, McConfig(workers=2, **base)).to_csv_text()
    assert a == b == c


def test_good_event_constructive_pieces(p0, dc0):
    # On good replicas with delta <= t_min / (4 T): the aligning deformation
    # obeys the distortion cap and matches the mode components everywhere.
    from bucksim import (StochConfig, align_schedules, simulate_batch,
                         simulate_det)
    T = 10
    eps = 0.003
    delta = eps ** 0.8
    assert delta <= dc0.t_min / (4.0 * T)
    cap = 4.0 * T * delta / dc0.t_min
    det = simulate_det(p0, (dc0.x_star, 1), T)
    det_t = det.schedule.on_to_off
    cfg = StochConfig(epsilon=eps, dt=1e-3, horizon=T, seed=31)
    res = simulate_batch(p0, dc0.x_star, cfg, range(50), record_paths=True)
    grid = np.arange(0.0, float(T) + 1e-12, 1e-2)
    _, y_det = det.eval(grid)
    good = 0
    for b, sched in enumerate(res.schedules):
        if len(sched.taus) != T or np.abs(sched.taus - det_t).max() > delta:
            continue
        good += 1
        lam = align_schedules(det.schedule, sched, float(T))
        assert lam is not None
        assert lam.distortion() <= cap
        from bucksim.stochastic import eval_sampled_path
        _, y_st = eval_sampled_path(res.grid_t, res.xs[b], sched.taus,
                                    sched.sigmas, p0.x_ref,
                                    np.clip(lam(grid), 0.0, float(T)))
        assert np.array_equal(y_det, y_st)
    assert good >= 45  # nearly all replicas are good at this noise level


def test_growing_horizon_moment_decay(p0, dc0):
    # Horizons grow like 1/eps^0.3 while the estimates still collapse.
    cfg = McConfig(epsilons=(0.1, 0.05, 0.02), nu=0.3, varsigma=0.6, frak_t=4,
                   p=1.0, replicas=1000, dt=1e-3, seed=19, batch_size=512)
    assert cfg.horizon_for(0.1) == 7
    assert cfg.horizon_for(0.02) == 12
    m_big = distance_moment(p0, dc0, cfg, 0.1)
    m_small = distance_moment(p0, dc0, cfg, 0.02)
    assert m_small.moment <= 0.5 * m_big.moment


def test_good_event_requires_all_cycles(p0, dc0):
    # Missing cycles count as late violations at the first absent index.
    from bucksim.montecarlo import _first_bad_cycle
    det_t = np.array([0.4, 1.4, 2.4])
    n, sign = _first_bad_cycle(det_t, np.array([0.41]), 0.05, 3)
    assert (n, sign) == (2, +1)
    n, sign = _first_bad_cycle(det_t, np.array([0.3, 1.38, 2.41]), 0.05, 3)
    assert (n, sign) == (1, -1)
    n, sign = _first_bad_cycle(det_t, np.array([0.41, 1.38, 2.41]), 0.05, 3)
    assert (n, sign) == (0, 0)
