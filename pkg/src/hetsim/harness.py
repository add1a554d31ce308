"""End-to-end snapshot pipeline, Monte Carlo aggregation, and the two
shipped experiment presets.

A snapshot run is the deterministic pipeline

    generate -> gains -> associate -> (prioritized caps) -> power control
             -> metrics

and a Monte Carlo experiment averages snapshot metrics over
``cfg.snapshots`` seeds (base_seed + index) for every sweep point and
algorithm/scheme variant. Snapshots are independent jobs; with ``jobs > 1``
they run in a process pool and results are merged by seed index, so reports
are identical for any job count.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .association import (
    AssociationMap,
    associate,
    candidate_effective_interference,
    score_matrix,
)
from .config import SimConfig
from .errors import NumericError
from .network import (
    DOWNLINK,
    HPUE,
    LPUE,
    UPLINK,
    build_gain_matrix,
    generate_fig2_snapshot,
    generate_fig3_snapshot,
)
from .power_control import (
    PRIORITIZED_BASE,
    cochannel_system,
    iterate_power_control,
    prioritized_caps,
)
from .scheduling import CellLoad, access_probability, cell_loads

FIG2_ALGORITHMS = ("tpc", "tpc_gr", "ptpc", "ptpc_gr")
FIG3_SCHEMES = ("distance", "resource", "hybrid")

# Relative slack allowed on the prioritized interference bound; anything
# beyond floating-point accumulation noise is a real violation.
SAFETY_REL_SLACK = 1e-12


@dataclass(frozen=True)
class SnapshotResult:
    """Metrics of one (snapshot, variant) run."""

    seed: int
    sweep_value: int
    variant: str
    converged: bool
    iterations: int
    hpue_outage: float | None
    lpue_outage: float | None
    agg_power_w: float
    agg_throughput_bps_hz: float
    spectral_eff_bps_hz: float | None
    safety_margin_w: float | None = None


@dataclass(frozen=True)
class MetricsRow:
    experiment: str
    sweep_param: str
    sweep_value: int
    algorithm: str
    scheme: str
    direction: str
    seed_count: int
    hpue_outage: float | None
    lpue_outage: float | None
    agg_power_w: float
    agg_throughput_bps_hz: float
    spectral_eff_bps_hz: float | None
    convergence_rate: float
    seeds: tuple[int, ...]


@dataclass
class MetricsReport:
    experiment: str
    rows: list[MetricsRow]
    config: SimConfig
    raw: dict | None = None


def outage_ratio(state, snapshot, tier):
    """Fraction of the tier's users whose SIR misses their target, or None
    for an empty tier (absent, not zero)."""
    if tier not in (HPUE, LPUE):
        raise ValueError(f"unknown tier {tier!r}")
    mask = np.array([u.priority == tier for u in snapshot.users], dtype=bool)
    if not mask.any():
        return None
    return float((~state.supported[mask]).sum() / mask.sum())


def throughput_metrics(state, access_probs=None, users=None):
    """Per-user rates log2(1 + SIR); returns (aggregate rate, spectral
    efficiency). Spectral efficiency is the access-probability-weighted rate
    averaged over the selected users, None when no access context is given.
    ``state`` may be a PowerState or a plain SIR array."""
    sirs = np.asarray(getattr(state, "sir", state), dtype=float)
    rates = np.log2(1.0 + sirs)
    idx = np.arange(len(rates)) if users is None else np.asarray(users, dtype=int)
    aggregate = float(rates[idx].sum())
    if access_probs is None:
        return aggregate, None
    access = np.asarray(access_probs, dtype=float)
    return aggregate, float(np.mean(access[idx] * rates[idx]))


def lpue_interference(snapshot, gains, p):
    """Aggregate low-priority interference at each protected receiver."""
    protected = snapshot.protected_bs_indices()
    lp = np.flatnonzero(snapshot.lpue_mask())
    block = gains.gains[np.ix_(protected, lp)]
    return protected, block @ np.asarray(p, dtype=float)[lp]


def _check_safety(caps, state, seed):
    """Embedded prioritized-safety assertion; returns the worst margin."""
    agg = caps.gain_block @ state.p[caps.lpue_index]
    margin = float((agg - caps.thresholds).max()) if agg.size else 0.0
    bound = float((SAFETY_REL_SLACK * caps.thresholds).min()) if agg.size else 0.0
    if margin > bound:
        raise NumericError(
            f"prioritized cap violated by {margin:.3e} W (seed={seed})"
        )
    return margin


def _grid_snapshot_results(cfg, n_small, seed, algorithms, hpue_algorithm=None):
    """One grid snapshot evaluated under several power-control algorithms
    (shared topology, gains, and association)."""
    snapshot = generate_fig2_snapshot(cfg, n_small, seed)
    gains = build_gain_matrix(snapshot, cfg)
    assoc = associate(
        snapshot,
        gains,
        cfg.assoc_uplink,
        UPLINK,
        bias_db=cfg.bias_db,
        epsilon=cfg.epsilon,
    )
    caps = None
    if any(alg in PRIORITIZED_BASE for alg in algorithms):
        caps = prioritized_caps(snapshot, gains, cfg.ith_w)
    a, noise = cochannel_system(gains, assoc)
    targets = snapshot.user_targets()
    p_max = snapshot.user_p_max()
    eta = snapshot.user_eta()
    lpue_mask = snapshot.lpue_mask()

    results = {}
    for alg in algorithms:
        prioritized = alg in PRIORITIZED_BASE
        state = iterate_power_control(
            a,
            noise,
            targets,
            p_max,
            algorithm=alg,
            eta=eta,
            lpue_mask=lpue_mask,
            caps=caps if prioritized else None,
            hpue_algorithm=hpue_algorithm,
            max_iters=cfg.max_iters,
            tol=cfg.tol,
            tol_support=cfg.tol_support,
        )
        margin = _check_safety(caps, state, seed) if prioritized else None
        aggregate, _ = throughput_metrics(state)
        results[alg] = SnapshotResult(
            seed=seed,
            sweep_value=n_small,
            variant=alg,
            converged=state.converged,
            iterations=state.iterations,
            hpue_outage=outage_ratio(state, snapshot, HPUE),
            lpue_outage=outage_ratio(state, snapshot, LPUE),
            agg_power_w=float(state.p.sum()),
            agg_throughput_bps_hz=aggregate,
            spectral_eff_bps_hz=None,
            safety_margin_w=margin,
        )
    return results


def _disc_snapshot_results(cfg, n_small, seed, schemes):
    """One disc snapshot: the tagged macro user (user 0) picks a cell per
    scheme; its spectral efficiency is the access probability of the chosen
    cell times log2(1 + SIR), with every other base station transmitting at
    full power."""
    snapshot = generate_fig3_snapshot(cfg, n_small, seed)
    gains = build_gain_matrix(snapshot, cfg)
    counts = cell_loads(snapshot, exclude_user=0)
    p_access = np.array(
        [
            access_probability(CellLoad(b, int(n), cfg.scheduler))
            for b, n in enumerate(counts)
        ]
    )
    bs_powers = snapshot.bs_tx_power()
    g0 = gains.gains[0]
    total = float(g0 @ bs_powers)

    results = {}
    for scheme in schemes:
        if scheme == "home":
            chosen = int(snapshot.users[0].home_bs)
        else:
            scores = score_matrix(
                snapshot, gains, scheme, access_prob=p_access, bias_db=cfg.bias_db
            )[0]
            chosen = int(np.argmax(scores))
        signal = float(g0[chosen] * bs_powers[chosen])
        sir = signal / (total - signal + gains.noise[0])
        rate, se = throughput_metrics(
            np.array([sir]), access_probs=np.array([p_access[chosen]])
        )
        results[scheme] = SnapshotResult(
            seed=seed,
            sweep_value=n_small,
            variant=scheme,
            converged=True,
            iterations=0,
            hpue_outage=None,
            lpue_outage=None,
            agg_power_w=float(bs_powers.sum()),
            agg_throughput_bps_hz=rate,
            spectral_eff_bps_hz=se,
        )
    return results


def run_snapshot(cfg, sweep_point, seed):
    """Single-variant pipeline for one snapshot: the configured algorithm on
    the grid geometry, or the configured downlink scheme on the disc."""
    if cfg.geometry == "grid":
        return _grid_snapshot_results(cfg, sweep_point, seed, (cfg.pc_algorithm,))[
            cfg.pc_algorithm
        ]
    return _disc_snapshot_results(cfg, sweep_point, seed, (cfg.assoc_downlink,))[
        cfg.assoc_downlink
    ]


def _grid_job(payload):
    cfg, n_small, seed_index, algorithms, hpue_algorithm = payload
    seed = cfg.base_seed + seed_index
    return (
        (n_small, seed_index),
        _grid_snapshot_results(cfg, n_small, seed, algorithms, hpue_algorithm),
    )


def _disc_job(payload):
    cfg, n_small, seed_index, schemes = payload
    seed = cfg.base_seed + seed_index
    return (
        (n_small, seed_index),
        _disc_snapshot_results(cfg, n_small, seed, schemes),
    )


def _run_jobs(payloads, worker, jobs):
    if jobs <= 1:
        return dict(worker(p) for p in payloads)
    out = {}
    chunk = max(1, len(payloads) // (jobs * 8))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for key, value in pool.map(worker, payloads, chunksize=chunk):
            out[key] = value
    return out


def _mean_opt(values):
    present = [v for v in values if v is not None]
    if not present:
        return None
    return float(np.mean(present))


def _aggregate(experiment, cfg, variants, by_key, *, direction, variant_kind):
    """Seed-ordered averaging; deterministic and independent of the order in
    which snapshot jobs completed."""
    seeds = tuple(cfg.base_seed + k for k in range(cfg.snapshots))
    rows = []
    raw = {}
    for point in cfg.sweep:
        for variant in variants:
            per_seed = [by_key[(point, k)][variant] for k in range(cfg.snapshots)]
            raw[(point, variant)] = tuple(per_seed)
            if variant_kind == "algorithm":
                algorithm, scheme = variant, cfg.assoc_uplink
            else:
                algorithm, scheme = "none", variant
            rows.append(
                MetricsRow(
                    experiment=experiment,
                    sweep_param="n_small",
                    sweep_value=point,
                    algorithm=algorithm,
                    scheme=scheme,
                    direction=direction,
                    seed_count=cfg.snapshots,
                    hpue_outage=_mean_opt([r.hpue_outage for r in per_seed]),
                    lpue_outage=_mean_opt([r.lpue_outage for r in per_seed]),
                    agg_power_w=float(
                        np.mean([r.agg_power_w for r in per_seed])
                    ),
                    agg_throughput_bps_hz=float(
                        np.mean([r.agg_throughput_bps_hz for r in per_seed])
                    ),
                    spectral_eff_bps_hz=_mean_opt(
                        [r.spectral_eff_bps_hz for r in per_seed]
                    ),
                    convergence_rate=float(
                        np.mean([1.0 if r.converged else 0.0 for r in per_seed])
                    ),
                    seeds=seeds,
                )
            )
    return rows, raw


def run_grid_experiment(
    cfg,
    algorithms=None,
    *,
    hpue_algorithm=None,
    jobs=1,
    experiment="sweep",
    keep_snapshots=False,
):
    """Monte Carlo sweep of the uplink grid scenario."""
    cfg = dataclasses.replace(cfg, geometry="grid").validate()
    algorithms = tuple(algorithms or (cfg.pc_algorithm,))
    payloads = [
        (cfg, point, k, algorithms, hpue_algorithm)
        for point in cfg.sweep
        for k in range(cfg.snapshots)
    ]
    by_key = _run_jobs(payloads, _grid_job, jobs)
    rows, raw = _aggregate(
        experiment,
        cfg,
        algorithms,
        by_key,
        direction=UPLINK,
        variant_kind="algorithm",
    )
    return MetricsReport(
        experiment=experiment,
        rows=rows,
        config=cfg,
        raw=raw if keep_snapshots else None,
    )


def run_disc_experiment(
    cfg, schemes=None, *, jobs=1, experiment="sweep", keep_snapshots=False
):
    """Monte Carlo sweep of the downlink disc scenario."""
    cfg = dataclasses.replace(cfg, geometry="disc").validate()
    schemes = tuple(schemes or (cfg.assoc_downlink,))
    payloads = [
        (cfg, point, k, schemes)
        for point in cfg.sweep
        for k in range(cfg.snapshots)
    ]
    by_key = _run_jobs(payloads, _disc_job, jobs)
    rows, raw = _aggregate(
        experiment,
        cfg,
        schemes,
        by_key,
        direction=DOWNLINK,
        variant_kind="scheme",
    )
    return MetricsReport(
        experiment=experiment,
        rows=rows,
        config=cfg,
        raw=raw if keep_snapshots else None,
    )


def experiment_fig2(cfg, jobs=1, keep_snapshots=False):
    """Grid outage comparison: low-priority users run tpc / tpc_gr / ptpc /
    ptpc_gr while high-priority users always track their targets with tpc."""
    return run_grid_experiment(
        cfg,
        FIG2_ALGORITHMS,
        hpue_algorithm="tpc",
        jobs=jobs,
        experiment="fig2",
        keep_snapshots=keep_snapshots,
    )


def experiment_fig3(cfg, jobs=1, keep_snapshots=False):
    """Disc spectral-efficiency comparison of the distance-aware,
    resource-aware, and hybrid association schemes."""
    return run_disc_experiment(
        cfg,
        FIG3_SCHEMES,
        jobs=jobs,
        experiment="fig3",
        keep_snapshots=keep_snapshots,
    )


def run_monte_carlo(cfg, jobs=1, keep_snapshots=False):
    """Sweep the configured single variant over cfg.sweep."""
    if cfg.geometry == "grid":
        return run_grid_experiment(
            cfg, jobs=jobs, keep_snapshots=keep_snapshots
        )
    return run_disc_experiment(cfg, jobs=jobs, keep_snapshots=keep_snapshots)


def run_joint_capc(
    snapshot,
    gains,
    *,
    algorithm="tpc",
    reassoc_every=5,
    max_rounds=400,
    tol=1e-9,
    tol_support=1e-6,
):
    """Alternate minimum-effective-interference association with power
    control: re-associate from live powers every ``reassoc_every`` sweeps and
    stop once both the map and the power vector are stable. ``dtpc`` is the
    hybrid tracking/opportunistic map."""
    if snapshot.direction != UPLINK:
        raise ValueError("joint association/power control runs on the uplink")
    if algorithm not in ("tpc", "dtpc"):
        raise ValueError(f"joint mode supports tpc or dtpc, got {algorithm!r}")
    n = snapshot.n_users
    p = np.zeros(n)
    targets = snapshot.user_targets()
    p_max = snapshot.user_p_max()
    eta = snapshot.user_eta()
    assoc_prev = None
    state = None
    total_iters = 0
    for _ in range(max_rounds):
        r = candidate_effective_interference(snapshot, gains, powers=p)
        primary = tuple(int(b) for b in np.argmin(r, axis=1))
        assoc = AssociationMap(
            direction=UPLINK,
            scheme="mei",
            serving=tuple((b,) for b in primary),
            primary=primary,
        )
        a, noise = cochannel_system(gains, assoc)
        state = iterate_power_control(
            a,
            noise,
            targets,
            p_max,
            algorithm=algorithm,
            eta=eta,
            max_iters=reassoc_every,
            tol=tol,
            tol_support=tol_support,
            p0=p,
        )
        total_iters += state.iterations
        p = state.p
        if assoc == assoc_prev and state.converged:
            state = dataclasses.replace(state, iterations=total_iters)
            return assoc, state
        assoc_prev = assoc
    state = dataclasses.replace(
        state, iterations=total_iters, converged=False
    )
    return assoc_prev, state


def multiconnect_split_rates(p, snapshot, gains, assoc):
    """Equal time-split rate across each user's serving set: the mean over
    set members of log2(1 + SIR on that member link) at the given powers."""
    r = candidate_effective_interference(snapshot, gains, powers=p)
    p = np.asarray(p, dtype=float)
    rates = np.zeros(snapshot.n_users)
    for i, members in enumerate(assoc.serving):
        cols = np.asarray(members, dtype=int)
        tx_power = p[i] if snapshot.direction == UPLINK else p[cols]
        rates[i] = float(np.mean(np.log2(1.0 + tx_power / r[i, cols])))
    return rates
