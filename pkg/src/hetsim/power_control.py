"""Distributed power-control maps and their exact oracles.

All updates act on a user-indexed power vector through the effective
interference

    R_i = (sum_{j != i} a[i, j] * p_j + noise_i) / a[i, i],

where ``a`` is the square co-channel gain matrix: ``a[i, j]`` is the gain
from user j's transmitter to user i's serving receiver. The achieved SIR is
``p_i / R_i`` exactly.

Update maps (each user, synchronously):

* ``tpc``     p' = min(p_max, target * R)             target tracking
* ``tpc_gr``  as tpc, but demands q beyond the budget are answered with
              p_max**2 / q (soft removal: power falls as infeasibility grows)
* ``opc``     p' = min(p_max, eta / R)                opportunistic
* ``dtpc``    p' = min(p_max, max(target * R, eta / R))
              selective max: opportunistic branch exactly when
              R < sqrt(eta / target), so supported users keep SIR >= target

``ptpc`` / ``ptpc_gr`` / ``popc`` are the prioritized variants: low-priority
users run the base map clipped by a static interference cap while
high-priority users run plain tpc.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, OracleError
from .network import UPLINK

ALGORITHMS = ("tpc", "tpc_gr", "opc", "dtpc", "ptpc", "ptpc_gr", "popc")
PRIORITIZED_BASE = {"ptpc": "tpc", "ptpc_gr": "tpc_gr", "popc": "opc"}

DEFAULT_MAX_ITERS = 2000
DEFAULT_TOL = 1e-9
DEFAULT_TOL_SUPPORT = 1e-6

# Scale floor for the relative convergence test; only relevant while the
# iterate is still exactly zero.
_SCALE_FLOOR = 1e-30


def tpc_update(r, target, p_max):
    """Track the target SIR, saturating at the power budget."""
    return np.minimum(p_max, target * np.asarray(r, dtype=float))


def tpc_gr_update(r, target, p_max):
    """Target tracking with soft removal: once the demanded power q exceeds
    the budget, transmit p_max**2 / q instead, which decreases toward zero as
    the demand grows."""
    q = target * np.asarray(r, dtype=float)
    return np.where(q <= p_max, q, p_max * p_max / q)


def opc_update(r, eta, p_max):
    """Opportunistic map: power inversely proportional to effective
    interference, capped at the budget."""
    return np.minimum(p_max, eta / np.asarray(r, dtype=float))


def dtpc_update(r, target, eta, p_max):
    """Selective max of the tracking and opportunistic maps."""
    r = np.asarray(r, dtype=float)
    return np.minimum(p_max, np.maximum(target * r, eta / r))


def prioritized_update(base, r, target, eta, p_max, cap, lpue_mask):
    """One synchronous prioritized step: low-priority users run the ``base``
    map clipped at their cap, high-priority users run plain tpc."""
    r = np.asarray(r, dtype=float)
    out = tpc_update(r, target, p_max)
    base_p = _apply_update(base, r, target, eta, p_max)
    lp = np.asarray(lpue_mask, dtype=bool)
    out[lp] = np.minimum(base_p, np.asarray(cap, dtype=float))[lp]
    return out


def _apply_update(algorithm, r, target, eta, p_max):
    if algorithm == "tpc":
        return tpc_update(r, target, p_max)
    if algorithm == "tpc_gr":
        return tpc_gr_update(r, target, p_max)
    if algorithm == "opc":
        return opc_update(r, eta, p_max)
    if algorithm == "dtpc":
        return dtpc_update(r, target, eta, p_max)
    raise ValueError(f"unknown base power-control algorithm {algorithm!r}")


@dataclass
class PowerState:
    """Result of a power-control run (or one synchronous sweep)."""

    p: np.ndarray
    sir: np.ndarray
    target_sir: np.ndarray
    opc_target: np.ndarray
    p_max: np.ndarray
    supported: np.ndarray
    iterations: int
    converged: bool


@dataclass
class PrioritizedCapSet:
    """Static per-user power caps protecting high-priority receivers.

    ``shares[m]`` counts the low-priority users whose full-power interference
    at protected receiver m exceeds ``eps_floor``; each of them receives an
    equal slice of that receiver's interference budget (threshold minus the
    full-power mass of the excluded, below-floor users). Honoring every cap
    therefore keeps aggregate low-priority interference at each protected
    receiver at or below its threshold by construction.

    ``cap`` is per-user, +inf for users the caps do not act on. Users that are
    negligible at every protected receiver keep their own power budget.
    """

    cap: np.ndarray
    thresholds: np.ndarray
    shares: np.ndarray
    protected: np.ndarray
    lpue_index: np.ndarray
    gain_block: np.ndarray
    above_floor: np.ndarray


def prioritized_caps(snapshot, gains, ith, eps_floor=0.0):
    """Equal-share static caps for every low-priority user (uplink only)."""
    if snapshot.direction != UPLINK:
        raise ValueError("prioritized caps are defined for uplink snapshots")
    protected = snapshot.protected_bs_indices()
    lpue_index = np.flatnonzero(snapshot.lpue_mask())
    p_max = snapshot.user_p_max()
    thresholds = np.broadcast_to(
        np.asarray(ith, dtype=float), protected.shape
    ).astype(float)
    if np.any(thresholds <= 0):
        raise ValueError("interference thresholds must be positive")

    n_users = snapshot.n_users
    cap = np.full(n_users, np.inf)
    gain_block = gains.gains[np.ix_(protected, lpue_index)]
    if lpue_index.size == 0 or protected.size == 0:
        return PrioritizedCapSet(
            cap=cap,
            thresholds=thresholds,
            shares=np.zeros(protected.size, dtype=int),
            protected=protected,
            lpue_index=lpue_index,
            gain_block=gain_block,
            above_floor=np.zeros_like(gain_block, dtype=bool),
        )

    max_interference = gain_block * p_max[lpue_index][None, :]
    above = max_interference > eps_floor
    shares = above.sum(axis=1)
    excluded = np.where(above, 0.0, max_interference).sum(axis=1)
    budget = thresholds - excluded
    if np.any((budget <= 0) & (shares > 0)):
        raise NumericError(
            "eps_floor excludes more interference than the threshold allows"
        )

    with np.errstate(divide="ignore", invalid="ignore"):
        candidate = budget[:, None] / (shares[:, None] * gain_block)
    candidate = np.where(above, candidate, np.inf)
    lp_cap = candidate.min(axis=0)
    # users negligible at every protected receiver keep their own budget
    unconstrained = ~above.any(axis=0)
    lp_cap[unconstrained] = p_max[lpue_index][unconstrained]
    cap[lpue_index] = lp_cap
    return PrioritizedCapSet(
        cap=cap,
        thresholds=thresholds,
        shares=shares,
        protected=protected,
        lpue_index=lpue_index,
        gain_block=gain_block,
        above_floor=above,
    )


def effective_interference_all(powers, gains, assoc):
    """R_i for every user under the same conventions as compute_all_sirs."""
    p = np.asarray(powers, dtype=float)
    primary = np.asarray(assoc.primary, dtype=int)
    if assoc.direction == UPLINK:
        rows = gains.gains[primary, :]
        own = rows[np.arange(len(primary)), np.arange(len(primary))]
        interference = rows @ p - own * p
        noise = gains.noise[primary]
    else:
        rows = gains.gains
        own = rows[np.arange(len(primary)), primary]
        interference = rows @ p - own * p[primary]
        noise = gains.noise
    return (interference + noise) / own


def effective_interference(i, powers, gains, assoc):
    """Effective interference of one user; ``sir_i == p_i / R_i`` exactly
    (with ``p_i`` the serving transmitter's power on the downlink)."""
    return float(effective_interference_all(powers, gains, assoc)[i])


def cochannel_system(gains, assoc):
    """Reduce (gains, association) to the square per-user system (a, noise).

    Uplink only: ``a[i, j]`` is the gain from user j to user i's serving
    receiver, and ``noise[i]`` is that receiver's noise power.
    """
    if assoc.direction != UPLINK:
        raise ValueError("the iterated power-control system is uplink-only")
    primary = np.asarray(assoc.primary, dtype=int)
    return gains.gains[primary, :], gains.noise[primary]


def _validate_system(a, noise, targets):
    a = np.asarray(a, dtype=float)
    noise = np.asarray(noise, dtype=float)
    targets = np.asarray(targets, dtype=float)
    n = targets.shape[0]
    if a.shape != (n, n):
        raise ValueError("gain matrix must be square and match targets")
    if not np.all(np.isfinite(a)) or np.any(a < 0):
        raise ValueError("gain matrix entries must be finite and non-negative")
    if np.any(np.diag(a) <= 0):
        raise ValueError("serving-link gains (diagonal) must be positive")
    if noise.shape != (n,) or np.any(noise <= 0) or not np.all(np.isfinite(noise)):
        raise ValueError("noise must be positive and finite, one per user")
    if np.any(targets <= 0) or not np.all(np.isfinite(targets)):
        raise ValueError("target SIRs must be positive and finite")
    return a, noise, targets


def iterate_power_control(
    a,
    noise,
    targets,
    p_max,
    *,
    algorithm="tpc",
    eta=None,
    lpue_mask=None,
    caps=None,
    hpue_algorithm=None,
    cap_mode="static",
    max_iters=DEFAULT_MAX_ITERS,
    tol=DEFAULT_TOL,
    tol_support=DEFAULT_TOL_SUPPORT,
    p0=None,
):
    """Synchronous fixed-point iteration of the chosen update map on a square
    co-channel system, starting from the zero vector.

    Stops when ``||p(t+1) - p(t)||_inf < tol * max(||p(t)||_inf, eps)`` or
    after ``max_iters`` sweeps; non-convergence is flagged on the returned
    state, never raised. ``hpue_algorithm`` overrides the map used by users
    outside ``lpue_mask`` (prioritized algorithms default them to tpc).
    ``cap_mode='closed_loop'`` replaces the static caps with a multiplicative
    back-off (halve on a threshold-crossing command, recover by 1.1x); its
    safety guarantee holds at convergence only.
    """
    a, noise, targets = _validate_system(a, noise, targets)
    n = targets.shape[0]
    p_max = np.broadcast_to(np.asarray(p_max, dtype=float), (n,)).astype(float)
    if np.any(p_max <= 0):
        raise ValueError("power budgets must be positive")
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown power-control algorithm {algorithm!r}")
    prioritized = algorithm in PRIORITIZED_BASE
    base_alg = PRIORITIZED_BASE.get(algorithm, algorithm)
    needs_eta = base_alg in ("opc", "dtpc") or hpue_algorithm in ("opc", "dtpc")
    if needs_eta:
        if eta is None:
            raise ValueError(f"{algorithm} requires the opportunistic target eta")
        eta = np.broadcast_to(np.asarray(eta, dtype=float), (n,)).astype(float)
        if np.any(eta <= 0):
            raise ValueError("eta must be positive")
    if prioritized:
        if lpue_mask is None or caps is None:
            raise ValueError(
                f"{algorithm} needs lpue_mask and caps (see prioritized_caps)"
            )
    if lpue_mask is not None:
        lpue_mask = np.asarray(lpue_mask, dtype=bool)
        if lpue_mask.shape != (n,):
            raise ValueError("lpue_mask must have one flag per user")
    if cap_mode not in ("static", "closed_loop"):
        raise ValueError(f"unknown cap_mode {cap_mode!r}")
    hp_alg = hpue_algorithm or ("tpc" if prioritized else algorithm)
    lp_alg = base_alg

    diag = np.diag(a).copy()
    off = a.copy()
    np.fill_diagonal(off, 0.0)

    p = np.zeros(n) if p0 is None else np.asarray(p0, dtype=float).copy()
    static_cap = None
    if prioritized and cap_mode == "static":
        static_cap = np.asarray(caps.cap, dtype=float)
    limit = None
    if prioritized and cap_mode == "closed_loop":
        limit = p_max.copy()

    converged = False
    iterations = 0
    for it in range(1, max_iters + 1):
        r = (off @ p + noise) / diag
        if lpue_mask is None:
            new = _apply_update(base_alg, r, targets, eta, p_max)
        else:
            new = _apply_update(hp_alg, r, targets, eta, p_max)
            lp_new = _apply_update(lp_alg, r, targets, eta, p_max)
            new[lpue_mask] = lp_new[lpue_mask]
        if static_cap is not None:
            new = np.minimum(new, static_cap)
        elif limit is not None:
            # command issued by every protected receiver whose current
            # low-priority interference exceeds its threshold
            lp_p = p[caps.lpue_index]
            over = (caps.gain_block @ lp_p) > caps.thresholds
            commanded = (caps.above_floor & over[:, None]).any(axis=0)
            lp_limit = limit[caps.lpue_index]
            lp_limit = np.where(
                commanded,
                p[caps.lpue_index] / 2.0,
                np.minimum(p_max[caps.lpue_index], lp_limit * 1.1),
            )
            limit[caps.lpue_index] = lp_limit
            new[caps.lpue_index] = np.minimum(new[caps.lpue_index], lp_limit)
        delta = np.abs(new - p).max() if n else 0.0
        scale = max(np.abs(p).max() if n else 0.0, _SCALE_FLOOR)
        p = new
        iterations = it
        if delta < tol * scale:
            converged = True
            break

    r = (off @ p + noise) / diag
    sir = p / r
    supported = sir >= targets * (1.0 - tol_support)
    return PowerState(
        p=p,
        sir=sir,
        target_sir=targets,
        opc_target=eta if needs_eta else np.zeros(n),
        p_max=p_max,
        supported=supported,
        iterations=iterations,
        converged=converged,
    )


def run_power_control(
    algorithm,
    snapshot,
    gains,
    assoc,
    *,
    max_iters=DEFAULT_MAX_ITERS,
    tol=DEFAULT_TOL,
    tol_support=DEFAULT_TOL_SUPPORT,
    caps=None,
    hpue_algorithm=None,
    cap_mode="static",
):
    """Run the chosen algorithm on an uplink snapshot from p = 0."""
    a, noise = cochannel_system(gains, assoc)
    return iterate_power_control(
        a,
        noise,
        snapshot.user_targets(),
        snapshot.user_p_max(),
        algorithm=algorithm,
        eta=snapshot.user_eta(),
        lpue_mask=snapshot.lpue_mask(),
        caps=caps,
        hpue_algorithm=hpue_algorithm,
        cap_mode=cap_mode,
        max_iters=max_iters,
        tol=tol,
        tol_support=tol_support,
    )


def interference_matrix(a, targets):
    """Normalized interference coupling F with F[i, j] = target_i * a[i, j]
    / a[i, i] off the diagonal; the targets are jointly achievable iff the
    Perron root of F is below one."""
    a = np.asarray(a, dtype=float)
    targets = np.asarray(targets, dtype=float)
    f = targets[:, None] * a / np.diag(a)[:, None]
    np.fill_diagonal(f, 0.0)
    return f


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    spectral_radius: float


def feasibility_check(a, noise, targets, *, tol=1e-10, max_iters=10_000):
    """Perron root of the coupling matrix by shifted power iteration.

    Iterates v <- (F + shift * I) v with the shift tracking the current
    Rayleigh estimate: the shift keeps the iteration aperiodic (the Perron
    root stays dominant for any non-negative coupling) and, scaled to the
    root itself, keeps the relative eigenvalue gap O(1) even when the root
    is tiny. Stops once successive estimates agree to ``tol`` twice in a
    row; raises NumericError with diagnostics if the estimate has not
    stabilized within ``max_iters`` iterations.
    """
    a, noise, targets = _validate_system(a, noise, targets)
    f = interference_matrix(a, targets)
    n = f.shape[0]
    v = np.full(n, 1.0 / np.sqrt(n))
    prev = np.inf
    rho = 0.0
    settled = 0
    for _ in range(max_iters):
        w = f @ v
        rho = float(v @ w)
        # oscillating estimates can cross once; demand two agreements in a row
        if abs(rho - prev) <= tol * max(1.0, abs(rho)):
            settled += 1
            if settled >= 2:
                return FeasibilityResult(feasible=rho < 1.0, spectral_radius=rho)
        else:
            settled = 0
        prev = rho
        shifted = w + (rho if rho > 0 else 1.0) * v
        shifted = shifted / shifted.max()   # pre-scale: the L2 norm of a
        v = shifted / np.linalg.norm(shifted)  # tiny-rho iterate underflows
    raise NumericError(
        f"power iteration stagnated after {max_iters} iterations "
        f"(last estimates {prev:.12e} -> {rho:.12e})"
    )


def fixed_point_oracle(a, noise, targets):
    """Exact uncapped target-tracking fixed point by direct linear solve of
    (I - F) p = u with u_i = target_i * noise_i / a[i, i].

    This is the minimal power vector meeting every target. Raises OracleError
    for infeasible targets or a singular system.
    """
    a, noise, targets = _validate_system(a, noise, targets)
    check = feasibility_check(a, noise, targets)
    if not check.feasible:
        raise OracleError(
            f"targets infeasible: spectral radius {check.spectral_radius:.6g} >= 1"
        )
    f = interference_matrix(a, targets)
    u = targets * noise / np.diag(a)
    try:
        p = np.linalg.solve(np.eye(len(u)) - f, u)
    except np.linalg.LinAlgError as exc:
        raise OracleError(f"singular co-channel system: {exc}") from exc
    if np.any(p <= 0) or not np.all(np.isfinite(p)):
        raise OracleError("oracle produced a non-positive power vector")
    return p


@dataclass(frozen=True)
class Instance:
    """A random square co-channel system for oracle cross-checks."""

    a: np.ndarray
    noise: np.ndarray
    targets: np.ndarray
    eta: np.ndarray


def sample_instance(rng, n_users=None):
    """Draw a small random co-channel instance. Cross gains get a per-instance
    log-uniform scale so both feasible and infeasible systems occur."""
    n = int(n_users) if n_users is not None else int(rng.integers(2, 9))
    scale = 10.0 ** rng.uniform(np.log10(5e-3), np.log10(0.6))
    a = scale * rng.uniform(0.0, 1.0, size=(n, n))
    np.fill_diagonal(a, rng.uniform(0.5, 1.5, size=n))
    return Instance(
        a=a,
        noise=rng.uniform(0.01, 0.1, size=n),
        targets=rng.uniform(0.5, 2.0, size=n),
        eta=10.0 ** rng.uniform(-3.0, -1.0, size=n),
    )


def sample_feasible_instance(rng, n_users=None, rho_max=0.9):
    """Rejection-sample an instance whose coupling spectral radius (checked
    independently via dense eigenvalues) stays below ``rho_max``."""
    while True:
        inst = sample_instance(rng, n_users)
        f = interference_matrix(inst.a, inst.targets)
        if np.abs(np.linalg.eigvals(f)).max() < rho_max:
            return inst
