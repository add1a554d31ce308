"""Topology snapshots and deterministic path-loss channel gains.

Two snapshot geometries are supported:

* ``grid``: a square block of macro cells, each overlaid with non-overlapping
  square small cells. Uplink scenario; macro users have high priority, small
  cell users low priority.
* ``disc``: one circular macro cell overlaid with uniformly dropped small
  cells whose user counts follow per-cell Poisson loads with randomized
  intensities. Downlink scenario with a single tagged macro user (user 0).

Propagation is bounded power-law path loss on a single shared channel, so
every co-direction transmitter interferes at every receiver. There is no
fading in the gain matrix; the only randomness is in node placement and cell
loads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GenerationError

MACRO = "macro"
SMALL = "small"
HIGH = "high"
LOW = "low"
HPUE = "hpue"
LPUE = "lpue"
UPLINK = "uplink"
DOWNLINK = "downlink"

# Rejection-sampling budget for packing small cells into one macro cell.
PLACEMENT_RETRIES = 10_000


@dataclass(frozen=True)
class BaseStation:
    """One base station. ``cell_extent`` is the square side (grid geometry)
    or the disc radius (disc geometry) of the area its users are drawn from."""

    id: int
    tier: str
    priority: str
    position: tuple[float, float]
    tx_power: float
    cell_extent: float


@dataclass(frozen=True)
class UserTerminal:
    id: int
    home_bs: int
    priority: str
    position: tuple[float, float]
    p_max: float
    target_sir: float
    opc_target: float


@dataclass(frozen=True)
class NetworkSnapshot:
    """One realized topology. Base station ids equal their list index."""

    base_stations: tuple[BaseStation, ...]
    users: tuple[UserTerminal, ...]
    direction: str
    seed: int
    geometry: str

    @property
    def n_bs(self):
        return len(self.base_stations)

    @property
    def n_users(self):
        return len(self.users)

    def bs_positions(self):
        return np.array([b.position for b in self.base_stations], dtype=float)

    def user_positions(self):
        return np.array([u.position for u in self.users], dtype=float)

    def bs_tx_power(self):
        return np.array([b.tx_power for b in self.base_stations], dtype=float)

    def user_p_max(self):
        return np.array([u.p_max for u in self.users], dtype=float)

    def user_targets(self):
        return np.array([u.target_sir for u in self.users], dtype=float)

    def user_eta(self):
        return np.array([u.opc_target for u in self.users], dtype=float)

    def home_index(self):
        return np.array([u.home_bs for u in self.users], dtype=int)

    def lpue_mask(self):
        return np.array([u.priority == LPUE for u in self.users], dtype=bool)

    def protected_bs_indices(self):
        """Indices of high-priority base stations (receivers to shield)."""
        return np.array(
            [b.id for b in self.base_stations if b.priority == HIGH], dtype=int
        )


@dataclass
class GainMatrix:
    """Linear power gains, receiver-major: ``gains[r, t]``.

    Uplink: receivers are base stations, transmitters are users.
    Downlink: receivers are users, transmitters are base stations.
    ``noise[r]`` is the receiver noise power in watts.
    """

    gains: np.ndarray
    noise: np.ndarray

    def __post_init__(self):
        self.gains = np.asarray(self.gains, dtype=float)
        self.noise = np.asarray(self.noise, dtype=float)
        if self.gains.ndim != 2:
            raise ValueError("gains must be a 2-d receiver x transmitter array")
        if not np.all(np.isfinite(self.gains)) or np.any(self.gains <= 0):
            raise ValueError("gains must be finite and strictly positive")
        if self.noise.shape != (self.gains.shape[0],):
            raise ValueError("noise must have one entry per receiver")
        if not np.all(np.isfinite(self.noise)) or np.any(self.noise <= 0):
            raise ValueError("noise must be finite and strictly positive")


def path_gain(distance, exponent=4.0, d_min=1.0, k=1.0):
    """Bounded power-law path gain ``k * max(d, d_min) ** -exponent``.

    Deterministic and monotone non-increasing in distance; the clamp at
    ``d_min`` removes the singularity at zero distance. Accepts scalars or
    arrays for ``distance``.
    """
    for name, value in (("exponent", exponent), ("d_min", d_min), ("k", k)):
        if not np.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")
    if exponent <= 2:
        raise ValueError(f"exponent must exceed 2, got {exponent!r}")
    if d_min <= 0:
        raise ValueError(f"d_min must be positive, got {d_min!r}")
    if k <= 0:
        raise ValueError(f"k must be positive, got {k!r}")
    d = np.asarray(distance, dtype=float)
    if not np.all(np.isfinite(d)):
        raise ValueError("distance must be finite")
    if np.any(d < 0):
        raise ValueError("distance must be non-negative")
    out = k * np.maximum(d, d_min) ** (-float(exponent))
    if out.ndim == 0:
        return float(out)
    return out


def _uniform_in_square(rng, center, side):
    half = side / 2.0
    x = rng.uniform(center[0] - half, center[0] + half)
    y = rng.uniform(center[1] - half, center[1] + half)
    return (x, y)


def _uniform_in_disc(rng, center, radius):
    r = radius * np.sqrt(rng.uniform())
    ang = rng.uniform(0.0, 2.0 * np.pi)
    return (center[0] + r * np.cos(ang), center[1] + r * np.sin(ang))


def _place_small_centers(rng, origin, macro_side, small_side, n_small, macro_idx, seed):
    """Drop ``n_small`` non-overlapping axis-aligned squares inside one macro
    cell by rejection sampling; raises after PLACEMENT_RETRIES draws."""
    lo_x = origin[0] + small_side / 2.0
    hi_x = origin[0] + macro_side - small_side / 2.0
    lo_y = origin[1] + small_side / 2.0
    hi_y = origin[1] + macro_side - small_side / 2.0
    centers = []
    attempts = 0
    while len(centers) < n_small:
        attempts += 1
        if attempts > PLACEMENT_RETRIES:
            raise GenerationError(
                f"could not pack {n_small} small cells of side {small_side} m "
                f"into macro cell {macro_idx} after {PLACEMENT_RETRIES} draws "
                f"(seed={seed})"
            )
        cand = (rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y))
        # axis-aligned squares of side s overlap iff both |dx| and |dy| < s
        ok = all(
            max(abs(cand[0] - c[0]), abs(cand[1] - c[1])) >= small_side
            for c in centers
        )
        if ok:
            centers.append(cand)
    return centers


def generate_fig2_snapshot(cfg, n_small, seed):
    """Uplink grid snapshot: ``grid_rows**2`` macro cells, ``n_small`` small
    cells uniformly packed in each, fixed per-cell user counts, one common
    target SIR for all users."""
    if not 1 <= n_small <= 64:
        raise ValueError(f"n_small must be in [1, 64], got {n_small}")
    rng = np.random.default_rng(seed)
    rows = cfg.grid_rows
    side = cfg.macro_side_m
    small = cfg.small_side_m
    target = cfg.target_sir_linear

    base_stations = []
    macro_origins = []
    for r in range(rows):
        for c in range(rows):
            origin = (c * side, r * side)
            macro_origins.append(origin)
            center = (origin[0] + side / 2.0, origin[1] + side / 2.0)
            base_stations.append(
                BaseStation(
                    id=len(base_stations),
                    tier=MACRO,
                    priority=HIGH,
                    position=center,
                    tx_power=cfg.power_macro_w,
                    cell_extent=side,
                )
            )
    n_macro = len(base_stations)

    small_centers = []
    for m in range(n_macro):
        small_centers.append(
            _place_small_centers(
                rng, macro_origins[m], side, small, n_small, m, seed
            )
        )
    for m in range(n_macro):
        for center in small_centers[m]:
            base_stations.append(
                BaseStation(
                    id=len(base_stations),
                    tier=SMALL,
                    priority=LOW,
                    position=center,
                    tx_power=cfg.power_small_w,
                    cell_extent=small,
                )
            )

    users = []
    for m in range(n_macro):
        pos = base_stations[m].position
        for _ in range(cfg.hpue_per_macro):
            users.append(
                UserTerminal(
                    id=len(users),
                    home_bs=m,
                    priority=HPUE,
                    position=_uniform_in_square(rng, pos, side),
                    p_max=cfg.pmax_w,
                    target_sir=target,
                    opc_target=cfg.opc_eta,
                )
            )
    for b in range(n_macro, len(base_stations)):
        pos = base_stations[b].position
        for _ in range(cfg.lpue_per_small):
            users.append(
                UserTerminal(
                    id=len(users),
                    home_bs=b,
                    priority=LPUE,
                    position=_uniform_in_square(rng, pos, small),
                    p_max=cfg.pmax_w,
                    target_sir=target,
                    opc_target=cfg.opc_eta,
                )
            )

    return NetworkSnapshot(
        base_stations=tuple(base_stations),
        users=tuple(users),
        direction=UPLINK,
        seed=seed,
        geometry="grid",
    )


def generate_fig3_snapshot(cfg, n_small, seed):
    """Downlink disc snapshot: one central macro cell, ``n_small`` small
    cells dropped uniformly in the disc, per-cell Poisson user counts whose
    means are themselves uniform in [lambda_lo, lambda_hi] (non-uniform
    load). User 0 is the tagged macro user."""
    if n_small < 0:
        raise ValueError(f"n_small must be non-negative, got {n_small}")
    rng = np.random.default_rng(seed)
    radius = cfg.disc_radius_m
    small_extent = cfg.small_side_m / 2.0
    target = cfg.target_sir_linear

    base_stations = [
        BaseStation(
            id=0,
            tier=MACRO,
            priority=HIGH,
            position=(0.0, 0.0),
            tx_power=cfg.power_macro_w,
            cell_extent=radius,
        )
    ]
    users = [
        UserTerminal(
            id=0,
            home_bs=0,
            priority=HPUE,
            position=_uniform_in_disc(rng, (0.0, 0.0), radius),
            p_max=cfg.pmax_w,
            target_sir=target,
            opc_target=cfg.opc_eta,
        )
    ]
    for _ in range(n_small):
        base_stations.append(
            BaseStation(
                id=len(base_stations),
                tier=SMALL,
                priority=LOW,
                position=_uniform_in_disc(rng, (0.0, 0.0), radius),
                tx_power=cfg.power_small_w,
                cell_extent=small_extent,
            )
        )
    for b in range(1, len(base_stations)):
        lam = rng.uniform(cfg.lambda_lo, cfg.lambda_hi)
        count = int(rng.poisson(lam))
        pos = base_stations[b].position
        for _ in range(count):
            users.append(
                UserTerminal(
                    id=len(users),
                    home_bs=b,
                    priority=LPUE,
                    position=_uniform_in_disc(rng, pos, small_extent),
                    p_max=cfg.pmax_w,
                    target_sir=target,
                    opc_target=cfg.opc_eta,
                )
            )

    return NetworkSnapshot(
        base_stations=tuple(base_stations),
        users=tuple(users),
        direction=DOWNLINK,
        seed=seed,
        geometry="disc",
    )


def build_gain_matrix(snapshot, cfg):
    """Receiver-major path gains for the snapshot's link direction, plus the
    configured noise floor at every receiver."""
    bs_pos = snapshot.bs_positions()
    user_pos = snapshot.user_positions()
    if snapshot.direction == UPLINK:
        rx, tx = bs_pos, user_pos
    else:
        rx, tx = user_pos, bs_pos
    d = np.linalg.norm(rx[:, None, :] - tx[None, :, :], axis=-1)
    gains = path_gain(d, cfg.path_exponent, cfg.path_d_min, cfg.path_k)
    noise = np.full(rx.shape[0], cfg.noise_w, dtype=float)
    return GainMatrix(gains=gains, noise=noise)


def compute_all_sirs(powers, gains, assoc):
    """Achieved SIR of every user on the shared channel.

    Uplink: ``powers`` are user transmit powers and the serving receiver is
    the user's primary base station. Downlink: ``powers`` are base station
    transmit powers and interference comes from every other base station.
    """
    p = np.asarray(powers, dtype=float)
    primary = np.asarray(assoc.primary, dtype=int)
    if assoc.direction == UPLINK:
        rows = gains.gains[primary, :]          # (n_users, n_users)
        own = rows[np.arange(len(primary)), np.arange(len(primary))]
        total = rows @ p
        signal = own * p
        noise = gains.noise[primary]
    else:
        rows = gains.gains                      # (n_users, n_bs)
        own = rows[np.arange(len(primary)), primary]
        total = rows @ p
        signal = own * p[primary]
        noise = gains.noise
    return signal / (total - signal + noise)


def compute_sir(i, powers, gains, assoc):
    """SIR of a single user; see :func:`compute_all_sirs` for conventions."""
    return float(compute_all_sirs(powers, gains, assoc)[i])
