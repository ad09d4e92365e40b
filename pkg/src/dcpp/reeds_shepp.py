"""Optimal Reeds-Shepp paths for a car with bounded turning radius.

Computes the shortest path between two poses for a vehicle that can drive
forward and reverse with curvature limited to 1/r_min. All candidate word
families (CSC, CCC, CCCC, CCSC, CCSCC) are evaluated in canonical
coordinates, together with their time-flipped, reflected and reversed
variants, and the minimum-length candidate is returned. The word search is
JIT-compiled; the hot planner loop calls it tens of thousands of times.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numba import njit

from .geometry import Pose


class Steer(str, Enum):
    LEFT = "left"
    STRAIGHT = "straight"
    RIGHT = "right"


class Direction(str, Enum):
    FORWARD = "forward"
    REVERSE = "reverse"


@dataclass(frozen=True)
class RSSegment:
    """One primitive motion: an arc or straight driven forward or in reverse."""

    steer: Steer
    direction: Direction
    length: float  # meters, >= 0

    def __post_init__(self):
        if self.length < 0.0:
            raise ValueError("segment length must be >= 0")

    @property
    def signed_length(self) -> float:
        return self.length if self.direction is Direction.FORWARD else -self.length


@dataclass(frozen=True)
class RSPath:
    segments: tuple[RSSegment, ...]
    length: float  # meters, sum of absolute segment lengths
    r_min: float


_STEER_NAME = {1: Steer.LEFT, 0: Steer.STRAIGHT, -1: Steer.RIGHT}

_PI = math.pi
_HALF_PI = 0.5 * math.pi


@njit(cache=True)
def _mod2pi(theta):
    return (theta + _PI) % (2.0 * _PI) - _PI


@njit(cache=True)
def _tau_omega(u, v, xi, eta, phi):
    delta = _mod2pi(u - v)
    a = math.sin(u) - math.sin(delta)
    b = math.cos(u) - math.cos(delta) - 1.0
    t1 = math.atan2(eta * a - xi * b, xi * a + eta * b)
    t2 = 2.0 * (math.cos(delta) - math.cos(v) - math.cos(u)) + 3.0
    tau = _mod2pi(t1 + _PI) if t2 < 0.0 else _mod2pi(t1)
    omega = _mod2pi(tau - u + v - phi)
    return tau, omega


# Base word solvers in canonical coordinates (r_min = 1). Each returns
# (ok, n, l0..l4, s0..s4): signed segment lengths (negative = reverse) and
# steers coded +1 left / 0 straight / -1 right.

@njit(cache=True)
def _lp_sp_lp(x, y, phi):
    u = math.hypot(x - math.sin(phi), y - 1.0 + math.cos(phi))
    t = math.atan2(y - 1.0 + math.cos(phi), x - math.sin(phi))
    if t < 0.0:
        return False, 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0, 0
    v = _mod2pi(phi - t)
    if v < 0.0:
        return False, 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0, 0
    return True, 3, t, u, v, 0.0, 0.0, 1, 0, 1, 0, 0


@njit(cache=True)
def _lp_sp_rp(x, y, phi):
    xi = x + math.sin(phi)
    eta = y - 1.0 - math.cos(phi)
    u1 = math.hypot(xi, eta)
    t1 = math.atan2(eta, xi)
    if u1 * u1 < 4.0:
        return False, 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0, 0
    u = math.sqrt(u1 * u1 - 4.0)
    theta = math.atan2(2.0, u)
    t = _mod2pi(t1 + theta)
    v = _mod2pi(t - phi)
    if t < 0.0 or v < 0.0:
        return False, 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0, 0
    return True, 3, t, u, v, 0.0, 0.0, 1, 0, -1, 0, 0


@njit(cache=True)
def _lp_rm_l(x, y, phi):
    xi = x - math.sin(phi)
    eta = y - 1.0 + math.cos(phi)
    u1 = math.hypot(xi, eta)
    theta = math.atan2(eta, xi)
    if u1 > 4.0:
        return False, 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0, 0
    u = -2.0 * math.asin(0.25 * u1)
    t = _mod2pi(theta + 0.5 * u + _PI)
    v = _mod2pi(phi - t + u)
    if t < 0.0 or u > 0.0:
        return False, 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0, 0
    return True, 3, t, u, v, 0.0, 0.0, 1, -1, 1, 0, 0


@njit(cache=True)
def _lp_rup_lum_rm(x, y, phi):
    xi = x + math.sin(phi)
    eta = y - 1.0 - math.cos(phi)
    rho = 0.25 * (2.0 + math.hypot(xi, eta))
    if rho > 1.0:
        return False, 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0, 0
    u = math.acos(rho)
    t, v = _tau_omega(u, -u, xi, eta, phi)
    if t < 0.0 or v > 0.0:
        return False, 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0, 0
    return True, 4, t, u, -u, v, 0.0, 1, -1, 1, -1, 0


@njit(cache=True)
def _lp_rum_lum_rp(x, y, phi):
    xi = x + math.sin(phi)
    eta = y - 1.0 - math.cos(phi)
    rho = (20.0 - xi * xi - eta * eta) / 16.0
    if rho < 0.0 or rho > 1.0:
        return False, 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0, 0
    u = -math.acos(rho)
    if u < -_HALF_PI:
        return False, 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0, 0
    t, v = _tau_omega(u, u, xi, eta, phi)
    if t < 0.0 or v < 0.0:
        return False, 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0, 0
    return True, 4, t, u, u, v, 0.0, 1, -1, 1, -1, 0


@njit(cache=True)
def _lp_rm_sm_lm(x, y, phi):
    xi = x - math.sin(phi)
    eta = y - 1.0 + math.cos(phi)
    rho = math.hypot(xi, eta)
    theta = math.atan2(eta, xi)
    if rho < 2.0:
        return False, 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0, 0
    r = math.sqrt(rho * rho - 4.0)
    u = 2.0 - r
    t = _mod2pi(theta + math.atan2(r, -2.0))
    v = _mod2pi(phi - _HALF_PI - t)
    if t < 0.0 or u > 0.0 or v > 0.0:
        return False, 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0, 0
    return True, 4, t, -_HALF_PI, u, v, 0.0, 1, -1, 0, 1, 0


@njit(cache=True)
def _lp_rm_sm_rm(x, y, phi):
    xi = x + math.sin(phi)
    eta = y - 1.0 - math.cos(phi)
    rho = math.hypot(-eta, xi)
    theta = math.atan2(xi, -eta)
    if rho < 2.0:
        return False, 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0, 0
    t = theta
    u = 2.0 - rho
    v = _mod2pi(t + _HALF_PI - phi)
    if t < 0.0 or u > 0.0 or v > 0.0:
        return False, 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0, 0
    return True, 4, t, -_HALF_PI, u, v, 0.0, 1, -1, 0, -1, 0


@njit(cache=True)
def _lp_rm_slm_rp(x, y, phi):
    xi = x + math.sin(phi)
    eta = y - 1.0 - math.cos(phi)
    rho = math.hypot(xi, eta)
    if rho < 2.0:
        return False, 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0, 0
    u = 4.0 - math.sqrt(rho * rho - 4.0)
    if u > 0.0:
        return False, 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0, 0
    t = _mod2pi(math.atan2((4.0 - u) * xi - 2.0 * eta,
                           -2.0 * xi + (u - 4.0) * eta))
    v = _mod2pi(t - phi)
    if t < 0.0 or v < 0.0:
        return False, 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0, 0
    return True, 5, t, -_HALF_PI, u, -_HALF_PI, v, 1, -1, 0, 1, -1


@njit(cache=True)
def _best_word(x, y, phi):
    """Minimum-total-length word over all families and symmetry variants.

    Returns (total, n, lengths[5], steers[5]); lengths are signed.
    """
    best_total = 1.0e18
    best_n = 0
    best_lengths = np.zeros(5)
    best_steers = np.zeros(5, dtype=np.int64)

    xb = x * math.cos(phi) + y * math.sin(phi)
    yb = x * math.sin(phi) - y * math.cos(phi)

    for backwards in range(2):
        bx = xb if backwards == 1 else x
        by = yb if backwards == 1 else y
        for variant in range(4):
            timeflip = variant == 1 or variant == 3
            reflect = variant == 2 or variant == 3
            vx = -bx if timeflip else bx
            vy = -by if reflect else by
            vphi = phi if timeflip == reflect else -phi
            sign = -1.0 if timeflip else 1.0
            for family in range(8):
                if family == 0:
                    ok, n, l0, l1, l2, l3, l4, s0, s1, s2, s3, s4 = _lp_sp_lp(vx, vy, vphi)
                elif family == 1:
                    ok, n, l0, l1, l2, l3, l4, s0, s1, s2, s3, s4 = _lp_sp_rp(vx, vy, vphi)
                elif family == 2:
                    ok, n, l0, l1, l2, l3, l4, s0, s1, s2, s3, s4 = _lp_rm_l(vx, vy, vphi)
                elif family == 3:
                    ok, n, l0, l1, l2, l3, l4, s0, s1, s2, s3, s4 = _lp_rup_lum_rm(vx, vy, vphi)
                elif family == 4:
                    ok, n, l0, l1, l2, l3, l4, s0, s1, s2, s3, s4 = _lp_rum_lum_rp(vx, vy, vphi)
                elif family == 5:
                    ok, n, l0, l1, l2, l3, l4, s0, s1, s2, s3, s4 = _lp_rm_sm_lm(vx, vy, vphi)
                elif family == 6:
                    ok, n, l0, l1, l2, l3, l4, s0, s1, s2, s3, s4 = _lp_rm_sm_rm(vx, vy, vphi)
                else:
                    ok, n, l0, l1, l2, l3, l4, s0, s1, s2, s3, s4 = _lp_rm_slm_rp(vx, vy, vphi)
                if not ok:
                    continue
                lengths = np.empty(5)
                steers = np.empty(5, dtype=np.int64)
                lengths[0], lengths[1], lengths[2], lengths[3], lengths[4] = l0, l1, l2, l3, l4
                steers[0], steers[1], steers[2], steers[3], steers[4] = s0, s1, s2, s3, s4
                total = 0.0
                for i in range(n):
                    total += abs(lengths[i])
                if total >= best_total - 1e-12:
                    continue
                out_lengths = np.zeros(5)
                out_steers = np.zeros(5, dtype=np.int64)
                for i in range(n):
                    src = n - 1 - i if backwards == 1 else i
                    li = sign * lengths[src]
                    si = steers[src]
                    if reflect:
                        si = -si
                    out_lengths[i] = li
                    out_steers[i] = si
                best_total = total
                best_n = n
                best_lengths = out_lengths
                best_steers = out_steers
    return best_total, best_n, best_lengths, best_steers


@njit(cache=True)
def _word_costs(x, y, phi, reverse_penalty):
    """(raw length, reverse-penalized cost) of the best word, canonical units."""
    total, n, lengths, _ = _best_word(x, y, phi)
    penalized = 0.0
    for i in range(n):
        penalized += abs(lengths[i]) * (1.0 if lengths[i] >= 0.0 else reverse_penalty)
    return total, penalized


def _canonical(start: Pose, goal: Pose, r_min: float):
    dx = goal.x - start.x
    dy = goal.y - start.y
    c, s = math.cos(start.heading), math.sin(start.heading)
    x = (c * dx + s * dy) / r_min
    y = (-s * dx + c * dy) / r_min
    return x, y, _mod2pi(goal.heading - start.heading)


def reeds_shepp_cost(start: Pose, goal: Pose, r_min: float,
                     reverse_penalty: float = 1.0) -> tuple[float, float]:
    """(length, reverse-penalized cost) of the optimal connection, in meters.

    Cheap cost-only variant of reeds_shepp_path for search-tree bookkeeping.
    """
    x, y, phi = _canonical(start, goal, r_min)
    if abs(x) < 1e-12 and abs(y) < 1e-12 and abs(phi) < 1e-12:
        return 0.0, 0.0
    total, penalized = _word_costs(x, y, phi, reverse_penalty)
    return total * r_min, penalized * r_min


@njit(cache=True)
def _word_costs_batch(xs, ys, phis, reverse_penalty):
    n = xs.shape[0]
    out = np.empty(n)
    for i in range(n):
        if abs(xs[i]) < 1e-12 and abs(ys[i]) < 1e-12 and abs(phis[i]) < 1e-12:
            out[i] = 0.0
        else:
            _, penalized = _word_costs(xs[i], ys[i], phis[i], reverse_penalty)
            out[i] = penalized
    return out


def reeds_shepp_cost_many(ax, ay, ah, bx, by, bh, r_min: float,
                          reverse_penalty: float = 1.0) -> np.ndarray:
    """Vectorized reverse-penalized optimal-connection costs (meters)."""
    ax, ay, ah, bx, by, bh = np.broadcast_arrays(
        np.atleast_1d(np.asarray(ax, dtype=float)), ay, ah, bx, by, bh)
    dx = bx - ax
    dy = by - ay
    c, s = np.cos(ah), np.sin(ah)
    x = (c * dx + s * dy) / r_min
    y = (-s * dx + c * dy) / r_min
    phi = (bh - ah + _PI) % (2.0 * _PI) - _PI
    return _word_costs_batch(np.ascontiguousarray(x, dtype=float),
                             np.ascontiguousarray(y, dtype=float),
                             np.ascontiguousarray(phi, dtype=float),
                             reverse_penalty) * r_min


def reeds_shepp_path(start: Pose, goal: Pose, r_min: float) -> RSPath:
    """Minimum-length Reeds-Shepp connection between two poses."""
    if r_min <= 0.0:
        raise ValueError("r_min must be > 0")
    x, y, phi = _canonical(start, goal, r_min)
    if abs(x) < 1e-12 and abs(y) < 1e-12 and abs(phi) < 1e-12:
        return RSPath(segments=(), length=0.0, r_min=r_min)
    total, n, lengths, steers = _best_word(x, y, phi)
    segments = tuple(
        RSSegment(steer=_STEER_NAME[int(steers[i])],
                  direction=Direction.FORWARD if lengths[i] >= 0.0 else Direction.REVERSE,
                  length=abs(lengths[i]) * r_min)
        for i in range(n) if abs(lengths[i]) > 1e-12)
    return RSPath(segments=segments,
                  length=sum(seg.length for seg in segments), r_min=r_min)


def propagate(pose: Pose, segment: RSSegment, r_min: float,
              distance: float | None = None) -> Pose:
    """Pose after driving along a segment (optionally only part of it)."""
    d = segment.length if distance is None else distance
    sgn = 1.0 if segment.direction is Direction.FORWARD else -1.0
    ds = sgn * d
    if segment.steer is Steer.STRAIGHT:
        return Pose(pose.x + ds * math.cos(pose.heading),
                    pose.y + ds * math.sin(pose.heading),
                    pose.heading)
    turn = 1.0 if segment.steer is Steer.LEFT else -1.0
    dtheta = turn * ds / r_min
    new_heading = pose.heading + dtheta
    cx = pose.x - turn * r_min * math.sin(pose.heading)
    cy = pose.y + turn * r_min * math.cos(pose.heading)
    return Pose(cx + turn * r_min * math.sin(new_heading),
                cy - turn * r_min * math.cos(new_heading),
                new_heading)


@njit(cache=True)
def _sample_kernel(x0, y0, h0, n_seg, signed_lengths, steers, r_min, step):
    counts = np.empty(n_seg, dtype=np.int64)
    total = 1
    for i in range(n_seg):
        counts[i] = max(1, int(math.ceil(abs(signed_lengths[i]) / step)))
        total += counts[i]
    out = np.empty((total, 3))
    out[0, 0], out[0, 1], out[0, 2] = x0, y0, h0
    idx = 1
    x, y, heading = x0, y0, h0
    for i in range(n_seg):
        seg_len = abs(signed_lengths[i])
        sgn = 1.0 if signed_lengths[i] >= 0.0 else -1.0
        steer = steers[i]
        for j in range(1, counts[i] + 1):
            d = sgn * seg_len * j / counts[i]
            if steer == 0:
                out[idx, 0] = x + d * math.cos(heading)
                out[idx, 1] = y + d * math.sin(heading)
                out[idx, 2] = heading
            else:
                turn = 1.0 if steer > 0 else -1.0
                cx = x - turn * r_min * math.sin(heading)
                cy = y + turn * r_min * math.cos(heading)
                h = heading + turn * d / r_min
                out[idx, 0] = cx + turn * r_min * math.sin(h)
                out[idx, 1] = cy - turn * r_min * math.cos(h)
                out[idx, 2] = h
            idx += 1
        x, y, heading = out[idx - 1, 0], out[idx - 1, 1], out[idx - 1, 2]
    return out


_STEER_CODE = {Steer.LEFT: 1, Steer.STRAIGHT: 0, Steer.RIGHT: -1}


def sample_path_array(start: Pose, path: RSPath, step: float = 0.1) -> np.ndarray:
    """Poses along the path at <= step spacing as an (N, 3) array.

    Headings in column 2 are continuous (not wrapped); endpoints included.
    """
    n = len(path.segments)
    if n == 0:
        return np.array([[start.x, start.y, start.heading]])
    signed = np.array([seg.signed_length for seg in path.segments])
    steers = np.array([_STEER_CODE[seg.steer] for seg in path.segments],
                      dtype=np.int64)
    return _sample_kernel(start.x, start.y, start.heading, n, signed, steers,
                          path.r_min, step)


def sample_path(start: Pose, path: RSPath, step: float = 0.1) -> list[Pose]:
    """Poses along the path at <= step spacing, endpoints included."""
    arr = sample_path_array(start, path, step)
    return [Pose(x, y, h) for x, y, h in arr]


def path_endpoint(start: Pose, path: RSPath) -> Pose:
    pose = start
    for segment in path.segments:
        pose = propagate(pose, segment, path.r_min)
    return pose
