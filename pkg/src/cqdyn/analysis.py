"""Cross-scheme discrepancy metrics, entropy-energy fit and resonance envelopes."""

import numpy as np
from scipy.integrate import trapezoid

from .errors import InsufficientDataError, ValidationError

AMPLITUDE_FLOOR = 1e-8


def _same_grid(a, b):
    if a.times.shape != b.times.shape or np.any(a.times != b.times):
        raise ValidationError("trajectories must share the same time grid")


def discrepancy(traj_a, traj_b):
    """Euclidean distance between phase points [q1, p1, q2, p2] at each time."""
    _same_grid(traj_a, traj_b)
    return np.linalg.norm(traj_a.phase_points() - traj_b.phase_points(), axis=1)


def _integral_norm(times, x):
    return float(trapezoid(np.linalg.norm(x, axis=1), times))


def relative_error(traj_x, traj_qq, horizon=None):
    """int_0^T |X_x - X_QQ| / int_0^T |X_QQ|, trapezoid over the shared grid."""
    _same_grid(traj_x, traj_qq)
    t = traj_qq.times
    mask = np.ones(t.size, dtype=bool) if horizon is None else t <= t[0] + horizon + 1e-12
    if mask.sum() < 2:
        raise ValidationError("horizon covers fewer than two grid points")
    x = traj_x.phase_points()[mask]
    ref = traj_qq.phase_points()[mask]
    den = _integral_norm(t[mask], ref)
    if den == 0:
        raise ValidationError("relative error undefined: reference trajectory stays at the origin")
    return _integral_norm(t[mask], x - ref) / den


def entropy_energy_fit(points):
    """Least-squares (slope, intercept) of mean S_VN against ln E_tot."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValidationError("points must be (E_tot, S) pairs")
    if pts.shape[0] < 3:
        raise ValidationError("need at least 3 points")
    if np.unique(pts[:, 0]).size != pts.shape[0]:
        raise ValidationError("energies must be distinct")
    if np.any(pts[:, 0] <= 0):
        raise ValidationError("energies must be positive")
    slope, intercept = np.polyfit(np.log(pts[:, 0]), pts[:, 1], 1)
    return float(slope), float(intercept)


def envelope_maxima(times, x):
    """Times and values of local maxima of |x| (strict 3-point test)."""
    y = np.abs(np.asarray(x, dtype=float))
    i = np.nonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:]))[0] + 1
    return np.asarray(times)[i], y[i]


def resonance_envelope_rate(traj, observable="q2", window=0.5):
    """Growth rate of the |q2| envelope over the first ``window`` of the run.

    Local maxima of |q2| are fitted by a straight line in log space.
    """
    return envelope_rate(traj.times, traj[observable], window)


def envelope_rate(times, x, window=0.5):
    times = np.asarray(times, dtype=float)
    cut = times[0] + window * (times[-1] - times[0])
    keep = times <= cut
    tm, ym = envelope_maxima(times[keep], np.asarray(x)[keep])
    good = ym > 0
    tm, ym = tm[good], ym[good]
    if tm.size < 3:
        raise InsufficientDataError(f"found {tm.size} envelope maxima, need at least 3")
    slope, _ = np.polyfit(tm, np.log(ym), 1)
    return float(slope)


def agreement_horizon(traj_qq, traj_cc, observable="q2", fraction=0.1):
    """First time |x_QQ - x_CC| exceeds ``fraction`` of the running max |x_CC|.

    Points where the running amplitude is still at rounding level (below
    1e-8 of its final value) are skipped.  Returns the final time if the two
    never separate that far.
    """
    _same_grid(traj_qq, traj_cc)
    ref = np.maximum.accumulate(np.abs(traj_cc[observable]))
    diff = np.abs(traj_qq[observable] - traj_cc[observable])
    bad = np.nonzero((ref > AMPLITUDE_FLOOR * ref[-1]) & (diff > fraction * ref))[0]
    return float(traj_cc.times[bad[0]] if bad.size else traj_cc.times[-1])
