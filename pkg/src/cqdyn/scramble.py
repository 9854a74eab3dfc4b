"""Scrambling-time estimates and parametric-resonance predictions.

Every quantity here is built from the zero-coupling classical trajectories
q_k(t) = sqrt(2)|amp_k| cos(w_k t - phi_k) and coherent-state moments of
Q^nu along them.  Three running integrals drive everything:

    den(t)  = int_0^t sqrt(<V1^2><V2^2>)
    num1(t) = int_0^t sqrt(Var(V1) <V2^2>)
    num2(t) = int_0^t sqrt(<V1^2> Var(V2))

so that E_int = lam den / t, N_k = num_k / den and the t_LIN condition
t E_int min N = 1 reads lam min(num1, num2) = 1.
"""

from dataclasses import dataclass, field
from math import log

import numpy as np

from .errors import NoRootError, UnsupportedError, ValidationError
from .evolve import DEFAULT_STEP
from .model import coherent_q_moments
from .perturb import free_q

T_MAX = 1e6
LATTICE_NODES = 2**21
ALIAS_STEP = 0.05
MATHIEU_SMALL_H = 0.5


def _variance_form(cfg, form):
    if form not in ("auto", "closed", "general"):
        raise ValidationError("form must be 'auto', 'closed' or 'general'")
    if form == "auto":
        return "closed" if cfg.nu == 2 else "general"
    if form == "closed" and cfg.nu != 2:
        raise ValidationError("the closed variance form exists only for nu = 2")
    return form


def integrands(cfg, t, form="auto"):
    """(den, num1, num2) integrand values at times ``t``.

    For nu = 2 the closed form uses (q^2 + 1/4) in place of Var(Q^2); this
    equals the general coherent-state variance 2 q^2 + 1/2 divided by sqrt(2).
    Pass ``form='general'`` to use the variance itself.
    """
    form = _variance_form(cfg, form)
    nu = cfg.nu
    t = np.asarray(t, dtype=float)
    q1 = free_q(cfg, t, 1)
    q2 = free_q(cfg, t, 2)
    m1 = coherent_q_moments(q1, 2 * nu)
    m2 = coherent_q_moments(q2, 2 * nu)
    if form == "closed":
        var1 = q1 * q1 + 0.25
        var2 = q2 * q2 + 0.25
    else:
        var1 = np.maximum(m1[2 * nu] - m1[nu] ** 2, 0.0)
        var2 = np.maximum(m2[2 * nu] - m2[nu] ** 2, 0.0)
    den = np.sqrt(m1[2 * nu] * m2[2 * nu])
    return den, np.sqrt(var1 * m2[2 * nu]), np.sqrt(m1[2 * nu] * var2)


def _trapezoid(cfg, t, quad_step, form):
    """Running integrals (den, num1, num2) over [0, t] with step <= quad_step."""
    if not quad_step > 0:
        raise ValidationError(f"quad_step must be > 0, got {quad_step}")
    if t < 0:
        raise ValidationError("t must be >= 0")
    if t == 0:
        return np.zeros(3)
    n = int(np.ceil(t / quad_step * (1.0 - 1e-12)))
    out = np.zeros(3)
    h = t / n
    for c0 in range(0, n + 1, 1 << 18):
        idx = np.arange(c0, min(n + 1, c0 + (1 << 18)))
        w = np.full(idx.size, h)
        w[idx == 0] = 0.5 * h
        w[idx == n] = 0.5 * h
        vals = np.array(integrands(cfg, idx * h, form))
        out += vals @ w
    return out


def interaction_energy_avg(cfg, t, quad_step=DEFAULT_STEP, form="auto"):
    """Time-averaged zero-coupling bound on the interaction energy over [0, t]."""
    if t == 0:
        return float(cfg.lam * integrands(cfg, 0.0, form)[0])
    return float(cfg.lam * _trapezoid(cfg, t, quad_step, form)[0] / t)


def coherence_measures(cfg, t, quad_step=DEFAULT_STEP, form="auto"):
    """(N1, N2) over [0, t]; both lie in [0, 1]."""
    if t == 0:
        den, n1, n2 = integrands(cfg, 0.0, form)
    else:
        den, n1, n2 = _trapezoid(cfg, t, quad_step, form)
    if den == 0:
        return 0.0, 0.0
    return float(min(n1 / den, 1.0)), float(min(n2 / den, 1.0))


def f_lin(cfg, t, quad_step=DEFAULT_STEP, form="auto"):
    """t E_int(t) min N(t) - 1 evaluated by direct quadrature."""
    _, n1, n2 = _trapezoid(cfg, t, quad_step, form)
    return float(cfg.lam * min(n1, n2) - 1.0)


class _Lattice:
    """Cumulative trapezoid integrals on a uniform lattice over [0, t_hi]."""

    def __init__(self, cfg, t_hi, step, form):
        n = int(np.ceil(t_hi / step * (1.0 - 1e-12)))
        self.h = t_hi / n
        self.cfg, self.form = cfg, form
        self.cum = np.zeros((3, n + 1))
        prev = None
        acc = np.zeros(3)
        for c0 in range(0, n + 1, 1 << 18):
            idx = np.arange(c0, min(n + 1, c0 + (1 << 18)))
            vals = np.array(integrands(cfg, idx * self.h, form))
            if prev is not None:
                vals_ext = np.concatenate([prev[:, None], vals], axis=1)
            else:
                vals_ext = vals
            panels = 0.5 * self.h * (vals_ext[:, 1:] + vals_ext[:, :-1])
            run = acc[:, None] + np.cumsum(panels, axis=1)
            if prev is None:
                self.cum[:, idx[0]] = 0.0
                self.cum[:, idx[1:]] = run
            else:
                self.cum[:, idx] = run
            acc = self.cum[:, idx[-1]].copy()
            prev = vals[:, -1]

    def value(self, t):
        """Running integrals at arbitrary t in [0, t_hi], partial last panel."""
        i = min(int(t / self.h), self.cum.shape[1] - 1)
        ti = i * self.h
        if t <= ti:
            return self.cum[:, i]
        a = np.array(integrands(self.cfg, ti, self.form))
        b = np.array(integrands(self.cfg, t, self.form))
        return self.cum[:, i] + 0.5 * (t - ti) * (a + b)


def _coarse(cfg, t_lo, t_hi, quad_step, form):
    # integral over [t_lo, t_hi] for bracketing; very long spans use a
    # coarser step that still resolves the integrand's oscillation
    span = t_hi - t_lo
    n = int(np.ceil(span / quad_step))
    if n > (1 << 22):
        n = int(np.ceil(span / ALIAS_STEP))
    h = span / n
    out = np.zeros(3)
    for c0 in range(0, n + 1, 1 << 18):
        idx = np.arange(c0, min(n + 1, c0 + (1 << 18)))
        w = np.full(idx.size, h)
        w[idx == 0] = 0.5 * h
        w[idx == n] = 0.5 * h
        out += np.array(integrands(cfg, t_lo + idx * h, form)) @ w
    return out


def _solve(cfg, quad_step, form, which, target, rtol):
    """Smallest t with g(t) = lam * combine(running integrals) = target."""

    def g_of(v):
        if which == "lin":
            return cfg.lam * min(v[1], v[2]) - target
        return cfg.lam * v[0] - target

    # bracket on a geometric grid
    t_prev, t = 0.0, quad_step
    acc = np.zeros(3)
    g_first = None
    while True:
        acc = acc + _coarse(cfg, t_prev, t, quad_step, form)
        g = g_of(acc)
        if g_first is None:
            g_first = g
        if g >= 0 or t >= T_MAX:
            break
        t_prev, t = t, min(2.0 * t, T_MAX)
    if g < 0:
        raise NoRootError(
            f"no sign change on [{quad_step:g}, {T_MAX:g}]", f_lo=g_first, f_hi=g
        )
    # exact lattice search, extending if the coarse bracket was optimistic
    t_hi = t
    while True:
        lat = _Lattice(cfg, t_hi, max(quad_step, t_hi / LATTICE_NODES), form)
        if which == "lin":
            gl = cfg.lam * np.minimum(lat.cum[1], lat.cum[2]) - target
        else:
            gl = cfg.lam * lat.cum[0] - target
        hits = np.nonzero(gl >= 0)[0]
        if hits.size:
            break
        if t_hi >= T_MAX:
            raise NoRootError(f"no sign change on [{quad_step:g}, {T_MAX:g}]",
                              f_lo=g_first, f_hi=float(gl[-1]))
        t_hi = min(2.0 * t_hi, T_MAX)
    j = int(hits[0])
    if j == 0:
        return 0.0, lat
    lo, hi = (j - 1) * lat.h, j * lat.h
    tol = min(rtol, 1e-12)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g_of(lat.value(mid)) >= 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= tol * hi:
            break
    return hi, lat


def scrambling_time_lin(cfg, quad_step=DEFAULT_STEP, rtol=1e-6, form="auto"):
    """Root of t E_int(t) min N(t) = 1."""
    if not cfg.lam > 0:
        raise NoRootError("lambda = 0: t E_int min N is identically zero", f_lo=-1.0, f_hi=-1.0)
    t, _ = _solve(cfg, quad_step, _variance_form(cfg, form), "lin", 1.0, rtol)
    return t


def scrambling_time_vn(cfg, d, quad_step=DEFAULT_STEP, rtol=1e-6):
    """Root of t E_int(t) = ln d; uninformative as d grows without bound."""
    if int(d) != d or d < 1:
        raise ValidationError("d must be a positive integer")
    if d == 1:
        return 0.0
    if not cfg.lam > 0:
        raise NoRootError("lambda = 0: t E_int is identically zero", f_lo=-log(d), f_hi=-log(d))
    t, _ = _solve(cfg, quad_step, "general" if cfg.nu != 2 else "closed", "vn", log(d), rtol)
    return t


def crude_estimate(cfg):
    """max(|alpha|, |beta|) / (lam |alpha|^nu |beta|^nu)."""
    a, b = abs(cfg.alpha), abs(cfg.beta)
    den = cfg.lam * a**cfg.nu * b**cfg.nu
    return float("inf") if den == 0 else max(a, b) / den


@dataclass(frozen=True)
class ResonancePrediction:
    resonant: bool
    tau_res: float
    ratio: float


def resonance_predictor(cfg):
    """Primary-tongue resonance test 4|sigma| < |alpha|^2 lam, its timescale
    1/(|alpha|^2 lam) and the estimate tau_LIN/tau_RES ~ sqrt(zeta1)/zeta2."""
    if cfg.nu != 2:
        raise UnsupportedError("resonance analysis is only available for nu = 2")
    a2l = abs(cfg.alpha) ** 2 * cfg.lam
    tau = float("inf") if a2l == 0 else 1.0 / a2l
    ratio = float("inf") if cfg.zeta2 == 0 else cfg.zeta1**0.5 / cfg.zeta2
    return ResonancePrediction(bool(4 * abs(cfg.sigma) < a2l), tau, ratio)


@dataclass(frozen=True)
class MathieuParameters:
    omega: float
    h: float
    small_h: bool


def mathieu_parameters(cfg):
    """Drive frequency and strength of the Mathieu reduction for oscillator 2.

    ``small_h`` is False once h >= 0.5, where the weak-drive analysis no
    longer applies.
    """
    if cfg.nu != 2:
        raise UnsupportedError("Mathieu reduction is only available for nu = 2")
    omega = 2.0 * (1 + cfg.sigma) / (1 - cfg.sigma)
    h = 2.0 * abs(cfg.alpha) ** 2 * cfg.lam / (1 - cfg.sigma)
    return MathieuParameters(float(omega), float(h), bool(h < MATHIEU_SMALL_H))


@dataclass
class ScrambleReport:
    t_lin: float = None
    t_vn: float = None
    crude_estimate: float = None
    residual: float = None
    times: np.ndarray = None
    e_int_series: np.ndarray = None
    n1_series: np.ndarray = None
    n2_series: np.ndarray = None
    tau_res: float = None
    resonant: bool = None
    ratio: float = None
    mathieu: MathieuParameters = None
    errors: dict = field(default_factory=dict)


def scramble_report(cfg, d=None, quad_step=DEFAULT_STEP, n_series=200, form="auto"):
    """Collect t_LIN, t_VN, the crude estimate, series and resonance data.

    Solver failures are stored in ``errors`` instead of raised.
    """
    rep = ScrambleReport(crude_estimate=crude_estimate(cfg))
    form = _variance_form(cfg, form)
    try:
        t_lin, lat = _solve_with_lattice(cfg, quad_step, form)
        rep.t_lin = t_lin
        v = lat.value(t_lin)
        rep.residual = float(cfg.lam * min(v[1], v[2]) - 1.0)
        horizon = 2.0 * t_lin
    except NoRootError as exc:
        rep.errors["t_lin"] = {"message": str(exc), "f_lo": exc.f_lo, "f_hi": exc.f_hi}
        horizon = None
    if d is not None:
        try:
            rep.t_vn = scrambling_time_vn(cfg, d, quad_step)
        except NoRootError as exc:
            rep.errors["t_vn"] = {"message": str(exc), "f_lo": exc.f_lo, "f_hi": exc.f_hi}
    if horizon is None and np.isfinite(rep.crude_estimate):
        horizon = 2.0 * rep.crude_estimate
    if horizon is None or horizon <= 0:
        horizon = 100.0
    times = np.linspace(0.0, horizon, n_series + 1)
    lat = _Lattice(cfg, horizon, max(quad_step, horizon / LATTICE_NODES), form)
    vals = np.array([lat.value(t) for t in times]).T
    ints0 = np.array(integrands(cfg, 0.0, form))
    with np.errstate(divide="ignore", invalid="ignore"):
        e_int = np.where(times > 0, cfg.lam * vals[0] / np.where(times > 0, times, 1), cfg.lam * ints0[0])
        n1 = np.where(vals[0] > 0, vals[1] / np.where(vals[0] > 0, vals[0], 1), ints0[1] / ints0[0])
        n2 = np.where(vals[0] > 0, vals[2] / np.where(vals[0] > 0, vals[0], 1), ints0[2] / ints0[0])
    rep.times, rep.e_int_series = times, e_int
    rep.n1_series, rep.n2_series = np.minimum(n1, 1.0), np.minimum(n2, 1.0)
    if cfg.nu == 2:
        pred = resonance_predictor(cfg)
        rep.tau_res, rep.resonant, rep.ratio = pred.tau_res, pred.resonant, pred.ratio
        rep.mathieu = mathieu_parameters(cfg)
    else:
        rep.errors["resonance"] = {"message": "resonance analysis needs nu = 2"}
    return rep


def _solve_with_lattice(cfg, quad_step, form):
    if not cfg.lam > 0:
        raise NoRootError("lambda = 0: t E_int min N is identically zero", f_lo=-1.0, f_hi=-1.0)
    return _solve(cfg, quad_step, form, "lin", 1.0, 1e-6)
