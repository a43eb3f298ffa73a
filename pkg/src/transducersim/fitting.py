"""Parameter extraction from measured or synthetic traces.

All nonlinear fits run a damped Gauss-Newton iteration with analytic
Jacobians (max 200 iterations, convergence when the relative parameter
step drops below 1e-8). Initial guesses are deterministic: centers from
extrema, widths from half-max crossings, backgrounds from trace edges.
No fitter touches a global RNG; noise in synthetic tests is owned by
the caller.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .core import DeviceParams
from .errors import FitError, ParameterError
from .trace import Trace

MAX_ITER = 200
REL_STEP_TOL = 1e-8


@dataclass(frozen=True)
class FitResult:
    """Named parameter estimates with standard errors.

    converged=False means the params are best-effort and flagged; notes
    carry warnings such as branch ambiguity or unidentifiable segments.
    cov is the covariance matrix of the fitted parameter vector, with
    rows/columns named by param_order.
    """

    params: dict
    stderr: dict
    residual_norm: float
    converged: bool
    n_iter: int = 0
    notes: tuple = ()
    cov: np.ndarray | None = None
    param_order: tuple = ()

    def __post_init__(self):
        for name, se in self.stderr.items():
            if np.isfinite(se) and se < 0:
                raise ParameterError(f"negative standard error for {name}")


def _gauss_newton(fun_jac, p0, *, valid=None, max_iter=MAX_ITER,
                  rel_tol=REL_STEP_TOL):
    """Levenberg-damped Gauss-Newton on residual r(p) with Jacobian J(p).

    Returns (p, cov, rms, converged, n_iter). Only cost-decreasing steps
    are accepted, so the final residual never exceeds the initial one.
    """
    p = np.array(p0, dtype=float)
    scale = np.maximum(np.abs(p), 1e-30)
    r, J = fun_jac(p)
    cost = float(r @ r)
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        A = J.T @ J
        g = J.T @ r
        accepted = False
        for _ in range(40):
            damped = A + lam * np.diag(np.maximum(np.diag(A), 1e-30))
            try:
                step = np.linalg.solve(damped, -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            p_new = p + step
            if valid is not None and not valid(p_new):
                lam *= 10.0
                continue
            r_new, J_new = fun_jac(p_new)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                scale = np.maximum(np.abs(p_new), scale)
                rel_step = float(np.max(np.abs(step) / scale))
                p, r, J, cost = p_new, r_new, J_new, cost_new
                lam = max(lam * 0.3, 1e-14)
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            break
        if rel_step < rel_tol:
            converged = True
            break
    m, n = J.shape
    dof = max(m - n, 1)
    sigma2 = cost / dof
    try:
        cov = sigma2 * np.linalg.pinv(J.T @ J)
    except np.linalg.LinAlgError:
        cov = np.full((n, n), np.inf)
    rms = math.sqrt(cost / m) if m else math.inf
    return p, cov, rms, converged, it


# ---------------------------------------------------------------- optical dip

def _dip_model_jac(f, p):
    # p = (f_o, kappa, e) with e = d^2, d the fractional dip amplitude;
    # e enters linearly, so e = 0 is not a stationary point of the fit.
    f_o, kappa, e = p
    x = f - f_o
    x2 = 4.0 * x ** 2
    D = kappa ** 2 + x2
    R = (e * kappa ** 2 + x2) / D
    one_me = 1.0 - e
    dR_dfo = -8.0 * x * kappa ** 2 * one_me / D ** 2
    dR_dk = -2.0 * kappa * x2 * one_me / D ** 2
    dR_de = kappa ** 2 / D
    return R, np.column_stack([dR_dfo, dR_dk, dR_de])


def fit_optical_dip(trace: Trace, branch: str | None = None) -> FitResult:
    """Fit a normalized cavity reflection dip.

    Model: |1 - 2*pi*kappa_oe / (i 2*pi (f - f_o) + pi kappa_o)|^2, which
    depends on kappa_oe only through the depth parameter d = |1 - 2
    kappa_oe/kappa_o|. The dip therefore determines kappa_oe only up to
    the under/over-coupled branch; both candidates are always reported
    and `branch` ("under" or "over") selects which one fills kappa_oe.
    """
    f, y = trace.x, trace.y
    if f.size < 8:
        raise FitError("trace too short to fit a dip")
    edge = float(np.median(np.concatenate([y[: max(3, f.size // 20)],
                                           y[-max(3, f.size // 20):]])))
    i_min = int(np.argmin(y))
    y_min = float(y[i_min])
    if edge <= 0 or y_min >= 0.95 * edge:
        raise FitError("no dip found in reflection trace")

    level = 0.5 * (y_min + edge)
    left = np.nonzero(y[:i_min] >= level)[0]
    right = np.nonzero(y[i_min:] >= level)[0]
    if left.size and right.size:
        width = float(f[i_min + right[0]] - f[left[-1]])
    else:
        width = float(f[-1] - f[0]) / 4.0
    p0 = [float(f[i_min]), max(width, float(np.min(np.diff(f)))),
          min(max(y_min / edge, 0.0), 1.0)]

    def fun_jac(p):
        model, J = _dip_model_jac(f, p)
        return model - y, J

    p, cov, rms, converged, it = _gauss_newton(
        fun_jac, p0, valid=lambda q: q[1] > 0 and q[2] < 1.0)
    f_o, kappa, e = p
    d = math.sqrt(max(e, 0.0))
    if not converged:
        return FitResult({"f_o": f_o, "kappa_o": kappa, "depth": d},
                         {}, rms, False, it, ("non-convergence",))
    se = np.sqrt(np.abs(np.diag(cov)))
    se_d = se[2] / (2.0 * d) if d > 0 else math.sqrt(se[2])
    params = {"f_o": f_o, "kappa_o": kappa, "depth": d,
              "kappa_oe_under": kappa * (1.0 - d) / 2.0,
              "kappa_oe_over": kappa * (1.0 + d) / 2.0}
    stderr = {"f_o": se[0], "kappa_o": se[1], "depth": se_d}
    sub = cov[1:, 1:]
    de_coeff = 1.0 / (2.0 * d) if d > 0 else 0.0   # d(kappa_oe)/de = -/+ kappa/(4 d)
    for name, grad in (("kappa_oe_under",
                        np.array([(1 - d) / 2, -kappa / 2 * de_coeff])),
                       ("kappa_oe_over",
                        np.array([(1 + d) / 2, kappa / 2 * de_coeff]))):
        stderr[name] = math.sqrt(max(float(grad @ sub @ grad), 0.0))
    notes = []
    if branch is not None:
        if branch not in ("under", "over"):
            raise ParameterError(f"branch must be 'under' or 'over' (got {branch!r})")
        params["kappa_oe"] = params[f"kappa_oe_{branch}"]
        params["kappa_oi"] = kappa - params["kappa_oe"]
        stderr["kappa_oe"] = stderr[f"kappa_oe_{branch}"]
    else:
        notes.append("coupling branch not selected; see kappa_oe_under/over")
    if d < 2.0 * se_d:
        notes.append("dip depth consistent with critical coupling")
    return FitResult(params, stderr, rms, True, it, tuple(notes),
                     cov=cov, param_order=("f_o", "kappa_o", "depth_sq"))


# ---------------------------------------------------------- sideband detuning

def _sideband_response(f, detuning, kappa_o, kappa_oe):
    """Single-pole cavity response of a sideband at signed offset f.

    The sideband sits at offset f from the pump, so its detuning from
    the cavity is (detuning - f); the response peaks at f = detuning,
    which is what makes the fitted detuning signed.
    """
    return (2 * np.pi * kappa_oe) / (1j * 2 * np.pi * (detuning - f)
                                     + np.pi * kappa_o)


def _sideband_response_ddelta(f, detuning, kappa_o, kappa_oe):
    return (-1j * 2 * np.pi) * (2 * np.pi * kappa_oe) / (
        1j * 2 * np.pi * (detuning - f) + np.pi * kappa_o) ** 2


def fit_phase_detuning(trace_mag: Trace, trace_phase: Trace,
                       dev: DeviceParams) -> FitResult:
    """Signed pump-cavity detuning from a background-subtracted sideband sweep.

    The complex response mag*exp(i*phase) is fit to the two-sideband
    single-pole cavity model with a free complex amplitude; the phase
    roll through resonance pins the detuning, and its mirror symmetry
    under detuning -> -detuning fixes the sign. Both candidate signs are
    tried and the better fit wins.
    """
    if trace_mag.x.size != trace_phase.x.size or \
            not np.allclose(trace_mag.x, trace_phase.x):
        raise ParameterError("magnitude and phase traces must share one axis")
    f = trace_mag.x
    z = trace_mag.y * np.exp(1j * trace_phase.y)
    if f.size < 8:
        raise FitError("sweep too short to fit the cavity response")

    kappa_o, kappa_oe = dev.kappa_o, dev.kappa_oe

    def fun_jac(p):
        delta, a_re, a_im = p
        a = a_re + 1j * a_im
        m = _sideband_response(f, delta, kappa_o, kappa_oe)
        r = a * m - z
        dm = a * _sideband_response_ddelta(f, delta, kappa_o, kappa_oe)
        J = np.column_stack([
            np.concatenate([dm.real, dm.imag]),
            np.concatenate([m.real, m.imag]),
            np.concatenate([-m.imag, m.real]),
        ])
        return np.concatenate([r.real, r.imag]), J

    f_peak = float(f[np.argmax(trace_mag.y)])
    best = None
    for delta0 in (f_peak, -f_peak):
        m0 = _sideband_response(f, delta0, kappa_o, kappa_oe)
        denom = float(np.vdot(m0, m0).real)
        a0 = complex(np.vdot(m0, z)) / denom if denom > 0 else 0.0 + 0.0j
        fit = _gauss_newton(fun_jac, [delta0, a0.real, a0.imag])
        if best is None or fit[2] < best[2]:
            best = fit
    p, cov, rms, converged, it = best
    notes = []
    if float(f[-1] - f[0]) < kappa_o:
        notes.append("sweep span below kappa_o; phase wrap may bias the sign")
    if not converged:
        notes.append("non-convergence")
    se = np.sqrt(np.abs(np.diag(cov)))
    return FitResult({"detuning": p[0], "amp_re": p[1], "amp_im": p[2]},
                     {"detuning": se[0]}, rms, converged, it, tuple(notes),
                     cov=cov, param_order=("detuning", "amp_re", "amp_im"))


# ------------------------------------------------- linewidth vs photon number

def fit_linewidth_vs_photons(points, sign: str, kappa_o: float,
                             weights=None) -> FitResult:
    """g_om and gamma_mi from operating linewidth vs intracavity photons.

    Fits the line gamma(n_c) = gamma_mi -/+ (4 g_om^2 / kappa_o) n_c
    (blue/red) by (optionally weighted) linear least squares:
    g_om = sqrt(|slope| kappa_o / 4), intercept = gamma_mi.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ParameterError("points must be (n_c, gamma) pairs")
    if pts.shape[0] < 3:
        raise ParameterError("need at least 3 (n_c, gamma) points")
    if sign not in ("blue", "red"):
        raise ParameterError(f"sign must be 'blue' or 'red' (got {sign!r})")
    n_c, gam = pts[:, 0], pts[:, 1]
    if np.unique(n_c).size < 2:
        raise FitError("rank-deficient design: all points share one n_c")
    w = np.ones_like(gam) if weights is None else np.asarray(weights, float)
    if w.shape != gam.shape or np.any(w <= 0):
        raise ParameterError("weights must be positive, one per point")

    sw = np.sqrt(w)
    X = np.column_stack([n_c, np.ones_like(n_c)]) * sw[:, None]
    b = gam * sw
    coef, *_ = np.linalg.lstsq(X, b, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    resid = X @ coef - b
    dof = max(n_c.size - 2, 1)
    cov = float(resid @ resid) / dof * np.linalg.pinv(X.T @ X)
    se_slope, se_int = math.sqrt(abs(cov[0, 0])), math.sqrt(abs(cov[1, 1]))

    expected = -1.0 if sign == "blue" else 1.0
    signed = expected * slope          # positive when consistent with `sign`
    # a slope whose total effect across the swept range is numerically
    # negligible against the intercept is zero, not a tiny g_om
    span = float(n_c.max() - n_c.min())
    if abs(slope) * span < 1e-12 * abs(intercept):
        signed = 0.0
    notes = []
    if signed < 0 and abs(slope) > 2.0 * se_slope:
        raise FitError(
            f"slope sign inconsistent with {sign}-detuned operation "
            f"(slope = {slope:.4g} +/- {se_slope:.2g} Hz per photon)")
    if signed <= 0:
        g_om = 0.0
        se_g = math.sqrt(se_slope * kappa_o / 4.0)
        notes.append("slope consistent with zero; g_om set to 0")
    else:
        g_om = math.sqrt(signed * kappa_o / 4.0)
        se_g = kappa_o * se_slope / (8.0 * g_om)
    rms = math.sqrt(float(resid @ resid) / n_c.size)
    return FitResult(
        {"g_om": g_om, "gamma_mi": intercept, "slope": slope,
         "intercept": intercept},
        {"g_om": se_g, "gamma_mi": se_int, "slope": se_slope},
        rms, True, 1, tuple(notes),
        cov=cov, param_order=("slope", "intercept"))


# ---------------------------------------------------------- multi-Lorentzian

def _lorentz(f, center, gamma, area):
    hw = 0.5 * gamma
    return area * (hw / np.pi) / ((f - center) ** 2 + hw ** 2)


def _half_max_width(f, y, idx):
    """Full width at half max of the feature peaking at idx, by crossings."""
    half = 0.5 * y[idx]
    left = np.nonzero(y[:idx] <= half)[0]
    right = np.nonzero(y[idx:] <= half)[0]
    lo = f[left[-1]] if left.size else f[0]
    hi = f[idx + right[0]] if right.size else f[-1]
    width = float(hi - lo)
    return width if width > 0 else float(f[-1] - f[0]) / 10.0


def fit_lorentzian_multi(trace: Trace, n_peaks: int, background="constant",
                         ) -> FitResult:
    """Sum of Lorentzians plus background, least squares.

    background is "constant", "linear", or a reference Trace measured
    off-resonance (interpolated and subtracted before a constant-
    background fit). Peaks are seeded by iterative peak picking
    (max, local fit, subtract) and refined jointly; the result lists
    (f_k, gamma_k, area_k) sorted by frequency. Heavily overlapping
    peaks show up as exploding standard errors rather than failures.
    """
    if n_peaks < 0:
        raise ParameterError(f"n_peaks must be >= 0 (got {n_peaks!r})")
    f = trace.x
    y = trace.y.copy()
    if isinstance(background, Trace):
        y = y - np.interp(f, background.x, background.y)
        background = "constant"
    if background not in ("constant", "linear"):
        raise ParameterError(
            "background must be 'constant', 'linear', or a reference Trace")
    span = float(f[-1] - f[0]) if f.size > 1 else 1.0
    mid = 0.5 * float(f[0] + f[-1])
    u = (f - mid) / span                      # conditioned linear basis
    n_bg = 1 if background == "constant" else 2

    edge = np.concatenate([y[: max(3, f.size // 20)],
                           y[-max(3, f.size // 20):]])
    bg0 = float(np.median(edge))

    # --- seed peaks from the running residual
    seeds = []
    resid = y - bg0
    for _ in range(n_peaks):
        idx = int(np.argmax(resid))
        width = _half_max_width(f, np.clip(resid, 0, None), idx)
        area = max(float(resid[idx]) * math.pi * width / 2.0, 1e-300)
        seeds.append([float(f[idx]), width, area])
        resid = resid - _lorentz(f, *seeds[-1])

    p0 = []
    for s in seeds:
        p0.extend(s)
    p0.append(bg0)
    if n_bg == 2:
        p0.append(0.0)

    def fun_jac(p):
        model = np.full(f.size, p[3 * n_peaks])
        if n_bg == 2:
            model = model + p[3 * n_peaks + 1] * u
        cols = []
        for k in range(n_peaks):
            c, g, a = p[3 * k: 3 * k + 3]
            hw = 0.5 * g
            denom = (f - c) ** 2 + hw ** 2
            lk = a * (hw / np.pi) / denom
            model = model + lk
            d_c = a * (hw / np.pi) * 2.0 * (f - c) / denom ** 2
            d_g = (a / (2 * np.pi)) * ((f - c) ** 2 - hw ** 2) / denom ** 2
            d_a = (hw / np.pi) / denom
            cols.extend([d_c, d_g, d_a])
        cols.append(np.ones_like(f))
        if n_bg == 2:
            cols.append(u)
        return model - y, np.column_stack(cols)

    def valid(p):
        return all(p[3 * k + 1] > 0 for k in range(n_peaks))

    p, cov, rms, converged, it = _gauss_newton(fun_jac, p0, valid=valid)
    se = np.sqrt(np.abs(np.diag(cov)))

    order = np.argsort([p[3 * k] for k in range(n_peaks)]) if n_peaks else []
    params, stderr, names = {}, {}, []
    perm = []
    for rank, k in enumerate(order, start=1):
        params[f"f_{rank}"] = p[3 * k]
        params[f"gamma_{rank}"] = p[3 * k + 1]
        params[f"area_{rank}"] = p[3 * k + 2]
        stderr[f"f_{rank}"] = se[3 * k]
        stderr[f"gamma_{rank}"] = se[3 * k + 1]
        stderr[f"area_{rank}"] = se[3 * k + 2]
        names += [f"f_{rank}", f"gamma_{rank}", f"area_{rank}"]
        perm += [3 * k, 3 * k + 1, 3 * k + 2]
    params["bg0"] = p[3 * n_peaks]
    stderr["bg0"] = se[3 * n_peaks]
    names.append("bg0")
    perm.append(3 * n_peaks)
    if n_bg == 2:
        params["bg1"] = p[3 * n_peaks + 1] / span   # per x-unit
        stderr["bg1"] = se[3 * n_peaks + 1] / span
        names.append("bg1")
        perm.append(3 * n_peaks + 1)
    notes = () if converged else ("non-convergence",)
    return FitResult(params, stderr, rms, converged, it, notes,
                     cov=cov[np.ix_(perm, perm)], param_order=tuple(names))
