"""Numerics for the R-deformed sl3 system: integration, conservation,
Lax-pair and spectral-curve residuals, hyperelliptic reduction."""

from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import BlowUpError, PreconditionError, SingularLocusError

# seven points: L̇ − [L, M] is a polynomial of degree ≤ 6 in λ after clearing (λ − x)
DEFAULT_GRID = (0.0, 1.7, -1.7, 2.3j, -2.3j, 0.5 + 0.5j, 3.0)
DEFAULT_GUARD = (1e-6, 1e-6)


def rdw_field(u, params=None):
    """Right-hand side of the deformed system.

    With ``params=None`` the normalized system u̇ = (u3 u2², 2(u1² − u3²), −u1 u2²).
    Otherwise ``params`` gives Delta, R13, R31 for
    u̇ = (u2²(Δu1 + R13 u3), 2(R31 u1² − R13 u3²), −u2²(R31 u1 + Δu3)).
    """
    u1, u2, u3 = u
    if params is None:
        q = u2 * u2
        return (u3 * q, 2 * (u1 * u1 - u3 * u3), -u1 * q)
    d, r13, r31 = params.get("Delta", 0), params.get("R13", 1), params.get("R31", 1)
    q = u2 * u2
    return (q * (d * u1 + r13 * u3), 2 * (r31 * u1 * u1 - r13 * u3 * u3), -q * (r31 * u1 + d * u3))


def casimir(u):
    u = np.asarray(u)
    return u[..., 1] ** 3 / 6 + u[..., 0] * u[..., 2]


def second_integral(u):
    u = np.asarray(u)
    return u[..., 0] ** 2 + u[..., 2] ** 2


@dataclass
class Trajectory:
    t: np.ndarray
    u: np.ndarray          # (n, 3) complex
    dt: float
    method: str
    params: dict = None

    @property
    def S(self):
        return casimir(self.u)

    @property
    def J(self):
        return second_integral(self.u)

    def drift(self):
        """Max relative drift of S and J against their initial values."""
        out = {}
        for name, v in (("S", self.S), ("J", self.J)):
            ref = abs(v[0])
            d = np.max(np.abs(v - v[0]))
            out[name] = float(d / ref) if ref > 0 else float(d)
        return out

    def to_report(self):
        return {"method": self.method, "dt": self.dt, "samples": len(self.t), "T": float(self.t[-1]),
                "initial": [complex(x) for x in self.u[0]], "final": [complex(x) for x in self.u[-1]],
                "drift": self.drift()}


def _rk4_step(f, u, dt):
    k1 = f(u)
    k2 = f(tuple(a + dt / 2 * b for a, b in zip(u, k1)))
    k3 = f(tuple(a + dt / 2 * b for a, b in zip(u, k2)))
    k4 = f(tuple(a + dt * b for a, b in zip(u, k3)))
    return tuple(a + dt / 6 * (b + 2 * c + 2 * d + e) for a, b, c, d, e in zip(u, k1, k2, k3, k4))


def integrate(u0, T, dt, method="rk4", stride=1, params=None, rtol=1e-12, atol=1e-14) -> Trajectory:
    """Integrate from u0 to time T, keeping every ``stride``-th step of size dt."""
    if dt <= 0:
        raise PreconditionError("dt must be positive")
    if T < 0:
        raise PreconditionError("T must be nonnegative")
    n = int(round(T / dt))
    if abs(n * dt - T) > 1e-9 * max(1.0, T):
        raise PreconditionError(f"T={T} is not a multiple of dt={dt}")
    f = (lambda u: rdw_field(u, params))
    u = tuple(complex(x) for x in u0)
    keep = list(range(0, n + 1, stride))
    if keep[-1] != n:
        keep.append(n)
    ts = np.array([k * dt for k in keep])
    if method == "rk4":
        out = np.empty((len(keep), 3), dtype=complex)
        out[0] = u
        j = 1
        for k in range(1, n + 1):
            new = _rk4_step(f, u, dt)
            if not all(cmath.isfinite(x) for x in new):
                raise BlowUpError(f"non-finite state at t={k * dt:.6g}", last_good=((k - 1) * dt, u))
            u = new
            if j < len(keep) and k == keep[j]:
                out[j] = u
                j += 1
    elif method == "rk45":
        sol = solve_ivp(lambda t, y: np.array(f(tuple(y)), dtype=complex), (0.0, ts[-1]),
                        np.array(u, dtype=complex), method="RK45", t_eval=ts, rtol=rtol, atol=atol)
        if not sol.success or sol.y.shape[1] != len(ts) or not np.all(np.isfinite(sol.y)):
            good = np.all(np.isfinite(sol.y), axis=0)
            last = int(np.argmin(good)) - 1 if not good.all() else sol.y.shape[1] - 1
            raise BlowUpError(f"adaptive integration failed: {sol.message}",
                              last_good=(float(sol.t[max(last, 0)]), tuple(sol.y[:, max(last, 0)])))
        out = sol.y.T.copy()
    else:
        raise PreconditionError(f"unknown method {method!r}")
    return Trajectory(ts, out, dt * stride, method, params)


# ---------------------------------------------------------------- spectral data
def g_coeffs(S, J):
    """Coefficients of g(λ) = −λ⁶ + 12Sλ³ + 9(J² − 4S²), highest degree first; shape (..., 7)."""
    S = np.asarray(S, dtype=complex)
    J = np.asarray(J, dtype=complex)
    z = np.zeros_like(S)
    return np.stack([z - 1, z, z, 12 * S, z, z, 9 * (J ** 2 - 4 * S ** 2)], axis=-1)


@dataclass
class SpectralData:
    S: complex
    J: complex
    coeffs: np.ndarray
    b: complex

    @classmethod
    def at(cls, u, b=None):
        S, J = complex(casimir(u)), complex(second_integral(u))
        c = g_coeffs(S, J)
        if b is None:
            b = cmath.sqrt(complex(np.polyval(c, 1.0)))
        return cls(S, J, c, b)


def _peval(c, lam):
    """Evaluate stacked coefficient rows c (n, d) at scalar λ."""
    out = np.zeros(c.shape[0], dtype=complex)
    for k in range(c.shape[1]):
        out = out * lam + c[:, k]
    return out


def _horner(c, x):
    """Evaluate row k of c at x[k]."""
    out = np.zeros(c.shape[0], dtype=complex)
    for k in range(c.shape[1]):
        out = out * x + c[:, k]
    return out


def _pderiv(c):
    d = c.shape[1] - 1
    return c[:, :-1] * np.arange(d, 0, -1)


def _div_linear(c, r):
    """Divide rows of c by (λ − r); returns (quotient, remainder)."""
    q = np.zeros((c.shape[0], c.shape[1] - 1), dtype=complex)
    acc = np.zeros(c.shape[0], dtype=complex)
    for k in range(c.shape[1] - 1):
        acc = acc * r + c[:, k]
        q[:, k] = acc
    rem = acc * r + c[:, -1]
    return q, rem


def _div_quadratic(c, x):
    """Divide rows of c by (λ − x)(λ − 1)."""
    q1, r1 = _div_linear(c, x)
    q2, r2 = _div_linear(q1, np.ones_like(x))
    return q2, (r1, r2)


@dataclass
class LaxData:
    x: np.ndarray
    y: np.ndarray
    m: np.ndarray
    phi: np.ndarray
    g: np.ndarray      # (n, 7)
    w: np.ndarray      # (n, 5)
    remainder: np.ndarray
    b: complex

    def L(self, lam):
        """(n, 2, 2) array of L(λ)."""
        v = self.b + self.m * (lam - 1)
        u = (lam - self.x) * (lam - 1)
        w = _peval(self.w, lam)
        return np.stack([np.stack([v, w], -1), np.stack([u, -v], -1)], -2)

    def M(self, lam):
        f = -1.0 / (lam - self.x)
        z = np.zeros_like(self.x)
        return np.stack([np.stack([f * self.y / 3, f * self.phi], -1),
                         np.stack([z, -f * self.y / 3], -1)], -2)


def lax_data(u, b) -> LaxData:
    """L, M ingredients for samples u (n, 3) with a fixed branch b.

    The quotients (y − b)/(x − 1) and Φ have a removable singularity where
    x = 1 and y = b; there the equivalent forms m = q(x)/(y + b) and
    Φ = (r(x) − m²)/3 are used, with q = (g − g(1))/(λ − 1) and r = (g' − q)/(λ − 1).
    """
    u = np.atleast_2d(np.asarray(u, dtype=complex))
    S, J = casimir(u), second_integral(u)
    g = g_coeffs(S, J)
    x = u[:, 1]
    y = 3 * (u[:, 0] ** 2 - u[:, 2] ** 2)
    gp = _pderiv(g)
    gpx = _horner(gp, x)
    direct = np.abs(x - 1) >= np.abs(y + b)
    with np.errstate(divide="ignore", invalid="ignore"):
        m_direct = (y - b) / (x - 1)
        phi_direct = ((x - 1) * gpx - 2 * y * (y - b)) / (3 * (x - 1) ** 2)
        one = np.ones_like(x)
        q, _ = _div_linear(g, one)
        r, _ = _div_linear(gp - q, one)
        m_alt = _horner(q, x) / (y + b)
        phi_alt = (_horner(r, x) - m_alt ** 2) / 3
    m = np.where(direct, m_direct, m_alt)
    phi = np.where(direct, phi_direct, phi_alt)
    # v(λ) = mλ + (b − m); g − v² divided by (λ − x)(λ − 1)
    v2 = np.zeros_like(g)
    v2[:, 4] = m * m
    v2[:, 5] = 2 * m * (b - m)
    v2[:, 6] = (b - m) ** 2
    w, rem = _div_quadratic(g - v2, x)
    return LaxData(x, y, m, phi, g, w, np.abs(rem[0]) + np.abs(rem[1]), b)


def _guard(traj, b, guard, idx=None):
    if guard is None:
        return
    gx, gy = guard
    x = traj.u[:, 1]
    y = 3 * (traj.u[:, 0] ** 2 - traj.u[:, 2] ** 2)
    bad = (np.abs(x - 1) < gx) | (np.abs(y) < gy)
    if idx is not None:
        mask = np.zeros_like(bad)
        mask[idx] = True
        bad &= mask
    if bad.any():
        i = int(np.argmax(bad))
        raise SingularLocusError(
            f"sample {i} at t={traj.t[i]:.6g} is within the guard of x=1 or y=0 "
            f"(|x-1|={abs(x[i] - 1):.3g}, |y|={abs(y[i]):.3g})", sample=i, time=float(traj.t[i]))


@dataclass
class ResidualReport:
    max_residual: float
    argmax_time: float
    per_sample: np.ndarray = field(repr=False)
    times: np.ndarray = field(repr=False)
    extra: dict = field(default_factory=dict)

    def to_report(self):
        return {"max_residual": self.max_residual, "argmax_time": self.argmax_time,
                "samples": int(len(self.times)), **self.extra}


def branch(traj: Trajectory, b=None):
    """b: principal square root of g(1) at the first sample unless given."""
    return SpectralData.at(traj.u[0], b).b


def lax_residual(traj: Trajectory, grid=DEFAULT_GRID, guard=DEFAULT_GUARD, b=None) -> ResidualReport:
    """max over interior samples and grid λ of ‖L̇ − [L, M]‖∞, L̇ by central difference."""
    if len(traj.t) < 3:
        raise PreconditionError("need at least three samples for a central difference")
    b = branch(traj, b)
    _guard(traj, b, guard)
    data = lax_data(traj.u, b)
    h = traj.dt
    per = np.zeros(len(traj.t) - 2)
    for lam in grid:
        L = data.L(lam)
        M = data.M(lam)
        dL = (L[2:] - L[:-2]) / (2 * h)
        Lc, Mc = L[1:-1], M[1:-1]
        comm = Lc @ Mc - Mc @ Lc
        r = np.max(np.abs(dL - comm), axis=(1, 2))
        per = np.maximum(per, np.where(np.isfinite(r), r, np.inf))
    i = int(np.argmax(per))
    return ResidualReport(float(per[i]), float(traj.t[i + 1]), per, traj.t[1:-1],
                          {"grid": [complex(z) for z in grid], "b": complex(b)})


def spectral_check(traj: Trajectory, grid=DEFAULT_GRID, guard=DEFAULT_GUARD, b=None) -> ResidualReport:
    """Per-sample |−det L(λ) − g(λ)| and drift of the coefficients of g."""
    b = branch(traj, b)
    _guard(traj, b, guard)
    data = lax_data(traj.u, b)
    per = np.zeros(len(traj.t))
    for lam in grid:
        L = data.L(lam)
        det = L[:, 0, 0] * L[:, 1, 1] - L[:, 0, 1] * L[:, 1, 0]
        r = np.abs(-det - _peval(data.g, lam))
        per = np.maximum(per, np.where(np.isfinite(r), r, np.inf))
    g0 = data.g[0]
    drift = {}
    for k, name in ((3, "12S"), (6, "9(J^2-4S^2)")):
        ref = abs(g0[k])
        d = float(np.max(np.abs(data.g[:, k] - g0[k])))
        drift[name] = d / ref if ref > 0 else d
    i = int(np.argmax(per))
    return ResidualReport(float(per[i]), float(traj.t[i]), per, traj.t,
                          {"coefficient_drift": drift, "conservation_drift": traj.drift(),
                           "max_division_remainder": float(np.max(data.remainder)), "b": complex(b)})


def hyper_poly(x, S, r2):
    """P(u2) = 4r⁴ − 16(S − u2³/6)²."""
    return 4 * r2 ** 2 - 16 * (S - x ** 3 / 6) ** 2


def hyper_factored(x, S, r2):
    return 4 / 9 * (x ** 3 - 3 * (2 * S - r2)) * (3 * (2 * S + r2) - x ** 3)


def hyperelliptic_residual(traj: Trajectory) -> ResidualReport:
    """max |u̇2² − P(u2)| with S and r² = J taken at the first sample."""
    S0, J0 = complex(casimir(traj.u[0])), complex(second_integral(traj.u[0]))
    u = traj.u
    du2 = 2 * (u[:, 0] ** 2 - u[:, 2] ** 2) if traj.params is None else \
        np.array([rdw_field(tuple(row), traj.params)[1] for row in u])
    x = u[:, 1]
    P = hyper_poly(x, S0, J0)
    per = np.abs(du2 ** 2 - P)
    fac = float(np.max(np.abs(P - hyper_factored(x, S0, J0))))
    i = int(np.argmax(per))
    return ResidualReport(float(per[i]), float(traj.t[i]), per, traj.t, {"factored_vs_expanded": fac})


def curve_residual(traj: Trajectory) -> float:
    """max |y² − g(x)| with S, J from each sample (x = u2, y = 3(u1² − u3²))."""
    u = traj.u
    x = u[:, 1]
    y = 3 * (u[:, 0] ** 2 - u[:, 2] ** 2)
    g = g_coeffs(casimir(u), second_integral(u))
    return float(np.max(np.abs(y ** 2 - _horner(g, x))))


def order_ratio(coarse: float, fine: float) -> float:
    return coarse / fine if fine > 0 else math.inf


# ---------------------------------------------------------------- reports
def _num(z):
    z = complex(z)
    if z.imag == 0:
        return repr(z.real)
    return repr(z)


def trajectory_csv(traj: Trajectory, residuals: dict = None) -> str:
    """CSV with columns t, u1, u2, u3, S, J and one column per residual series."""
    residuals = residuals or {}
    names = sorted(residuals)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["t", "u1", "u2", "u3", "S", "J"] + names)
    S, J = traj.S, traj.J
    series = {}
    for k in names:
        rep = residuals[k]
        series[k] = dict(zip(np.round(rep.times / traj.dt).astype(int).tolist(), rep.per_sample))
    for i, t in enumerate(traj.t):
        key = int(round(t / traj.dt))
        row = [repr(float(t))] + [_num(x) for x in traj.u[i]] + [_num(S[i]), _num(J[i])]
        row += [repr(float(series[k][key])) if key in series[k] else "" for k in names]
        wr.writerow(row)
    return buf.getvalue()
