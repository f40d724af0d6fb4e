"""Cone metrics, the smoothing kernel, and the smoothed rotationally
symmetric metric with its Gaussian curvature.

Everything here lives in polar coordinates (r, theta) around a single cone
tip. The flat cone of angle alpha has metric (alpha r / 2 pi)^2 dtheta^2 +
dr^2; smoothing replaces the circumferential coefficient with
phi(r) = (f(r/rho)(alpha/2pi - 1) + 1) r for a smooth transition f, which
interpolates between the Euclidean metric near the tip and the cone metric
outside radius rho.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import (
    BoundViolation,
    NonPositiveArgumentError,
    OutOfDomainError,
    QuadratureFailure,
    StepTooLargeError,
)

TWO_PI = 2.0 * math.pi

KERNEL_BOUND_LIMIT = 16.0  # certified sup of f, |f'|, |f''| must not exceed 2^4

# Bound on |f'''| of the shipped transition over (0, 1), used as the
# Lipschitz constant that pads grid maxima during certification.
# With s(x) = 1/(1+e^x) and psi(t) = 1/t - 1/(1-t),
#   f''' = s'''(psi) psi'^3 + 3 s''(psi) psi' psi'' + s'(psi) psi'''.
# For t <= 1/2 put x = 1/t >= 2; then psi >= x - 2 >= 0 and
# |s'|, |s''|, |s'''| <= s <= e^-psi <= e^2 e^-x, while |psi'| <= 2x^2,
# |psi''| <= 4x^3, |psi'''| <= 12x^4, so
#   |f'''| <= e^2 e^-x (8x^6 + 24x^5 + 12x^4) <= 44 e^2 x^6 e^-x
#          <= 44 e^2 6^6 e^-6 < 3.8e4.
# The reflection symmetry f(t) = 1 - f(1-t) extends this to all of (0, 1).
# (A dense numeric scan puts the true maximum near 110; the slack here only
# makes the certification padding more conservative.)
TRANSITION_THIRD_DERIV_BOUND = 4.0e4

# |psi| beyond this leaves f indistinguishable from 0 or 1 in double
# precision, and the power terms in the derivative formulas stay finite.
_PSI_CUTOFF = 1500.0


def _transition_triple(t: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(f, f', f'') of f(t) = 1 / (1 + exp(1/t - 1/(1-t))) for t > 0.

    Equivalent to g(t) / (g(t) + g(1-t)) with g(s) = exp(-1/s): a symmetric
    smooth transition, identically 1 for t >= 1, vanishing to infinite
    order at 0, with f(1/2) = 1/2.
    """
    f = np.ones_like(t)
    fp = np.zeros_like(t)
    fpp = np.zeros_like(t)
    inner = t < 1.0
    if not inner.any():
        return f, fp, fpp
    ti = t[inner]
    psi = 1.0 / ti - 1.0 / (1.0 - ti)
    e = np.exp(-np.abs(psi))
    sigma = np.where(psi >= 0.0, e / (1.0 + e), 1.0 / (1.0 + e))
    fi = np.where(psi > _PSI_CUTOFF, 0.0, np.where(psi < -_PSI_CUTOFF, 1.0, sigma))
    fpi = np.zeros_like(ti)
    fppi = np.zeros_like(ti)
    core = np.abs(psi) <= _PSI_CUTOFF
    if core.any():
        tc = ti[core]
        sc = sigma[core]
        p = sc * (1.0 - sc)
        psi1 = -(1.0 / tc**2 + 1.0 / (1.0 - tc) ** 2)
        psi2 = 2.0 / tc**3 - 2.0 / (1.0 - tc) ** 3
        fpi[core] = -p * psi1
        fppi[core] = p * (1.0 - 2.0 * sc) * psi1**2 - p * psi2
    f[inner] = fi
    fp[inner] = fpi
    fpp[inner] = fppi
    return f, fp, fpp


def _transition_tail(eps: float) -> tuple[float, float, float]:
    """Sup of (f, |f'|, |f''|) over (0, eps] for the shipped transition.

    With x = 1/t >= 1/eps: f <= e^2 e^-x, |f'| <= 2 e^2 x^2 e^-x and
    |f''| <= e^-psi (psi'^2 + |psi''|) <= 8 e^2 x^4 e^-x, all decreasing
    in x for x >= 6. Evaluated in log space at x = 1/eps; for eps <= 1e-4
    these underflow to exactly 0.0.
    """
    x = 1.0 / eps
    lx = math.log(x)

    def safe_exp(a):
        return 0.0 if a < -745.0 else math.exp(a)

    return (
        safe_exp(2.0 - x),
        safe_exp(2.0 + math.log(2.0) + 2.0 * lx - x),
        safe_exp(2.0 + math.log(8.0) + 4.0 * lx - x),
    )


class SmoothingKernel:
    """Smooth transition f: (0, inf) -> (0, 1] with certifiable bounds.

    Contract: f smooth, f == 1 on [1, inf), f -> 0 with all derivatives as
    t -> 0+, and sup of f, |f'|, |f''| at most 2^4 once certified.

    Parameters
    ----------
    triple_fn : callable mapping a positive float ndarray to (f, f', f'').
    third_derivative_bound : verified sup of |f'''| on (0, inf).
    tail_bound : callable eps -> sup of (f, |f'|, |f''|) over (0, eps].
    """

    def __init__(self, triple_fn, third_derivative_bound, tail_bound, label="kernel"):
        self._triple_fn = triple_fn
        self.third_derivative_bound = float(third_derivative_bound)
        self.tail_bound = tail_bound
        self.label = label
        self._certificate = None

    def eval(self, t):
        """(f(t), f'(t), f''(t)); scalar in, scalars out; array in, arrays out."""
        arr = np.asarray(t, dtype=float)
        if np.any(arr <= 0.0) or not np.all(np.isfinite(arr)):
            raise NonPositiveArgumentError(f"kernel argument must be positive, got {t!r}")
        triple = self._triple_fn(np.atleast_1d(arr))
        if arr.ndim == 0:
            return tuple(float(x[0]) for x in triple)
        return triple

    def f(self, t):
        return self.eval(t)[0]

    @property
    def certificate(self):
        return self._certificate

    @property
    def certified_bound(self):
        return None if self._certificate is None else self._certificate.bound

    def certify(self, grid_step: float = 1e-5) -> "KernelCertificate":
        if self._certificate is None or self._certificate.grid_step > grid_step:
            self._certificate = certify_kernel(self, grid_step)
        return self._certificate

    def __repr__(self):
        return f"SmoothingKernel({self.label!r})"


@lru_cache(maxsize=1)
def standard_kernel() -> SmoothingKernel:
    """The shipped transition kernel (shared, effectively immutable)."""
    return SmoothingKernel(
        _transition_triple,
        TRANSITION_THIRD_DERIV_BOUND,
        _transition_tail,
        label="logistic ratio of exp(-1/t)",
    )


def kernel_eval(kernel: SmoothingKernel, t):
    """Evaluate (f, f', f'') at t > 0. Exactly (1, 0, 0) on the plateau t >= 1."""
    return kernel.eval(t)


@dataclass(frozen=True)
class KernelCertificate:
    """Outcome of a kernel certification run.

    ``bound`` dominates sup f, sup |f'| and sup |f''| on (0, inf): each grid
    maximum is padded by half a grid step times a verified Lipschitz
    constant (|f'''| for f'', then the padded bounds cascade down), and the
    ungridded tail (0, grid_step] is covered by the kernel's tail bound.
    """

    bound: float
    grid_step: float
    n_grid: int
    max_f: float
    argmax_f: float
    max_df: float
    argmax_df: float
    max_d2f: float
    argmax_d2f: float
    third_derivative_bound: float
    padded_f: float
    padded_df: float
    padded_d2f: float
    tail_f: float
    tail_df: float
    tail_d2f: float
    label: str

    def as_dict(self) -> dict:
        return {
            "bound": self.bound,
            "limit": KERNEL_BOUND_LIMIT,
            "grid_step": self.grid_step,
            "n_grid": self.n_grid,
            "witness_maxima": {
                "f": [self.max_f, self.argmax_f],
                "df": [self.max_df, self.argmax_df],
                "d2f": [self.max_d2f, self.argmax_d2f],
            },
            "third_derivative_bound": self.third_derivative_bound,
            "padded": {"f": self.padded_f, "df": self.padded_df, "d2f": self.padded_d2f},
            "tail": {"f": self.tail_f, "df": self.tail_df, "d2f": self.tail_d2f},
            "kernel": self.label,
        }


def certify_kernel(kernel: SmoothingKernel, grid_step: float = 1e-5) -> KernelCertificate:
    """Certify sup bounds for f, |f'|, |f''| on (0, inf).

    Evaluates the kernel on the grid {i * grid_step} covering (0, 1] (the
    plateau needs no grid), pads each maximum by (grid_step / 2) times a
    verified Lipschitz constant, and folds in the tail bound near 0.
    Raises BoundViolation if the certified bound exceeds 2^4 or the kernel
    fails to vanish at 0; the caller must then replace the kernel rather
    than proceed.
    """
    if not 0.0 < grid_step <= 1e-4:
        raise ValueError("grid_step must be in (0, 1e-4]")
    n = int(round(1.0 / grid_step))
    t = np.arange(1, n + 1, dtype=float) * grid_step
    t[-1] = 1.0
    f, fp, fpp = kernel.eval(t)

    if f[0] > 1e-8:
        raise BoundViolation(
            f"kernel does not vanish near 0: f({t[0]:g}) = {f[0]:g}",
            witness_t=float(t[0]),
            derivative="f",
        )
    if np.any(f <= 0.0) or np.any(f > 1.0):
        bad = int(np.argmax((f <= 0.0) | (f > 1.0)))
        raise BoundViolation(
            f"kernel leaves (0, 1]: f({t[bad]:g}) = {f[bad]:g}",
            witness_t=float(t[bad]),
            derivative="f",
        )

    i0, i1, i2 = int(np.argmax(f)), int(np.argmax(np.abs(fp))), int(np.argmax(np.abs(fpp)))
    m0, m1, m2 = float(f[i0]), float(abs(fp[i1])), float(abs(fpp[i2]))
    tail_f, tail_df, tail_d2f = kernel.tail_bound(grid_step)

    half = 0.5 * grid_step
    padded_d2f = max(m2 + half * kernel.third_derivative_bound, tail_d2f)
    padded_df = max(m1 + half * padded_d2f, tail_df)
    padded_f = max(m0 + half * padded_df, tail_f)

    certificate = KernelCertificate(
        bound=max(padded_f, padded_df, padded_d2f),
        grid_step=grid_step,
        n_grid=n,
        max_f=m0,
        argmax_f=float(t[i0]),
        max_df=m1,
        argmax_df=float(t[i1]),
        max_d2f=m2,
        argmax_d2f=float(t[i2]),
        third_derivative_bound=kernel.third_derivative_bound,
        padded_f=padded_f,
        padded_df=padded_df,
        padded_d2f=padded_d2f,
        tail_f=tail_f,
        tail_df=tail_df,
        tail_d2f=tail_d2f,
        label=kernel.label,
    )
    if certificate.bound > KERNEL_BOUND_LIMIT:
        worst = max(
            ("f", padded_f, float(t[i0])),
            ("f'", padded_df, float(t[i1])),
            ("f''", padded_d2f, float(t[i2])),
            key=lambda w: w[1],
        )
        raise BoundViolation(
            f"certified bound {certificate.bound:g} exceeds {KERNEL_BOUND_LIMIT:g}: "
            f"{worst[0]} reaches {worst[1]:g} near t = {worst[2]:g}",
            witness_t=worst[2],
            derivative=worst[0],
        )
    return certificate


# ---------------------------------------------------------------------------
# Metrics


def _flat_phi(alpha: float, r):
    """Circumferential coefficient of the exact cone metric: alpha r / 2 pi."""
    return alpha * r / TWO_PI


@dataclass(frozen=True)
class ConeMetric:
    """Flat cone (alpha r / 2 pi)^2 dtheta^2 + dr^2 on a disk of given radius."""

    alpha: float
    radius: float

    def __post_init__(self):
        if not (self.alpha > 0.0 and self.radius > 0.0):
            raise ValueError("cone angle and radius must be positive")

    def coefficients(self, r):
        r = _check_radius(r)
        return _flat_phi(self.alpha, r) ** 2, np.ones_like(r) if np.ndim(r) else 1.0


@dataclass(frozen=True)
class SmoothedCone:
    """Smoothed cone metric phi(r)^2 dtheta^2 + dr^2 on the rho-disk.

    Coincides exactly with ConeMetric(alpha) at r >= rho.
    """

    alpha: float
    rho: float
    kernel: SmoothingKernel = field(default_factory=standard_kernel)

    def __post_init__(self):
        if not (self.alpha > 0.0 and math.isfinite(self.alpha)):
            raise ValueError(f"cone angle must be positive, got {self.alpha}")
        if not (self.rho > 0.0 and math.isfinite(self.rho)):
            raise ValueError(f"safe radius must be positive, got {self.rho}")


def _check_radius(r):
    arr = np.asarray(r, dtype=float)
    if np.any(arr <= 0.0) or not np.all(np.isfinite(arr)):
        raise OutOfDomainError(f"radius must be positive and finite, got {r!r}")
    return arr if arr.ndim else float(arr)


def phi(cone: SmoothedCone, r):
    """Circumferential metric coefficient of the smoothed cone.

    (f(r/rho)(alpha/2pi - 1) + 1) r on the transition disk; exactly
    alpha r / 2 pi on the plateau r >= rho.
    """
    r = _check_radius(r)
    t = np.asarray(r, dtype=float) / cone.rho
    f = cone.kernel.eval(np.atleast_1d(t))[0]
    beta = cone.alpha / TWO_PI
    smooth = (f * (beta - 1.0) + 1.0) * np.atleast_1d(r)
    out = np.where(np.atleast_1d(t) >= 1.0, _flat_phi(cone.alpha, np.atleast_1d(r)), smooth)
    return float(out[0]) if np.ndim(r) == 0 else out


def metric_coefficients(cone: SmoothedCone, r):
    """(g_theta_theta, g_rr) = (phi(r)^2, 1)."""
    p = phi(cone, r)
    return (p * p, np.ones_like(p) if np.ndim(p) else 1.0)


def curvature_closed_form(cone: SmoothedCone, r):
    """Gaussian curvature (2 pi - alpha)(2 f_v' + r f_v'') / (2 pi phi(r)).

    f_v(r) = f(r / rho), so f_v' = f'(t)/rho and f_v'' = f''(t)/rho^2 with
    t = r/rho. Identically 0 on the plateau r >= rho and for alpha = 2 pi.
    """
    r = _check_radius(r)
    t = np.atleast_1d(np.asarray(r, dtype=float) / cone.rho)
    _, fp, fpp = cone.kernel.eval(t)
    rr = np.atleast_1d(r)
    numerator = (TWO_PI - cone.alpha) * (2.0 * fp / cone.rho + rr * fpp / cone.rho**2)
    value = np.where(t >= 1.0, 0.0, numerator / (TWO_PI * np.atleast_1d(phi(cone, r))))
    return float(value[0]) if np.ndim(r) == 0 else value


def curvature_finite_diff(cone: SmoothedCone, r, h: float):
    """Gaussian curvature as -phi''(r)/phi(r) with central differences on phi.

    Independent of the analytic kernel derivatives; serves as the
    cross-check route for curvature_closed_form.
    """
    r = _check_radius(r)
    if not (h > 0.0 and math.isfinite(h)):
        raise StepTooLargeError(f"step must be a positive number, got {h!r}")
    if h >= np.min(r) / 4.0:
        raise StepTooLargeError(f"step {h} too large for radius {np.min(r)} (need h < r/4)")
    phi0 = phi(cone, r)
    second = (phi(cone, r + h) - 2.0 * phi0 + phi(cone, r - h)) / (h * h)
    return -second / phi0


def adaptive_simpson(fn, a: float, b: float, tol: float, max_intervals: int = 10**6):
    """Adaptive Simpson quadrature with Richardson extrapolation.

    Raises QuadratureFailure if the interval budget runs out before the
    local error estimates meet the tolerance.
    """
    if b <= a:
        raise ValueError("need a < b")
    used = [0]

    def recurse(x0, x2, f0, f1, f2, whole, tol, depth):
        used[0] += 2
        if used[0] > max_intervals:
            raise QuadratureFailure(
                f"interval budget {max_intervals} exhausted before reaching tolerance"
            )
        x1 = 0.5 * (x0 + x2)
        lm, rm = 0.5 * (x0 + x1), 0.5 * (x1 + x2)
        flm, frm = fn(lm), fn(rm)
        h6 = (x2 - x0) / 12.0
        left = h6 * (f0 + 4.0 * flm + f1)
        right = h6 * (f1 + 4.0 * frm + f2)
        delta = left + right - whole
        if depth > 0 and abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        if depth > 48:
            raise QuadratureFailure(f"maximum refinement depth exceeded near x = {x1:g}")
        return recurse(x0, x1, f0, flm, f1, left, 0.5 * tol, depth + 1) + recurse(
            x1, x2, f1, frm, f2, right, 0.5 * tol, depth + 1
        )

    f0, f2 = fn(a), fn(b)
    f1 = fn(0.5 * (a + b))
    whole = (b - a) / 6.0 * (f0 + 4.0 * f1 + f2)
    return recurse(a, b, f0, f1, f2, whole, tol, 0)


def total_curvature(cone: SmoothedCone, quadrature_tol: float = 1e-9) -> float:
    """Integral of the curvature over the smoothing disk: 2 pi int K phi dr.

    Analytically equals the angle defect 2 pi - alpha, since
    2 pi K phi = (2 pi - alpha) d/dr (f_v + r f_v'); the quadrature here is
    the numerical verification of that identity.
    """
    if not (quadrature_tol > 0.0):
        raise ValueError("quadrature tolerance must be positive")

    def integrand(r):
        if r <= 0.0:
            return 0.0  # K * phi extends continuously by 0 at the tip
        return TWO_PI * curvature_closed_form(cone, r) * phi(cone, r)

    return adaptive_simpson(integrand, 0.0, cone.rho, quadrature_tol)


def distortion_to_cone(cone: SmoothedCone) -> float:
    """Bi-Lipschitz distortion between the smoothed metric and the cone.

    Both metrics are diagonal in shared polar coordinates with the same
    radial coefficient, so the distortion is the sup over r in (0, rho] of
    max(phi / (alpha r / 2 pi), (alpha r / 2 pi) / phi). The kernel is
    strictly increasing on (0, 1), so that ratio is monotone in r and the
    sup is the r -> 0 limit, where phi/r -> 1: exactly
    max(alpha / 2 pi, 2 pi / alpha). Returns exactly 1.0 for the flat cone.
    """
    beta = cone.alpha / TWO_PI
    return max(beta, 1.0 / beta)
