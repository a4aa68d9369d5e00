"""Price models: drift, local volatility and state-dependent jump densities.

All jump densities live on relative jump sizes ``y = z/x - 1`` in
``(-1, inf)``.  Exponential Levy models are converted from log-jump
coordinates once, when the :class:`JumpSpec` is built.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-10

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


@dataclass(frozen=True)
class CaseInfo:
    """Jump-activity regime near zero.

    ``tag`` is one of ``"O"`` (bounded jump variation), ``"I"`` (stable
    type with index 1), ``"II"`` (stable type with index in (1, 2)) or
    ``"unclassified"``.  The kappa bounds bracket ``g(x, y) |y|^(1+alpha)``
    for small ``|y|``; they are only needed by the finite-difference builder.
    """

    tag: str
    alpha_plus: Optional[float] = None
    alpha_minus: Optional[float] = None
    kappa_upper: Optional[tuple[float, float]] = None  # (+, -)
    kappa_lower: Optional[tuple[float, float]] = None

    @property
    def has_stable_params(self) -> bool:
        return None not in (self.alpha_plus, self.alpha_minus, self.kappa_upper, self.kappa_lower)


def error_form(tag: str) -> Optional[Callable[[float], float]]:
    """Leading spatial error term E(h) for a case tag."""
    if tag in ("O", "II"):
        return lambda h: h
    if tag == "I":
        return lambda h: -h * math.log(h)
    return None


class JumpSpec:
    """Jump density g(x, y) on relative jump sizes, with cell integrals.

    Subclasses implement :meth:`density`; the default integrals are
    numerical and can be overridden with closed forms.
    """

    case: CaseInfo = CaseInfo("unclassified")

    def density(self, x: float, y):
        raise NotImplementedError

    # -- integrals -----------------------------------------------------
    def _point_quad(self, x, a, b, p):
        f = lambda y: abs(y) ** p * self.density(x, y)
        val, _ = integrate.quad(f, a, b, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=400)
        return val

    def _gl(self, x, a, b, p):
        # Gauss-Legendre in log|y|; cells must not touch 0, -1 or infinity
        sgn = np.sign(a + b)
        la, lb = np.log(np.abs(a)), np.log(np.abs(b))
        lo, hi = np.minimum(la, lb), np.maximum(la, lb)
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        s = mid[:, None] + half[:, None] * _GL_X[None, :]
        r = np.exp(s)
        y = sgn[:, None] * r
        vals = r ** p * np.asarray(self.density(x, y.ravel())).reshape(y.shape) * r
        return half * (vals @ _GL_W)

    def _one_sided_mass(self, x, a, b, p):
        """Integral over cells with a < b lying on one side of zero."""
        out = np.zeros(len(a))
        special_cell = (a == 0) | (b == 0) | (a <= -1) | ~np.isfinite(b)
        reg = ~special_cell & (b > a)
        if np.any(reg):
            out[reg] = self._gl(x, a[reg], b[reg], p)
        for i in np.flatnonzero(special_cell & (b > a)):
            out[i] = self._point_quad(x, max(a[i], -1.0), b[i], p)
        return out

    def cell_mass(self, x: float, a, b, p: int = 0):
        """Vector of integrals of ``|y|^p g(x, y)`` over the cells ``[a_i, b_i]``."""
        a = np.maximum(np.atleast_1d(np.asarray(a, dtype=float)), -1.0)
        b = np.atleast_1d(np.asarray(b, dtype=float))
        out = np.zeros(np.broadcast(a, b).shape)
        a, b = np.broadcast_to(a, out.shape), np.broadcast_to(b, out.shape)
        straddle = (a < 0) & (b > 0)
        out += self._one_sided_mass(x, a, np.where(straddle, 0.0, b), p)
        if np.any(straddle):
            out[straddle] += self._one_sided_mass(x, np.zeros(straddle.sum()), b[straddle], p)
        return out

    def second_moment(self, x: float) -> float:
        """Integral of y^2 g(x, y) over (-1, inf)."""
        return float(self.cell_mass(x, [-1.0, 0.0], [0.0, np.inf], 2).sum())

    def small_first_moment(self, x: float) -> float:
        """Signed integral of y g(x, y) over (-1, 1)."""
        neg, pos = self.cell_mass(x, [-1.0, 0.0], [0.0, 1.0], 1)
        return float(pos - neg)

    def small_abs_first_moment(self, x: float) -> float:
        return float(self.cell_mass(x, [-1.0, 0.0], [0.0, 1.0], 1).sum())


# -- Kou / local Levy -----------------------------------------------------

def _binom(p, k):
    return math.comb(p, k)


@dataclass(frozen=True)
class KouJumps(JumpSpec):
    """Double-exponential log-jumps with intensity scaled by (x/S0)^beta."""

    lam: float
    p: float
    eta1: float
    eta2: float
    S0: float = 1.0
    beta: float = 0.0
    case: CaseInfo = field(default=CaseInfo("O"), init=False)

    def scale(self, x):
        return (np.asarray(x, dtype=float) / self.S0) ** self.beta

    def density(self, x, y):
        y = np.asarray(y, dtype=float)
        u = 1.0 + y
        up = self.p * self.eta1 * np.where(y > 0, u, 1.0) ** (-1.0 - self.eta1)
        dn = (1.0 - self.p) * self.eta2 * np.where((y < 0) & (y > -1), u, 1.0) ** (self.eta2 - 1.0)
        return self.scale(x) * self.lam * np.where(y > 0, up, np.where((y < 0) & (y > -1), dn, 0.0))

    def _G_pos(self, y, p):
        # antiderivative of y^p * eta1 (1+y)^(-1-eta1) vanishing at +inf
        u = 1.0 + y
        tot = 0.0
        for k in range(p + 1):
            e = k - self.eta1
            with np.errstate(divide="ignore", invalid="ignore"):
                term = np.where(np.isinf(u), 0.0, u ** e)
            tot = tot + _binom(p, k) * (-1.0) ** (p - k) * self.eta1 * term / e
        return tot

    def _G_neg(self, y, p):
        # antiderivative of |y|^p * eta2 (1+y)^(eta2-1) vanishing at y = -1
        u = 1.0 + y
        tot = 0.0
        for k in range(p + 1):
            tot = tot + _binom(p, k) * (-1.0) ** k * self.eta2 * u ** (self.eta2 + k) / (self.eta2 + k)
        return tot

    def _one_sided_mass(self, x, a, b, p):
        out = np.zeros(len(a))
        ok = b > a
        pos = ok & (a >= 0)
        neg = ok & (b <= 0)
        # GL near zero for p >= 1 to avoid cancellation in the binomial expansion
        small = (np.maximum(np.abs(a), np.where(np.isfinite(b), np.abs(b), np.inf)) < 0.05) if p else np.zeros(len(a), bool)
        cf_pos, cf_neg = pos & ~small, neg & ~small
        lam_x = self.lam * self.scale(x)
        if np.any(cf_pos):
            out[cf_pos] = lam_x * self.p * (self._G_pos(b[cf_pos], p) - self._G_pos(a[cf_pos], p))
        if np.any(cf_neg):
            out[cf_neg] = lam_x * (1 - self.p) * (self._G_neg(b[cf_neg], p) - self._G_neg(a[cf_neg], p))
        sm = ok & small
        if np.any(sm):
            aa, bb = a[sm], b[sm]
            mid, half = 0.5 * (aa + bb), 0.5 * (bb - aa)
            y = mid[:, None] + half[:, None] * _GL_X[None, :]
            vals = np.abs(y) ** p * self.density(x, y.ravel()).reshape(y.shape)
            out[sm] = half * (vals @ _GL_W)
        return out

    def second_moment(self, x):
        return float(2.0 * self.lam * self.scale(x) * (
            self.p / ((self.eta1 - 1) * (self.eta1 - 2))
            + (1 - self.p) / ((self.eta2 + 1) * (self.eta2 + 2))))

    @property
    def zeta(self) -> float:
        """Mean relative jump E[e^K - 1]."""
        return self.p * self.eta1 / (self.eta1 - 1) + (1 - self.p) * self.eta2 / (self.eta2 + 1) - 1


# -- CGMY ---------------------------------------------------------------

def upper_gamma(s: float, x):
    """Upper incomplete gamma Gamma(s, x) for real s (including s <= 0) and x > 0."""
    x = np.asarray(x, dtype=float)
    n = 0
    base = s
    while base <= 0 and not float(base).is_integer():
        base += 1.0
        n += 1
    if base <= 0:  # s is a non-positive integer: start from Gamma(0, x) = E1(x)
        n = int(-s)
        val = special.exp1(x)
        base = 0.0
    else:
        val = special.gammaincc(base, x) * special.gamma(base)
    # Gamma(a-1, x) = (Gamma(a, x) - x^(a-1) e^-x) / (a-1)
    a = base
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n):
            a -= 1.0
            val = (val - x ** a * np.exp(-x)) / a
    return val


@dataclass(frozen=True)
class CGMYJumps(JumpSpec):
    C: float
    G: float
    M: float
    Y: float

    def __post_init__(self):
        object.__setattr__(self, "case", self._classify())

    def _classify(self) -> CaseInfo:
        Y = self.Y
        if Y < 1:
            tag = "O"
        elif Y == 1:
            tag = "I"
        else:
            tag = "II"
        ys = np.geomspace(1e-8, 0.5, 400)
        kp = self.density(1.0, ys) * ys ** (1 + Y)
        km = self.density(1.0, -ys) * ys ** (1 + Y)
        return CaseInfo(tag, Y, Y, (float(kp.max()), float(km.max())),
                        (float(kp.min()), float(km.min())))

    def levy_density(self, z):
        """Log-jump density k(z)."""
        z = np.asarray(z, dtype=float)
        az = np.abs(z)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            rate = np.where(z > 0, self.M, self.G)
            out = self.C * np.exp(-rate * az) / az ** (self.Y + 1)
        return np.where(z == 0, 0.0, out)

    def density(self, x, y):
        y = np.asarray(y, dtype=float)
        inside = y > -1
        u = np.where(inside, 1.0 + y, 1.0)
        return np.where(inside, self.levy_density(np.log(u)) / u, 0.0)

    def _tail(self, rate, z):
        """C * integral over (z, inf) of exp(-rate w) w^(-1-Y) dw, z > 0."""
        z = np.asarray(z, dtype=float)
        out = np.zeros_like(z)
        fin = np.isfinite(z)
        if rate == 0:
            if self.Y <= 0:
                raise ValueError("CGMY with G = 0 needs Y > 0")
            out[fin] = self.C * z[fin] ** (-self.Y) / self.Y
            return out
        out[fin] = self.C * rate ** self.Y * upper_gamma(-self.Y, rate * z[fin])
        return out

    def _one_sided_mass(self, x, a, b, p):
        if p != 0:
            return super()._one_sided_mass(x, a, b, p)
        out = np.zeros(len(a))
        ok = b > a
        pos, neg = ok & (a >= 0), ok & (b <= 0)
        with np.errstate(divide="ignore"):
            if np.any(pos):
                za, zb = np.log1p(a[pos]), np.log1p(b[pos])
                out[pos] = self._tail(self.M, za) - self._tail(self.M, zb)
            if np.any(neg):
                za, zb = -np.log1p(a[neg]), -np.log1p(b[neg])  # |z|, za > zb
                out[neg] = self._tail(self.G, zb) - self._tail(self.G, za)
        return out

    def second_moment(self, x=None):
        C, G, M, Y = self.C, self.G, self.M, self.Y
        if float(Y).is_integer():
            up = lambda z: C * (-np.expm1(-z)) ** 2 * np.exp((2 - M) * z) / z ** (1 + Y)
            dn = lambda z: C * np.expm1(-z) ** 2 * np.exp(-G * z) / z ** (1 + Y)
            v1, _ = integrate.quad(up, 0, np.inf, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=400)
            v2, _ = integrate.quad(dn, 0, np.inf, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=400)
            return v1 + v2
        return C * special.gamma(-Y) * ((M - 2) ** Y - 2 * (M - 1) ** Y + M ** Y
                                        + (G + 2) ** Y - 2 * (G + 1) ** Y + G ** Y)


@dataclass(frozen=True)
class StableLikeJumps(JumpSpec):
    """Generic density with user-declared stable-type parameters.

    Mostly useful for tests and for models outside the built-in families.
    """

    fn: Callable
    case: CaseInfo = CaseInfo("unclassified")

    def density(self, x, y):
        return self.fn(x, np.asarray(y, dtype=float))


# -- models ---------------------------------------------------------------

@dataclass(frozen=True)
class ModelSpec:
    gamma: float
    sigma: Callable
    jump: Optional[JumpSpec] = None
    name: str = "model"
    params: dict = field(default_factory=dict, compare=False)

    def vol(self, x):
        return np.broadcast_to(np.asarray(self.sigma(np.asarray(x, dtype=float)), dtype=float),
                               np.shape(x)).astype(float)


def gbm(sigma0: float, r: float, d: float = 0.0) -> ModelSpec:
    if sigma0 <= 0:
        raise ValueError("sigma0 must be positive")
    return ModelSpec(r - d, lambda x: np.full(np.shape(x), sigma0, dtype=float), None, "gbm",
                     dict(sigma0=sigma0, r=r, d=d))


def localvol(sigma0: float, r: float, d: float = 0.0, beta: float = 0.0,
             s_ref: float = 1.0) -> ModelSpec:
    """CEV-style local volatility sigma0 * (x/s_ref)^beta, no jumps."""
    if sigma0 < 0:
        raise ValueError("sigma0 must be non-negative")
    return ModelSpec(r - d, lambda x: sigma0 * (np.asarray(x, dtype=float) / s_ref) ** beta,
                     None, "localvol", dict(sigma0=sigma0, r=r, d=d, beta=beta, s_ref=s_ref))


@dataclass(frozen=True)
class KouLocalLevyParams:
    S0: float
    sigma0: float
    lam: float
    p: float
    eta1: float
    eta2: float
    beta: float = 0.0
    r: float = 0.0
    d: float = 0.0

    def __post_init__(self):
        if self.eta1 <= 2:
            raise ValueError("eta1 must exceed 2 for a finite second jump moment")
        if self.eta2 <= 0:
            raise ValueError("eta2 must be positive")
        if not 0 <= self.p <= 1:
            raise ValueError("p must lie in [0, 1]")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")


def kou_local_levy(p: KouLocalLevyParams) -> ModelSpec:
    sig = lambda x: p.sigma0 * (np.asarray(x, dtype=float) / p.S0) ** p.beta
    jump = KouJumps(p.lam, p.p, p.eta1, p.eta2, p.S0, p.beta) if p.lam > 0 else None
    return ModelSpec(p.r - p.d, sig, jump, "kou_local", dict(vars(p)))


@dataclass(frozen=True)
class CGMYParams:
    C: float
    G: float
    M: float
    Y: float
    r: float = 0.0
    d: float = 0.0
    sigma_extra: float = 0.0

    def __post_init__(self):
        if self.C < 0:
            raise ValueError("C must be non-negative")
        if self.G < 0:
            raise ValueError("G must be non-negative")
        if self.M <= 2:
            raise ValueError("M must exceed 2 (finite second relative-jump moment)")
        if self.Y >= 2:
            raise ValueError("Y must be below 2")


def cgmy(p: CGMYParams) -> ModelSpec:
    jump = CGMYJumps(p.C, p.G, p.M, p.Y) if p.C > 0 else None
    s = p.sigma_extra
    return ModelSpec(p.r - p.d, lambda x: np.full(np.shape(x), s, dtype=float), jump, "cgmy",
                     dict(vars(p)))


@dataclass(frozen=True)
class CaseResult:
    tag: str
    info: CaseInfo

    @property
    def error_form(self):
        return error_form(self.tag)


def classify_case(jump: Optional[JumpSpec], lower: float = 1.0, upper: float = 1.0) -> CaseResult:
    """Classify the jump regime on [lower, upper].

    Declared classifications are trusted; otherwise the small-jump
    power law is estimated from the density's log-slope near zero.
    """
    if jump is None:
        return CaseResult("O", CaseInfo("O"))
    if jump.case.tag != "unclassified":
        return CaseResult(jump.case.tag, jump.case)
    xs = [lower, 0.5 * (lower + upper), upper]
    eps = 1e-7
    alphas = []
    for x in xs:
        for sgn in (1.0, -1.0):
            g1, g2 = jump.density(x, sgn * eps), jump.density(x, sgn * 2 * eps)
            if g1 <= 0 or g2 <= 0:
                alphas.append(-1.0)  # vanishes near zero: bounded variation side
                continue
            alphas.append(-math.log(float(g2) / float(g1)) / math.log(2.0) - 1.0)
    a = max(alphas)
    if a < 0.95:
        tag = "O"
    elif abs(a - 1) <= 0.05:
        tag = "I"
    elif 1 < a < 2:
        tag = "II"
    else:
        tag = "unclassified"
    return CaseResult(tag, CaseInfo(tag))
