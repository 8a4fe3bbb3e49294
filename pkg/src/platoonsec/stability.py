"""Stability certification for the switched CACC/ACC closed loop.

Four layers of analysis, all on the 2x2 per-vehicle error system
zdot = A z with A = [[0, 1], [k_pos, k_vel]]:

* BIBO / eigenvalue placement checks on the aggregate gains (``check_bibo_lemma1``).
* A common quadratic Lyapunov certificate V(z) = z'Pz valid for both
  controller matrices simultaneously, which guarantees global uniform
  exponential stability under arbitrary switching (``lmi_residual``,
  ``check_common_lyapunov``, ``find_common_lyapunov``).  The same
  negative-definiteness condition is also exposed as a literal set of scalar
  inequalities in the gains and the entries of P
  (``check_gues_inequalities``); the two forms agree exactly because for a
  2x2 symmetric S, S < 0 iff S[0][0] < 0 and det S > 0.
* Dwell-time lower bounds for how long the string-stable (CACC) mode must
  stay active after each activation so that switching cannot destroy the
  exponential envelope (``lyapunov_constants``, ``min_dwell_time``).
* Frequency-domain string-stability checks on the hop-to-hop spacing-error
  transfer function: H-infinity norm <= 1 and a sign-definite impulse
  response (``spacing_error_tf``, ``hinf_norm``, ``impulse_response_nonneg``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .control import ACC, CACC, AccGains, CaccGains

__all__ = [
    "LyapunovCandidate",
    "LyapunovConstants",
    "GuesEnvelope",
    "CertificateReport",
    "GuesInequalities",
    "DwellBounds",
    "TransferFunction",
    "HinfNorm",
    "check_bibo_lemma1",
    "lmi_residual",
    "check_common_lyapunov",
    "check_gues_inequalities",
    "find_common_lyapunov",
    "lyapunov_constants",
    "min_dwell_time",
    "spacing_error_tf",
    "hinf_norm",
    "impulse_response_nonneg",
    "fit_envelope",
]


def sym_eig_2x2(S) -> tuple[float, float]:
    """Eigenvalues (min, max) of a symmetric 2x2 matrix, closed form."""
    s11, s12, s22 = float(S[0][0]), float(S[0][1]), float(S[1][1])
    mean = 0.5 * (s11 + s22)
    radius = math.hypot(0.5 * (s11 - s22), s12)
    return mean - radius, mean + radius


@dataclass(frozen=True)
class LyapunovCandidate:
    """Entries of a symmetric 2x2 Lyapunov matrix P."""

    p11: float
    p12: float
    p22: float

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.p11, self.p12], [self.p12, self.p22]])

    def is_positive_definite(self, tol: float = 0.0) -> bool:
        return self.p11 > tol and self.p11 * self.p22 - self.p12 ** 2 > tol


def _p_matrix(P) -> np.ndarray:
    if isinstance(P, LyapunovCandidate):
        return P.as_matrix()
    P = np.asarray(P, dtype=float)
    if P.shape != (2, 2) or P[0, 1] != P[1, 0]:
        raise ValueError("P must be a symmetric 2x2 matrix")
    return P


@dataclass(frozen=True)
class LyapunovConstants:
    """Scalar constants extracted from a certificate (P, A).

    a|z|^2 <= V(z) <= b|z|^2 and Vdot <= -c|z|^2 along zdot = Az, giving the
    exponential decay rate lam = c / (2 b) for V-based envelopes.
    """

    a: float
    b: float
    c: float
    lam: float


@dataclass(frozen=True)
class GuesEnvelope:
    """Fitted exponential envelope |z(t)| <= gain * |z(0)| * exp(-rate * t)."""

    gain: float
    rate: float

    def __post_init__(self):
        if not (self.gain > 0 and self.rate > 0):
            raise ValueError("envelope gain and rate must be positive")


@dataclass(frozen=True)
class CertificateReport:
    """Outcome of checking one P against a family of closed-loop matrices."""

    p_definite: bool
    p_eigenvalues: tuple[float, float]
    residual_max_eigenvalues: tuple[float, ...]
    tol: float

    @property
    def passed(self) -> bool:
        return self.p_definite and all(e < -self.tol for e in self.residual_max_eigenvalues)


def check_bibo_lemma1(k_pos: float, k_vel: float) -> dict:
    """Gain-level stability checks for A = [[0,1],[k_pos,k_vel]].

    ``hurwitz``: both aggregate gains negative (eigenvalues in the open left
    half plane -- bounded-input bounded-output stability of the hop).
    ``lemma1``: the stricter k_vel <= -2 sqrt(-k_pos), which additionally
    forces the eigenvalues to be real (no oscillatory modes).  The two are
    deliberately separate: gain sets exist that are Hurwitz yet fail the
    real-eigenvalue condition by a hair.
    """
    hurwitz = k_pos < 0 and k_vel < 0
    lemma1 = k_pos < 0 and k_vel <= -2.0 * math.sqrt(-k_pos)
    return {"hurwitz": hurwitz, "lemma1": lemma1}


def lmi_residual(A, P) -> np.ndarray:
    """The Lyapunov residual S = A'P + PA (negative definite for a certificate).

    For A = [[0,1],[k,m]] the closed form is
    S = [[2 k p12, k p22 + p11 + m p12], [., 2 (p12 + m p22)]].
    """
    A = np.asarray(A, dtype=float)
    P = _p_matrix(P)
    return A.T @ P + P @ A


def check_common_lyapunov(P, A_list, tol: float = 1e-9) -> CertificateReport:
    """Check one quadratic V(z) = z'Pz against every matrix in A_list.

    Passes iff P is positive definite and each residual A'P + PA has its
    maximum eigenvalue below -tol.  Borderline candidates (within tol of
    singularity) are reported as failures; eigenvalues are included for
    diagnostics.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    P = _p_matrix(P)
    p_lo, p_hi = sym_eig_2x2(P)
    residual_eigs = tuple(sym_eig_2x2(lmi_residual(A, P))[1] for A in A_list)
    return CertificateReport(
        p_definite=p_lo > tol,
        p_eigenvalues=(p_lo, p_hi),
        residual_max_eigenvalues=residual_eigs,
        tol=tol,
    )


@dataclass(frozen=True)
class GuesInequalities:
    """Literal scalar conditions equivalent to the common-certificate LMI.

    Beyond positive definiteness of P (with the p12 > 0 normalization) and
    negativity of the position gains, each mode's velocity gain must lie
    strictly between the two roots of the residual-determinant quadratic:

        m_lo/hi = ((k p22 - p11) -/+ 2 sqrt(k (p12^2 - p11 p22))) / p12

    If the square-root argument is negative the bracket is ill-posed, which
    signals a sign violation in the corresponding position gain; those
    entries are reported False and named in ``ill_posed``.
    """

    p11_positive: bool
    p12_positive: bool
    p_det_positive: bool
    k1_negative: bool
    k3_negative: bool
    k2_above_lower: bool
    k2_below_upper: bool
    k4_above_lower: bool
    k4_below_upper: bool
    ill_posed: frozenset[str]

    @property
    def all_satisfied(self) -> bool:
        return (self.p11_positive and self.p12_positive and self.p_det_positive
                and self.k1_negative and self.k3_negative
                and self.k2_above_lower and self.k2_below_upper
                and self.k4_above_lower and self.k4_below_upper)


def _velocity_gain_bracket(k: float, m: float, p11: float, p12: float, p22: float):
    """(above_lower, below_upper, ill_posed) for one mode's (k, m) pair."""
    arg = k * (p12 ** 2 - p11 * p22)
    if arg < 0 or p12 == 0:
        return False, False, True
    root_span = 2.0 * math.sqrt(arg)
    center = k * p22 - p11
    lower = (center - root_span) / p12
    upper = (center + root_span) / p12
    if p12 < 0:
        lower, upper = upper, lower
    return m > lower, m < upper, False


def check_gues_inequalities(k1: float, k2: float, k3: float, k4: float, P) -> GuesInequalities:
    """Evaluate the scalar certificate conditions literally, one flag each."""
    if isinstance(P, LyapunovCandidate):
        p11, p12, p22 = P.p11, P.p12, P.p22
    else:
        P = _p_matrix(P)
        p11, p12, p22 = P[0, 0], P[0, 1], P[1, 1]

    det_ok = p11 > 0 and p22 > p12 ** 2 / p11
    k2_lo, k2_hi, ill_cacc = _velocity_gain_bracket(k1, k2, p11, p12, p22)
    k4_lo, k4_hi, ill_acc = _velocity_gain_bracket(k3, k4, p11, p12, p22)
    ill = set()
    if ill_cacc:
        ill.update({"k2_above_lower", "k2_below_upper"})
    if ill_acc:
        ill.update({"k4_above_lower", "k4_below_upper"})
    return GuesInequalities(
        p11_positive=p11 > 0,
        p12_positive=p12 > 0,
        p_det_positive=det_ok,
        k1_negative=k1 < 0,
        k3_negative=k3 < 0,
        k2_above_lower=k2_lo,
        k2_below_upper=k2_hi,
        k4_above_lower=k4_lo,
        k4_below_upper=k4_hi,
        ill_posed=frozenset(ill),
    )


def find_common_lyapunov(A_list, grid: int = 28, rounds: int = 4,
                         tol: float = 1e-9) -> LyapunovCandidate | None:
    """Search for a common certificate by scanning P = [[1, p12],[p12, p22]].

    The scan normalizes p11 = 1 (certificates are scale invariant) and
    explores the positive-definite wedge p12 > 0, p22 > p12^2 on a refining
    grid, scoring each candidate by its worst-case normalized decay margin
    min_A(-max_eig(A'P + PA)) / max_eig(P).  The candidate with the best
    margin is refined locally for a few rounds.  Returns None when nothing
    passes ``check_common_lyapunov`` at ``tol`` within the budget -- which is
    absence of evidence, not a proof that no certificate exists.
    """
    A_list = [np.asarray(A, dtype=float) for A in A_list]
    if not A_list:
        return LyapunovCandidate(1.0, 0.5, 1.0)

    def score(p12: float, p22: float) -> float:
        if p12 <= 0 or p22 <= p12 ** 2:
            return -math.inf
        P = ((1.0, p12), (p12, p22))
        b = sym_eig_2x2(P)[1]
        worst = math.inf
        for A in A_list:
            k, m = A[1, 0], A[1, 1]
            s11 = 2.0 * k * p12
            s12 = k * p22 + 1.0 + m * p12
            s22 = 2.0 * (p12 + m * p22)
            worst = min(worst, -sym_eig_2x2(((s11, s12), (s12, s22)))[1])
        return worst / b

    lo12, hi12, lo22, hi22 = 1e-3, 6.0, 1e-3, 36.0
    best = (-math.inf, None)
    for _ in range(rounds):
        for p12 in np.linspace(lo12, hi12, grid):
            for p22 in np.linspace(lo22, hi22, grid):
                s = score(p12, p22)
                if s > best[0]:
                    best = (s, (float(p12), float(p22)))
        if best[1] is None:
            return None
        c12, c22 = best[1]
        span12 = (hi12 - lo12) / grid
        span22 = (hi22 - lo22) / grid
        lo12, hi12 = max(1e-6, c12 - span12), c12 + span12
        lo22, hi22 = max(1e-6, c22 - span22), c22 + span22

    if best[1] is None:
        return None
    cand = LyapunovCandidate(1.0, best[1][0], best[1][1])
    if not check_common_lyapunov(cand, A_list, tol=tol).passed:
        return None
    return cand


def lyapunov_constants(P, A) -> LyapunovConstants:
    """Extract (a, b, c, lam) from a valid certificate pair.

    a, b bound V between a|z|^2 and b|z|^2; c bounds the decay Vdot <=
    -c|z|^2; lam = c/(2b) is the resulting exponential rate.  Raises if P is
    not positive definite or the residual is not negative definite, naming
    the offending matrix.
    """
    P = _p_matrix(P)
    a, b = sym_eig_2x2(P)
    if a <= 0:
        raise ValueError("P is not positive definite")
    neg_c, _ = sym_eig_2x2(-lmi_residual(A, P))
    if neg_c <= 0:
        raise ValueError("residual A'P + PA is not negative definite")
    return LyapunovConstants(a=a, b=b, c=neg_c, lam=neg_c / (2.0 * b))


@dataclass(frozen=True)
class DwellBounds:
    """Lower bounds on how long the contracting mode must stay active.

    ``tau_simplified`` = log|z(t_n)| / lam keeps the exponential envelope
    below its previous peak; ``tau_tight`` keeps V at the *next* switching
    instant strictly below its current value even after accounting for the
    certificate's a/b gap.  Enforcement uses the larger of the two, floored
    at zero (states already inside the unit ball need no hold).
    """

    tau_simplified: float
    tau_tight: float

    @property
    def enforced(self) -> float:
        return max(0.0, self.tau_simplified, self.tau_tight)


def _norm(z) -> float:
    return float(np.linalg.norm(np.atleast_1d(np.asarray(z, dtype=float))))


def min_dwell_time(z_at_switch, z_next_estimate, constants: LyapunovConstants) -> DwellBounds:
    """Dwell-time lower bounds from the state at (and expected after) a switch."""
    zn = _norm(z_at_switch)
    zn1 = _norm(z_next_estimate)
    if zn == 0.0:
        return DwellBounds(-math.inf, -math.inf)
    lam = constants.lam
    tau_simplified = math.log(zn) / lam
    tau_tight = math.log(
        constants.a * zn ** 2 / (constants.b * (zn1 ** 2 + zn ** 2))
    ) / (2.0 * lam)
    return DwellBounds(tau_simplified, tau_tight)


@dataclass(frozen=True)
class TransferFunction:
    """Rational transfer function; coefficients in descending powers of s."""

    num: tuple[float, ...]
    den: tuple[float, ...]

    def __post_init__(self):
        num = _strip(self.num)
        den = _strip(self.den)
        if not den:
            raise ValueError("denominator must not be identically zero")
        if num and len(num) > len(den):
            raise ValueError("transfer function must be proper (deg num <= deg den)")

    def __call__(self, s: complex) -> complex:
        return np.polyval(self.num, s) / np.polyval(self.den, s)

    def is_stable(self) -> bool:
        """Hurwitz denominator: every pole strictly in the left half plane."""
        den = _strip(self.den)
        if len(den) == 1:
            return True
        return bool(np.all(np.roots(den).real < 0))


def _strip(coeffs) -> tuple[float, ...]:
    coeffs = tuple(float(c) for c in coeffs)
    i = 0
    while i < len(coeffs) and coeffs[i] == 0.0:
        i += 1
    return coeffs[i:]


def spacing_error_tf(mode: str, gains) -> TransferFunction:
    """Hop-to-hop spacing-error transfer function H(s) = eps_i / eps_{i-1}.

    Derived from eps_ddot_i = u_i - u_{i-1} under the respective control law
    (valid for i >= 3, where both vehicles of the hop run the controller).
    For radar-only gains (alpha, beta):

        H(s) = -(beta s + alpha) / (s^2 - beta s - alpha)

    so stable gains give DC gain +1: a slow positive offset on the
    predecessor's error reappears with the same sign one hop back.  The
    cooperative law admits such a single-hop relation only when the leader
    gains are zero (a pure predecessor-following chain); with leader coupling
    active the error dynamics involve every upstream hop and the request is
    rejected.
    """
    if mode == ACC:
        if not isinstance(gains, AccGains):
            raise TypeError("ACC mode requires AccGains")
        a, b = gains.alpha, gains.beta
        return TransferFunction(
            num=(-b + 0.0, -a + 0.0),
            den=(1.0, -b + 0.0, -a + 0.0),
        )
    if mode == CACC:
        if not isinstance(gains, CaccGains):
            raise TypeError("CACC mode requires CaccGains")
        if gains.alpha_lead != 0.0 or gains.beta_lead != 0.0 or gains.gamma_lead != 0.0:
            raise ValueError(
                "no single-hop spacing-error transfer function exists with leader "
                "coupling active; set the leader gains to zero for a chain analysis"
            )
        a, b, g = gains.alpha_pred, gains.beta_pred, gains.gamma_pred
        return TransferFunction(
            num=(g + 0.0, -b + 0.0, -a + 0.0),
            den=(1.0, -b + 0.0, -a + 0.0),
        )
    raise ValueError(f"unknown control mode {mode!r}")


@dataclass(frozen=True)
class HinfNorm:
    """Peak frequency-response magnitude and the frequency attaining it."""

    value: float
    omega: float


def hinf_norm(H: TransferFunction, omega_max: float = 1e3,
              grid_points: int = 4096) -> HinfNorm:
    """sup over omega in [0, omega_max] of |H(j omega)|.

    Coarse pass on a log-spaced grid (plus omega = 0), then golden-section
    refinement of the bracket around the grid argmax.  Requires a stable H;
    the norm is undefined otherwise.
    """
    if not H.is_stable():
        raise ValueError("H-infinity norm undefined: denominator is not Hurwitz")
    if _strip(H.num) == ():
        return HinfNorm(0.0, 0.0)

    omegas = np.concatenate(([0.0], np.logspace(-4, math.log10(omega_max), grid_points)))
    mags = np.abs([H(1j * w) for w in omegas])
    k = int(np.argmax(mags))
    best_w, best_m = float(omegas[k]), float(mags[k])

    lo = float(omegas[k - 1]) if k > 0 else 0.0
    hi = float(omegas[k + 1]) if k + 1 < omegas.size else float(omega_max)
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - phi * (hi - lo)
    x2 = lo + phi * (hi - lo)
    f1, f2 = abs(H(1j * x1)), abs(H(1j * x2))
    for _ in range(200):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + phi * (hi - lo)
            f2 = abs(H(1j * x2))
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - phi * (hi - lo)
            f1 = abs(H(1j * x1))
        if hi - lo < 1e-13 * max(1.0, hi):
            break
    for w, m in ((x1, f1), (x2, f2)):
        if m > best_m:
            best_w, best_m = float(w), float(m)
    return HinfNorm(best_m, best_w)


def impulse_response_nonneg(H: TransferFunction, horizon: float = 80.0,
                            step: float = 1e-3, tol: float = 1e-9) -> bool:
    """Whether the impulse response stays above -tol on (0, horizon].

    The transfer function is realized in controllable canonical form and the
    response h(t) = C exp(At) B is integrated with a fixed-step fourth-order
    update.  For a biproper H the impulsive direct-feedthrough term at t = 0
    is outside the sampled window and is ignored.
    """
    num = list(_strip(H.num))
    den = list(_strip(H.den))
    if not num:
        return True
    if len(den) == 1:
        return num[0] / den[0] >= -tol

    lead = den[0]
    den = [c / lead for c in den]
    num = [c / lead for c in num]
    n = len(den) - 1
    if len(num) == len(den):
        d = num[0]
        num = [num[i + 1] - d * den[i + 1] for i in range(n)]
    num = [0.0] * (n - len(num)) + num

    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = [-den[n - i] for i in range(n)]
    B = np.zeros(n)
    B[-1] = 1.0
    C = np.array(num[::-1])

    hA = step * A
    M = np.eye(n) + hA + hA @ hA / 2.0 + hA @ hA @ hA / 6.0 + hA @ hA @ hA @ hA / 24.0
    z = B.copy()
    steps = int(math.ceil(horizon / step))
    for _ in range(steps):
        z = M @ z
        if C @ z < -tol:
            return False
        if not np.all(np.isfinite(z)):
            raise FloatingPointError("impulse-response integration diverged")
    return True


def fit_envelope(times, norms, rate: float) -> GuesEnvelope:
    """Fit the smallest gain c with |z(t)| <= c |z(0)| exp(-rate t) on samples."""
    times = np.asarray(times, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if norms[0] <= 0:
        raise ValueError("initial state norm must be positive to fit an envelope")
    gain = float(np.max(norms * np.exp(rate * times)) / norms[0])
    return GuesEnvelope(gain=gain, rate=rate)
