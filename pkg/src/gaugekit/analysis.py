"""Certified sign, bound, root, and extremum computations.

All functions take a caller-supplied modulus of continuity; nothing here
infers continuity from samples.  The same machinery serves two purposes:
a run that completes produces a replayable certificate tiling the domain
with per-cell evidence, and a run that stalls localizes the obstruction —
a root for sign certification, a near-maximum for bound certification.
Stalls are therefore results, not errors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Union

from .errors import CapExceededError, GaugekitError
from .induction import (
    Incompatible,
    InductionPolicy,
    LocalOracle,
    StallDiagnostic,
    StallReason,
    Witness,
    run_induction,
    witness_leaves,
)
from .intervals import Interval


class MalformedModulusError(GaugekitError):
    """The modulus produced a nonpositive or non-finite step."""


class TargetHitExactlyError(GaugekitError):
    """f(x) == y was observed: no sign certificate exists, root is exact."""

    def __init__(self, x: float):
        super().__init__(f"target value attained exactly at x={x!r}")
        self.x = x


class BoundViolatedError(GaugekitError):
    """f(x) >= M was observed while certifying f < M."""

    def __init__(self, x: float, value: float):
        super().__init__(f"bound violated: f({x!r}) = {value!r}")
        self.x = x
        self.value = value


class NoSignChangeError(GaugekitError):
    """Root finding requires f - y to change sign across the domain."""


# --- Moduli of continuity ---------------------------------------------------


class ModulusOfContinuity:
    """Computable map epsilon -> delta quantifying continuity.

    ``step(eps)`` is the largest radius within which f is guaranteed to
    vary by at most eps; it must be positive for positive eps and
    nondecreasing.  ``span_bound(width)`` bounds how much f can vary
    across any two points at distance <= width.
    """

    def step(self, eps: float) -> float:
        raise NotImplementedError

    def span_bound(self, width: float) -> float:
        raise NotImplementedError

    def checked_step(self, eps: float) -> float:
        delta = self.step(eps)
        if not (delta > 0.0 and math.isfinite(delta)):
            raise MalformedModulusError(f"step({eps!r}) = {delta!r} is not a positive real")
        return delta


@dataclass(frozen=True)
class Lipschitz(ModulusOfContinuity):
    """|f(x) - f(y)| <= constant * |x - y|."""

    constant: float

    def __post_init__(self):
        if not self.constant > 0.0:
            raise ValueError(f"Lipschitz constant must be positive, got {self.constant!r}")

    def step(self, eps: float) -> float:
        return eps / self.constant

    def span_bound(self, width: float) -> float:
        return self.constant * width


@dataclass(frozen=True)
class Hoelder(ModulusOfContinuity):
    """|f(x) - f(y)| <= coefficient * |x - y| ** exponent, exponent in (0, 1]."""

    coefficient: float
    exponent: float

    def __post_init__(self):
        if not self.coefficient > 0.0:
            raise ValueError(f"Hoelder coefficient must be positive, got {self.coefficient!r}")
        if not 0.0 < self.exponent <= 1.0:
            raise ValueError(f"Hoelder exponent must lie in (0, 1], got {self.exponent!r}")

    def step(self, eps: float) -> float:
        return (eps / self.coefficient) ** (1.0 / self.exponent)

    def span_bound(self, width: float) -> float:
        return self.coefficient * width ** self.exponent


@dataclass(frozen=True)
class CustomModulus(ModulusOfContinuity):
    """Caller-supplied omega: eps -> delta, trusted as given (positive,
    nondecreasing)."""

    omega: Callable[[float], float]

    def step(self, eps: float) -> float:
        return self.omega(eps)

    def span_bound(self, width: float) -> float:
        # smallest power-of-two scaling of width whose step covers width;
        # sound for any nondecreasing omega, within 2x of tight
        eps = width if width > 0.0 else 1.0
        for _ in range(200):
            if self.checked_step(eps) >= width:
                return eps
            eps *= 2.0
        raise MalformedModulusError("omega never reaches the domain width")


# --- Certificates -----------------------------------------------------------


class Side(Enum):
    BELOW = "below"
    ABOVE = "above"


@dataclass(frozen=True, slots=True)
class CertificatePiece:
    """One tile: at ``sample`` the function was ``value``; the claimed
    inequality holds on all of ``cell`` because cell fits inside
    [sample - radius, sample + radius] and radius <= step(half-gap)."""

    cell: Interval
    sample: float
    value: float
    radius: float


@dataclass(frozen=True)
class SignCertificate:
    """Evidence that f stays strictly on one side of ``target`` on a tiling."""

    target: float
    side: Side
    pieces: tuple[CertificatePiece, ...]

    @property
    def domain(self) -> Interval:
        return Interval(self.pieces[0].cell.lo, self.pieces[-1].cell.hi)


@dataclass(frozen=True)
class BoundCertificate:
    """Evidence that f < ``bound`` on a tiling."""

    bound: float
    pieces: tuple[CertificatePiece, ...]

    @property
    def domain(self) -> Interval:
        return Interval(self.pieces[0].cell.lo, self.pieces[-1].cell.hi)


@dataclass(frozen=True)
class StallAtRoot:
    """Sign certification stalled: f approaches ``point``'s value of y there."""

    point: float
    diagnostic: StallDiagnostic


@dataclass(frozen=True)
class StallNearMax:
    """Bound certification stalled: samples approach the bound near ``point``."""

    point: float
    diagnostic: StallDiagnostic


@dataclass(frozen=True)
class RootResult:
    c: float
    residual_bound: float


@dataclass(frozen=True)
class SupEstimate:
    """Bracket sup in [sup_lo, sup_hi]; sup_lo is an attained sample value
    and ``argmax_candidate`` is the point attaining it."""

    sup_lo: float
    sup_hi: float
    argmax_candidate: float


Fn = Callable[[float], float]

_GRID_INTERIOR = 64


def _sample_grid(dom: Interval) -> list[float]:
    n = _GRID_INTERIOR + 1
    pts = [dom.lo + k * (dom.hi - dom.lo) / n for k in range(n)]
    pts.append(dom.hi)
    return pts


def _raise_if_cap(diag: StallDiagnostic):
    if diag.reason is StallReason.CAP_EXCEEDED:
        raise CapExceededError(
            f"step budget exhausted at frontier {diag.frontier!r}")


# --- Sign certification / IVT -----------------------------------------------


def no_root_certificate(f: Fn, y: float, dom: Interval, mod: ModulusOfContinuity,
                        policy: InductionPolicy | None = None, *,
                        trace: list | None = None,
                        ) -> Union[SignCertificate, StallAtRoot]:
    """Certify that f stays strictly on one side of y, or localize a root.

    At each sample s the local gap |f(s) - y| licenses a cell of radius
    step(gap / 2); the half-gap choice means f cannot cross y within the
    cell, so adjacent cells always agree in side when the modulus is
    valid.  A stall means the gap shrank to nothing: the frontier is a
    point where f(x) is provably within 2 * (inverse step)(progress_eps)
    of y.

    Raises:
        TargetHitExactlyError: if f(s) == y is evaluated.
        MalformedModulusError, CapExceededError
    """
    policy = policy or InductionPolicy()
    b = dom.hi

    def right(s: float):
        fs = f(s)
        if fs == y:
            raise TargetHitExactlyError(s)
        side = Side.BELOW if fs < y else Side.ABOVE
        delta = mod.checked_step(abs(fs - y) / 2.0)
        t = min(b, s + delta)
        if t <= s:
            return None
        piece = CertificatePiece(Interval(s, t), s, fs, delta)
        return t, Witness(Interval(s, t), (side, piece))

    def combine(w1: Witness, w2: Witness):
        side1, side2 = w1.payload[0], w2.payload[0]
        if side1 is not side2:
            return Incompatible(f"side flips across {w2.interval.lo!r}")
        return Witness(Interval(w1.interval.lo, w2.interval.hi), (side1, None), (w1, w2))

    result = run_induction(LocalOracle(right, combine), dom, policy, trace=trace)
    if isinstance(result, StallDiagnostic):
        _raise_if_cap(result)
        return StallAtRoot(result.frontier, result)
    pieces = tuple(leaf.payload[1] for leaf in witness_leaves(result))
    return SignCertificate(y, result.payload[0], pieces)


def find_root(f: Fn, y: float, dom: Interval, mod: ModulusOfContinuity,
              tol: float, *, policy: InductionPolicy | None = None,
              trace: list | None = None) -> RootResult:
    """Locate c with |f(c) - y| <= tol, given a sign change across dom.

    Runs sign certification with progress_eps = step(tol / 2): when the
    creep stalls at c, the refused step there was below step(tol / 2), so
    the local gap satisfies |f(c) - y| < tol.  The returned residual bound
    is the recomputed |f(c) - y| itself.

    Raises:
        NoSignChangeError, MalformedModulusError, CapExceededError
    """
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    fa, fb = f(dom.lo), f(dom.hi)
    if fa == y:
        return RootResult(dom.lo, 0.0)
    if fb == y:
        return RootResult(dom.hi, 0.0)
    if (fa > y) == (fb > y):
        raise NoSignChangeError(
            f"f - y does not change sign: f({dom.lo!r}) = {fa!r}, f({dom.hi!r}) = {fb!r}")

    eps_step = mod.checked_step(tol / 2.0)
    base = policy or InductionPolicy()
    run_policy = replace(base, progress_eps=eps_step)
    try:
        result = no_root_certificate(f, y, dom, mod, run_policy, trace=trace)
    except TargetHitExactlyError as hit:
        return RootResult(hit.x, 0.0)
    if isinstance(result, SignCertificate):
        raise MalformedModulusError(
            "a one-sided certificate covered a sign change; the supplied modulus "
            "cannot be valid for f")
    c = result.point
    return RootResult(c, abs(f(c) - y))


# --- Bound certification / EVT ----------------------------------------------


def bound_certificate(f: Fn, bound: float, dom: Interval, mod: ModulusOfContinuity,
                      policy: InductionPolicy | None = None, *,
                      trace: list | None = None,
                      ) -> Union[BoundCertificate, StallNearMax]:
    """Certify f < bound on dom, or report where f approaches the bound.

    A coarse grid is scanned first: any sample with f >= bound raises
    BoundViolatedError immediately (reporting the worst grid point).
    Otherwise the creep runs with per-cell radius step((bound - f(s)) / 2);
    a stall means samples climbed to within 2 * (inverse step)(progress_eps)
    of the bound near the frontier.

    Raises:
        BoundViolatedError: if f(s) >= bound is observed.
        MalformedModulusError, CapExceededError
    """
    policy = policy or InductionPolicy()
    b = dom.hi

    worst_x, worst_v = dom.lo, -math.inf
    for x in _sample_grid(dom):
        v = f(x)
        if v > worst_v:
            worst_x, worst_v = x, v
    if worst_v >= bound:
        raise BoundViolatedError(worst_x, worst_v)

    def right(s: float):
        fs = f(s)
        if fs >= bound:
            raise BoundViolatedError(s, fs)
        delta = mod.checked_step((bound - fs) / 2.0)
        t = min(b, s + delta)
        if t <= s:
            return None
        piece = CertificatePiece(Interval(s, t), s, fs, delta)
        return t, Witness(Interval(s, t), piece)

    def combine(w1: Witness, w2: Witness):
        return Witness(Interval(w1.interval.lo, w2.interval.hi), None, (w1, w2))

    result = run_induction(LocalOracle(right, combine), dom, policy, trace=trace)
    if isinstance(result, StallDiagnostic):
        _raise_if_cap(result)
        return StallNearMax(result.frontier, result)
    pieces = tuple(leaf.payload for leaf in witness_leaves(result))
    return BoundCertificate(bound, pieces)


def approx_sup(f: Fn, dom: Interval, mod: ModulusOfContinuity, tol: float, *,
               policy: InductionPolicy | None = None,
               on_certificate: Callable[[BoundCertificate], None] | None = None,
               ) -> SupEstimate:
    """Bracket sup f over dom to within tol by binary search on the bound.

    The lower end is always an attained sample value (initial grid, then
    violation/stall samples and certified pieces); the upper end starts at
    sample_max + span_bound(width) and only ever shrinks via successful
    certificates, so sup stays inside [sup_lo, sup_hi] throughout.  Probes
    run with progress_eps = step(tol / 8), which makes every stall tighten
    the bracket by at least a quarter of the probe gap.

    Raises:
        CapExceededError: if a probe or the search itself runs over budget.
    """
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol!r}")

    best_x, best_v = dom.lo, -math.inf
    for x in _sample_grid(dom):
        v = f(x)
        if v > best_v:
            best_x, best_v = x, v
    sup_lo = best_v
    sup_hi = sup_lo + mod.span_bound(dom.width)

    base = policy or InductionPolicy()
    probe_policy = replace(base, progress_eps=mod.checked_step(tol / 8.0))

    probes = 0
    while sup_hi - sup_lo > tol:
        probes += 1
        if probes > 500:
            raise CapExceededError("bound search did not converge in 500 probes")
        m = 0.5 * (sup_lo + sup_hi)
        if not sup_lo < m < sup_hi:
            break  # binary64 cannot split the bracket further
        try:
            result = bound_certificate(f, m, dom, mod, probe_policy)
        except BoundViolatedError as hit:
            if hit.value > best_v:
                best_x, best_v = hit.x, hit.value
            sup_lo = max(sup_lo, hit.value)
            continue
        if isinstance(result, BoundCertificate):
            if on_certificate is not None:
                on_certificate(result)
            sup_hi = m
            for piece in result.pieces:
                if piece.value > best_v:
                    best_x, best_v = piece.sample, piece.value
            sup_lo = max(sup_lo, best_v)
        else:
            c = result.point
            fc = f(c)
            if fc > best_v:
                best_x, best_v = c, fc
            sup_lo = max(sup_lo, fc)
    return SupEstimate(sup_lo, sup_hi, best_x)


def approx_inf(f: Fn, dom: Interval, mod: ModulusOfContinuity, tol: float, *,
               policy: InductionPolicy | None = None) -> SupEstimate:
    """Bracket inf f: approx_sup applied to -f with the results negated.

    In the returned estimate the bracket [sup_lo, sup_hi] contains the
    infimum, the *upper* end is the attained sample value, and
    ``argmax_candidate`` is the near-minimizer.
    """
    neg = approx_sup(lambda x: -f(x), dom, mod, tol, policy=policy)
    return SupEstimate(-neg.sup_hi, -neg.sup_lo, neg.argmax_candidate)


# --- Independent certificate replay ------------------------------------------


def _replay_pieces(pieces: tuple[CertificatePiece, ...], f: Fn,
                   mod: ModulusOfContinuity,
                   gap_of: Callable[[float], float]) -> bool:
    if not pieces:
        return False
    prev_hi = None
    for p in pieces:
        if not p.cell.lo < p.cell.hi:
            return False
        if prev_hi is not None and p.cell.lo != prev_hi:
            return False
        prev_hi = p.cell.hi
        if not (p.sample - p.radius <= p.cell.lo and p.cell.hi <= p.sample + p.radius):
            return False
        if f(p.sample) != p.value:
            return False
        gap = gap_of(p.value)
        if not gap > 0.0:
            return False
        try:
            if not p.radius <= mod.checked_step(gap / 2.0):
                return False
        except MalformedModulusError:
            return False
    return True


def verify_sign_certificate(cert: SignCertificate, f: Fn,
                            mod: ModulusOfContinuity) -> bool:
    """Replay a sign certificate from scratch; True iff every check holds."""
    if cert.side is Side.BELOW:
        gap_of = lambda v: cert.target - v
    else:
        gap_of = lambda v: v - cert.target
    return _replay_pieces(cert.pieces, f, mod, gap_of)


def verify_bound_certificate(cert: BoundCertificate, f: Fn,
                             mod: ModulusOfContinuity) -> bool:
    """Replay a bound certificate from scratch; True iff every check holds."""
    return _replay_pieces(cert.pieces, f, mod, lambda v: cert.bound - v)


# --- JSON wire format ---------------------------------------------------------
#
# {"kind": "sign"|"bound", "target": y_or_M, "side": "below"|"above",
#  "pieces": [{"lo": .., "hi": .., "s": .., "fs": .., "delta": ..}, ...]}


def certificate_to_dict(cert: Union[SignCertificate, BoundCertificate]) -> dict:
    if isinstance(cert, SignCertificate):
        kind, target, side = "sign", cert.target, cert.side.value
    else:
        kind, target, side = "bound", cert.bound, Side.BELOW.value
    return {
        "kind": kind,
        "target": target,
        "side": side,
        "pieces": [
            {"lo": p.cell.lo, "hi": p.cell.hi, "s": p.sample, "fs": p.value, "delta": p.radius}
            for p in cert.pieces
        ],
    }


def certificate_to_json(cert: Union[SignCertificate, BoundCertificate], *,
                        indent: int | None = 2) -> str:
    return json.dumps(certificate_to_dict(cert), indent=indent)


def _piece_number(obj, key: str) -> float:
    try:
        v = obj[key]
    except (KeyError, TypeError):
        raise ValueError(f"certificate JSON missing field {key!r}") from None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"certificate JSON field {key!r} is not a number")
    return float(v)


def certificate_from_dict(data: dict) -> Union[SignCertificate, BoundCertificate]:
    if not isinstance(data, dict):
        raise ValueError("certificate JSON must be an object")
    kind = data.get("kind")
    if kind not in ("sign", "bound"):
        raise ValueError(f"certificate kind must be 'sign' or 'bound', got {kind!r}")
    target = _piece_number(data, "target")
    raw_pieces = data.get("pieces")
    if not isinstance(raw_pieces, list) or not raw_pieces:
        raise ValueError("certificate JSON needs a nonempty 'pieces' list")
    pieces = tuple(
        CertificatePiece(Interval(_piece_number(p, "lo"), _piece_number(p, "hi")),
                         _piece_number(p, "s"), _piece_number(p, "fs"),
                         _piece_number(p, "delta"))
        for p in raw_pieces
    )
    if kind == "bound":
        return BoundCertificate(target, pieces)
    side_raw = data.get("side")
    try:
        side = Side(side_raw)
    except ValueError:
        raise ValueError(f"certificate side must be 'below' or 'above', got {side_raw!r}") from None
    return SignCertificate(target, side, pieces)


def certificate_from_json(text: str) -> Union[SignCertificate, BoundCertificate]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"malformed certificate JSON: {e}") from None
    return certificate_from_dict(data)
