"""Piecewise smooth drifts with two jump points.

A drift is given by three pieces on ``(-inf, z1)``, ``(z1, z2)`` and
``(z2, inf)``.  Each piece carries its value, its derivative and optionally a
closed-form primitive.  :func:`make_drift` validates the pieces and
precomputes every drift-dependent constant used by the samplers.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

Func = Callable[[np.ndarray], np.ndarray]

SCAN_POINTS = 10_000
SCAN_MARGIN = 10.0
QUAD_TOL = 1e-10


@dataclass(frozen=True)
class Piece:
    """One smooth piece of a drift.

    Parameters
    ----------
    value, derivative : callable
        Vectorised maps ``x -> b(x)`` and ``x -> b'(x)``.
    primitive : callable, optional
        Any antiderivative of ``value``.  When omitted, quadrature is used.
    """

    value: Func
    derivative: Func
    primitive: Optional[Func] = None


@dataclass(frozen=True)
class DriftSpec:
    """A validated drift with jumps at ``z1 < z2``.

    Attributes
    ----------
    theta1, theta2 : float
        Half jump heights ``(b(z+) - b(z-)) / 2``.
    b_at_z1, b_at_z2 : float
        Midpoint values used at the jump points.
    b_sup, phi_sup : float
        Sup norms of ``b`` and of ``phi_plus``.
    phi_inf : float
        Infimum of ``b**2 + b'`` used to centre ``phi_plus``.
    """

    pieces: tuple
    z1: float
    z2: float
    theta1: float
    theta2: float
    b_at_z1: float
    b_at_z2: float
    b_sup: float
    phi_sup: float
    phi_inf: float
    name: str = "custom"
    _B_knots: tuple = field(default=(0.0, 0.0, 0.0), repr=False)

    @property
    def z(self) -> float:
        """Barrier gap after shifting ``z1`` to the origin."""
        return self.z2 - self.z1

    def b(self, x):
        return eval_b(self, x)

    def B(self, x):
        return eval_B(self, x)

    def phi_plus(self, x):
        return eval_phi_plus(self, x)


def _piece_index(spec_z1: float, spec_z2: float, x: np.ndarray) -> np.ndarray:
    return np.where(x < spec_z1, 0, np.where(x < spec_z2, 1, 2))


def _raw(pieces, z1, z2, x, which):
    """Evaluate ``value`` or ``derivative`` with midpoint handling at jumps."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape)
    idx = _piece_index(z1, z2, x)
    for i, p in enumerate(pieces):
        m = idx == i
        if np.any(m):
            out[m] = np.broadcast_to(getattr(p, which)(x[m]), x[m].shape)
    for zi, (lo, hi) in ((z1, (pieces[0], pieces[1])), (z2, (pieces[1], pieces[2]))):
        m = x == zi
        if np.any(m):
            out[m] = 0.5 * (float(getattr(lo, which)(np.float64(zi))) + float(getattr(hi, which)(np.float64(zi))))
    return out


def _scan_grid(z1: float, z2: float) -> np.ndarray:
    grid = np.linspace(z1 - SCAN_MARGIN, z2 + SCAN_MARGIN, SCAN_POINTS)
    far = np.array([z1 - 1e3, z1 - 1e2, z2 + 1e2, z2 + 1e3])
    return np.concatenate([grid, far])


def _refine(fun, grid, vals, lo, hi, maximize):
    """Local bounded search around the best grid point."""
    k = int(np.argmax(vals) if maximize else np.argmin(vals))
    best = vals[k]
    a = max(grid[max(k - 1, 0)], lo)
    b = min(grid[min(k + 1, len(grid) - 1)], hi)
    if b > a:
        sgn = -1.0 if maximize else 1.0
        res = minimize_scalar(lambda s: sgn * float(fun(np.float64(s))), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-12})
        cand = float(fun(np.float64(res.x)))
        best = max(best, cand) if maximize else min(best, cand)
    return best


def make_drift(pieces: Sequence[Piece], z1: float, z2: float, name: str = "custom") -> DriftSpec:
    """Validate three pieces and precompute the drift constants.

    Sup norms and the infimum of ``b**2 + b'`` are obtained from a dense scan
    of ``[z1 - 10, z2 + 10]`` plus a few far points, refined by a bounded
    local search on each piece.

    Raises
    ------
    ValueError
        If ``z1 >= z2``, the number of pieces is not three, or a piece is not
        finite on the scan grid.
    """
    pieces = tuple(pieces)
    if len(pieces) != 3:
        raise ValueError("a drift needs exactly three pieces")
    z1, z2 = float(z1), float(z2)
    if not z1 < z2:
        raise ValueError(f"need z1 < z2, got z1={z1}, z2={z2}")
    grid = _scan_grid(z1, z2)
    grid = grid[(grid != z1) & (grid != z2)]
    bv = _raw(pieces, z1, z2, grid, "value")
    dv = _raw(pieces, z1, z2, grid, "derivative")
    if not (np.all(np.isfinite(bv)) and np.all(np.isfinite(dv))):
        raise ValueError("drift piece is not finite on the scan grid")

    def side(p, zi):
        return float(p.value(np.float64(zi)))

    l1, r1 = side(pieces[0], z1), side(pieces[1], z1)
    l2, r2 = side(pieces[1], z2), side(pieces[2], z2)
    theta1, theta2 = 0.5 * (r1 - l1), 0.5 * (r2 - l2)
    bz1, bz2 = 0.5 * (r1 + l1), 0.5 * (r2 + l2)

    bounds = [(-np.inf, z1), (z1, z2), (z2, np.inf)]
    b_sup = 0.0
    g_inf = np.inf
    g_sup = -np.inf
    idx = _piece_index(z1, z2, grid)
    for i, p in enumerate(pieces):
        m = idx == i
        gx = grid[m]
        lo, hi = bounds[i]
        absb = lambda s, p=p: abs(p.value(s))
        gfun = lambda s, p=p: p.value(s) ** 2 + p.derivative(s)
        b_sup = max(b_sup, _refine(absb, gx, np.abs(bv[m]), lo, hi, True))
        gv = bv[m] ** 2 + dv[m]
        g_inf = min(g_inf, _refine(gfun, gx, gv, lo, hi, False))
        g_sup = max(g_sup, _refine(gfun, gx, gv, lo, hi, True))
    b_sup = max(b_sup, abs(l1), abs(r1), abs(l2), abs(r2))
    # b**2 + b' at the jump points with midpoint value and mean derivative
    for zi, lo_p, hi_p, bm in ((z1, pieces[0], pieces[1], bz1), (z2, pieces[1], pieces[2], bz2)):
        dm = 0.5 * (float(lo_p.derivative(np.float64(zi))) + float(hi_p.derivative(np.float64(zi))))
        gz = bm**2 + dm
        g_inf = min(g_inf, gz)
        g_sup = max(g_sup, gz)
        # one-sided limits belong to the closure of the scanned set
        for p in (lo_p, hi_p):
            gl = float(p.value(np.float64(zi))) ** 2 + float(p.derivative(np.float64(zi)))
            g_inf = min(g_inf, gl)
            g_sup = max(g_sup, gl)
    phi_sup = 0.5 * (g_sup - g_inf)

    spec = DriftSpec(pieces=pieces, z1=z1, z2=z2, theta1=theta1, theta2=theta2, b_at_z1=bz1,
                     b_at_z2=bz2, b_sup=float(b_sup), phi_sup=float(max(phi_sup, 0.0)),
                     phi_inf=float(g_inf), name=name)
    return _with_knots(spec)


def _piece_integral(p: Piece, a: float, b: float) -> float:
    if a == b:
        return 0.0
    if p.primitive is not None:
        return float(p.primitive(np.float64(b)) - p.primitive(np.float64(a)))
    val, err = quad(lambda s: float(p.value(np.float64(s))), a, b, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
    if err > 1e3 * QUAD_TOL * max(1.0, abs(val)):
        raise RuntimeError(f"quadrature did not converge on ({a}, {b})")
    return val


def _B_from_z1(spec_pieces, z1, z2, x: float) -> float:
    """Integral of b from z1 to x."""
    p0, p1, p2 = spec_pieces
    if x <= z1:
        return -_piece_integral(p0, x, z1)
    if x <= z2:
        return _piece_integral(p1, z1, x)
    return _piece_integral(p1, z1, z2) + _piece_integral(p2, z2, x)


def _with_knots(spec: DriftSpec) -> DriftSpec:
    mid = _piece_integral(spec.pieces[1], spec.z1, spec.z2)
    offset = _B_from_z1(spec.pieces, spec.z1, spec.z2, 0.0)
    object.__setattr__(spec, "_B_knots", (mid, offset, 0.0))
    return spec


def eval_b(spec: DriftSpec, x):
    """Drift value; the midpoint value is returned exactly at ``z1`` and ``z2``."""
    out = _raw(spec.pieces, spec.z1, spec.z2, x, "value")
    return out[()] if out.ndim == 0 else out


def eval_db(spec: DriftSpec, x):
    """Drift derivative; the mean of one-sided derivatives at the jump points."""
    out = _raw(spec.pieces, spec.z1, spec.z2, x, "derivative")
    return out[()] if out.ndim == 0 else out


def eval_B(spec: DriftSpec, x):
    """Primitive of the drift normalised by ``B(0) = 0``."""
    x = np.asarray(x, dtype=float)
    p0, p1, p2 = spec.pieces
    mid, offset, _ = spec._B_knots
    z1, z2 = spec.z1, spec.z2
    if all(p.primitive is not None for p in spec.pieces):
        out = np.where(
            x <= z1, p0.primitive(np.minimum(x, z1)) - p0.primitive(z1),
            np.where(x <= z2, p1.primitive(np.clip(x, z1, z2)) - p1.primitive(z1),
                     mid + p2.primitive(np.maximum(x, z2)) - p2.primitive(z2)))
        out = np.asarray(out, dtype=float) - offset
    else:
        flat = np.array([_B_from_z1(spec.pieces, z1, z2, float(v)) for v in x.ravel()])
        out = flat.reshape(x.shape) - offset
    return out[()] if out.ndim == 0 else out


def eval_phi_plus(spec: DriftSpec, x):
    r"""The non-negative function :math:`\phi_b^+ = \tfrac12(b^2 + b' - \inf(b^2+b'))`."""
    b = np.asarray(eval_b(spec, x))
    db = np.asarray(eval_db(spec, x))
    out = np.maximum(0.5 * (b**2 + db - spec.phi_inf), 0.0)
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# built-in drifts and the text configuration loader
# ---------------------------------------------------------------------------

def _const(c: float) -> Piece:
    return Piece(lambda x: np.full(np.shape(x), c, dtype=float),
                 lambda x: np.zeros(np.shape(x)),
                 lambda x: c * np.asarray(x, dtype=float))


def drift_b1() -> DriftSpec:
    """Indicator drift: 1 on ``(0, 1)`` and 0 elsewhere."""
    return make_drift([_const(0.0), _const(1.0), _const(0.0)], 0.0, 1.0, name="b1")


def drift_b2(z: float = 1.0) -> DriftSpec:
    """Trigonometric drift ``-2 cos x``, ``sin x``, ``cos(x - z) + sin z``."""
    sz = np.sin(z)
    return make_drift([
        Piece(lambda x: -2.0 * np.cos(x), lambda x: 2.0 * np.sin(x), lambda x: -2.0 * np.sin(x)),
        Piece(np.sin, np.cos, lambda x: -np.cos(x)),
        Piece(lambda x: np.cos(x - z) + sz, lambda x: -np.sin(x - z), lambda x: np.sin(x - z) + sz * x),
    ], 0.0, z, name="b2")


def drift_constant(mu: float, z1: float = 0.0, z2: float = 1.0) -> DriftSpec:
    """Constant drift with artificial (zero-height) jump points."""
    return make_drift([_const(mu)] * 3, z1, z2, name="constant")


def negate(spec: DriftSpec) -> DriftSpec:
    """Drift ``-b`` built from the same pieces."""
    neg = []
    for p in spec.pieces:
        prim = None if p.primitive is None else (lambda x, f=p.primitive: -f(x))
        neg.append(Piece(lambda x, f=p.value: -f(x), lambda x, f=p.derivative: -f(x), prim))
    return make_drift(neg, spec.z1, spec.z2, name=f"-{spec.name}")


def _parse_piece(text: str, outer: bool) -> Piece:
    kind, *nums = text.replace(",", " ").split()
    c = [float(v) for v in nums]
    if not c:
        raise ValueError(f"piece '{text}' has no coefficients")
    if kind == "poly":
        if outer and any(v != 0.0 for v in c[1:]):
            raise ValueError("outer pieces must be bounded: only constant polynomials are allowed")
        coef = np.array(c)
        return Piece(lambda x: np.polynomial.polynomial.polyval(x, coef),
                     lambda x: np.polynomial.polynomial.polyval(x, np.polynomial.polynomial.polyder(coef)),
                     lambda x: np.polynomial.polynomial.polyval(x, np.polynomial.polynomial.polyint(coef)))
    if kind == "trig":
        c0, rest = c[0], c[1:]
        if len(rest) % 2:
            raise ValueError("trig pieces take c0 followed by (cos, sin) coefficient pairs")
        pairs = [(k + 1, rest[2 * k], rest[2 * k + 1]) for k in range(len(rest) // 2)]

        def val(x):
            x = np.asarray(x, dtype=float)
            return c0 + sum(a * np.cos(k * x) + s * np.sin(k * x) for k, a, s in pairs)

        def der(x):
            x = np.asarray(x, dtype=float)
            return 0.0 * x + sum(-k * a * np.sin(k * x) + k * s * np.cos(k * x) for k, a, s in pairs)

        def prim(x):
            x = np.asarray(x, dtype=float)
            return c0 * x + sum(a * np.sin(k * x) / k - s * np.cos(k * x) / k for k, a, s in pairs)

        return Piece(val, der, prim)
    raise ValueError(f"unknown piece kind '{kind}' (expected 'poly' or 'trig')")


def load_drift(path_or_text: str, is_text: bool = False) -> DriftSpec:
    """Load a drift from an INI-style configuration.

    The file has one ``[drift]`` section.  ``kind`` is ``b1``, ``b2``,
    ``constant`` (with ``mu``) or ``piecewise`` (with ``z1``, ``z2`` and
    ``left``, ``middle``, ``right`` pieces written as ``poly c0 c1 ...`` or
    ``trig c0 a1 b1 a2 b2 ...``).  See the README for the full grammar.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if is_text:
        cp.read_string(path_or_text)
    else:
        with open(path_or_text) as fh:
            cp.read_file(fh)
    if "drift" not in cp:
        raise ValueError("configuration needs a [drift] section")
    sec = cp["drift"]
    kind = sec.get("kind", "").strip()
    if kind == "b1":
        return drift_b1()
    if kind == "b2":
        return drift_b2(sec.getfloat("z", 1.0))
    if kind == "constant":
        return drift_constant(sec.getfloat("mu"), sec.getfloat("z1", 0.0), sec.getfloat("z2", 1.0))
    if kind == "piecewise":
        pieces = [_parse_piece(sec[k], outer=(k != "middle")) for k in ("left", "middle", "right")]
        return make_drift(pieces, sec.getfloat("z1"), sec.getfloat("z2"), name=sec.get("name", "custom"))
    raise ValueError(f"unknown drift kind '{kind}'")


BUILTIN = {"b1": drift_b1, "b2": drift_b2}


def builtin_drift(name: str, mu: float = 0.0) -> DriftSpec:
    """Look up a built-in drift by name (``b1``, ``b2`` or ``constant``)."""
    if name == "constant":
        return drift_constant(mu)
    if name not in BUILTIN:
        raise ValueError(f"unknown built-in drift '{name}'")
    return BUILTIN[name]()
