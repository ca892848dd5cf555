"""Analytic graph surfaces over the unit square and exact operator values.

Each surface is z = F(x, y) with closed-form partials up to second order,
enough to evaluate the surface Laplacian of any sampled field through the
metric of the graph parameterization. A finite-difference twin of the exact
evaluator (same metric terms, outer derivatives by central differences)
serves as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class AnalyticSurface:
    """Closed-form height field with first and second partials."""

    name: str
    f: Callable
    fx: Callable
    fy: Callable
    fxx: Callable
    fxy: Callable
    fyy: Callable

    def check_derivatives(self, n_points=100, seed=0, step=1e-6):
        """Max deviation of the partials against central differences of f.

        Sampled at seeded random points away from the border; the library's
        own surfaces stay below 1e-6.
        """
        rng = np.random.default_rng(seed)
        u = rng.uniform(4 * step, 1 - 4 * step, n_points)
        v = rng.uniform(4 * step, 1 - 4 * step, n_points)

        def ddu(fn):
            return (fn(u + step, v) - fn(u - step, v)) / (2 * step)

        def ddv(fn):
            return (fn(u, v + step) - fn(u, v - step)) / (2 * step)

        devs = [
            np.abs(self.fx(u, v) - ddu(self.f)),
            np.abs(self.fy(u, v) - ddv(self.f)),
            np.abs(self.fxx(u, v) - ddu(self.fx)),
            np.abs(self.fxy(u, v) - ddv(self.fx)),
            np.abs(self.fyy(u, v) - ddv(self.fy)),
        ]
        return float(np.max(devs))


def _zeros(u, v):
    return np.zeros(np.broadcast(u, v).shape)


def _f1():
    def f(u, v):
        return np.sqrt(4.0 - (u - 0.5) ** 2 - (v - 0.5) ** 2)

    def fx(u, v):
        return -(u - 0.5) / f(u, v)

    def fy(u, v):
        return -(v - 0.5) / f(u, v)

    def fxx(u, v):
        w = f(u, v)
        return -1.0 / w - (u - 0.5) ** 2 / w ** 3

    def fxy(u, v):
        w = f(u, v)
        return -(u - 0.5) * (v - 0.5) / w ** 3

    def fyy(u, v):
        w = f(u, v)
        return -1.0 / w - (v - 0.5) ** 2 / w ** 3

    return AnalyticSurface("F1", f, fx, fy, fxx, fxy, fyy)


def _f2():
    def t(u, v):
        return np.tanh(9.0 * u - 9.0 * v)

    def sech2(u, v):
        return 1.0 - t(u, v) ** 2

    return AnalyticSurface(
        "F2",
        f=t,
        fx=lambda u, v: 9.0 * sech2(u, v),
        fy=lambda u, v: -9.0 * sech2(u, v),
        fxx=lambda u, v: -162.0 * t(u, v) * sech2(u, v),
        fxy=lambda u, v: 162.0 * t(u, v) * sech2(u, v),
        fyy=lambda u, v: -162.0 * t(u, v) * sech2(u, v),
    )


def _f3():
    def num(v):
        return 1.25 + np.cos(5.4 * v)

    def den(u):
        return 6.0 + 6.0 * (3.0 * u - 1.0) ** 2

    def dden(u):
        return 36.0 * (3.0 * u - 1.0)

    return AnalyticSurface(
        "F3",
        f=lambda u, v: num(v) / den(u),
        fx=lambda u, v: -num(v) * dden(u) / den(u) ** 2,
        fy=lambda u, v: -5.4 * np.sin(5.4 * v) / den(u),
        fxx=lambda u, v: -num(v) * (108.0 * den(u) - 2.0 * dden(u) ** 2) / den(u) ** 3,
        fxy=lambda u, v: 5.4 * np.sin(5.4 * v) * dden(u) / den(u) ** 2,
        fyy=lambda u, v: -29.16 * np.cos(5.4 * v) / den(u),
    )


def _f4():
    k = 81.0 / 16.0

    def f(u, v):
        return np.exp(-k * ((u - 0.5) ** 2 + (v - 0.5) ** 2))

    return AnalyticSurface(
        "F4",
        f=f,
        fx=lambda u, v: -2.0 * k * (u - 0.5) * f(u, v),
        fy=lambda u, v: -2.0 * k * (v - 0.5) * f(u, v),
        fxx=lambda u, v: (-2.0 * k + 4.0 * k * k * (u - 0.5) ** 2) * f(u, v),
        fxy=lambda u, v: 4.0 * k * k * (u - 0.5) * (v - 0.5) * f(u, v),
        fyy=lambda u, v: (-2.0 * k + 4.0 * k * k * (v - 0.5) ** 2) * f(u, v),
    )


SURFACES = {
    "F1": _f1(),
    "F2": _f2(),
    "F3": _f3(),
    "F4": _f4(),
    "flat": AnalyticSurface("flat", _zeros, _zeros, _zeros, _zeros, _zeros, _zeros),
}


def get_surface(name):
    try:
        return SURFACES[name]
    except KeyError:
        raise ValueError(
            "unknown surface %r (expected one of %s)" % (name, ", ".join(SURFACES))
        ) from None


@dataclass(frozen=True)
class TestFunction:
    """What the harness differentiates: coordinate functions or one scalar.

    Scalar mode carries h together with its first and second parameter
    partials so the exact evaluator can be assembled without numerical
    differentiation of h itself.
    """

    mode: str
    h: Optional[Callable] = None
    hu: Optional[Callable] = None
    hv: Optional[Callable] = None
    huu: Optional[Callable] = None
    huv: Optional[Callable] = None
    hvv: Optional[Callable] = None

    @classmethod
    def coordinate(cls):
        return cls(mode="coordinate")

    @classmethod
    def scalar(cls, h, hu, hv, huu, huv, hvv):
        return cls(mode="scalar", h=h, hu=hu, hv=hv, huu=huu, huv=huv, hvv=hvv)


def _one(u, v):
    return np.ones(np.broadcast(u, v).shape)


SCALAR_FIELDS = {
    "sincos": TestFunction.scalar(
        h=lambda u, v: np.sin(u) * np.cos(v),
        hu=lambda u, v: np.cos(u) * np.cos(v),
        hv=lambda u, v: -np.sin(u) * np.sin(v),
        huu=lambda u, v: -np.sin(u) * np.cos(v),
        huv=lambda u, v: -np.cos(u) * np.sin(v),
        hvv=lambda u, v: -np.sin(u) * np.cos(v),
    ),
    "quadratic": TestFunction.scalar(
        h=lambda u, v: u * u + v * v,
        hu=lambda u, v: 2.0 * u,
        hv=lambda u, v: 2.0 * v,
        huu=lambda u, v: 2.0 * _one(u, v),
        huv=_zeros,
        hvv=lambda u, v: 2.0 * _one(u, v),
    ),
}


def get_scalar_field(name):
    try:
        return SCALAR_FIELDS[name]
    except KeyError:
        raise ValueError(
            "unknown scalar field %r (expected one of %s)"
            % (name, ", ".join(SCALAR_FIELDS))
        ) from None


def _component_partials(surface, tf):
    """Per-component partial evaluators (hu, hv, huu, huv, hvv)."""
    if tf.mode == "scalar":
        return [(tf.hu, tf.hv, tf.huu, tf.huv, tf.hvv)]
    if tf.mode != "coordinate":
        raise ValueError("unknown test-function mode %r" % (tf.mode,))
    return [
        (_one, _zeros, _zeros, _zeros, _zeros),
        (_zeros, _one, _zeros, _zeros, _zeros),
        (surface.fx, surface.fy, surface.fxx, surface.fxy, surface.fyy),
    ]


def _check_inside(u, v):
    if np.any((u <= 0.0) | (u >= 1.0) | (v <= 0.0) | (v >= 1.0)):
        raise ValueError("parameter point outside the open unit square")


def exact_lb_graph(surface, tf, u, v):
    """Exact surface Laplacian on the graph z = F(u, v), closed form.

    Scalar mode returns an array shaped like ``u``; coordinate mode stacks
    the three coordinate results along the last axis (the mean-curvature
    vector 2 H n of the graph).
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    _check_inside(u, v)
    p = surface.fx(u, v)
    q = surface.fy(u, v)
    r = surface.fxx(u, v)
    s = surface.fxy(u, v)
    t = surface.fyy(u, v)
    g = 1.0 + p * p + q * q
    w = np.sqrt(g)

    outs = []
    for hu_, hv_, huu_, huv_, hvv_ in _component_partials(surface, tf):
        hu = hu_(u, v)
        hv = hv_(u, v)
        huu = huu_(u, v)
        huv = huv_(u, v)
        hvv = hvv_(u, v)
        a = ((1.0 + q * q) * hu - p * q * hv) / w
        b = (-p * q * hu + (1.0 + p * p) * hv) / w
        a_u = (
            2.0 * q * s * hu
            + (1.0 + q * q) * huu
            - (r * q + p * s) * hv
            - p * q * huv
        ) / w - a * (p * r + q * s) / g
        b_v = (
            -(s * q + p * t) * hu
            - p * q * huv
            + 2.0 * p * s * hv
            + (1.0 + p * p) * hvv
        ) / w - b * (p * s + q * t) / g
        outs.append((a_u + b_v) / w)
    if tf.mode == "scalar":
        return outs[0]
    return np.stack(outs, axis=-1)


def exact_lb_graph_fd(surface, tf, u, v, step=1e-5):
    """Finite-difference twin of exact_lb_graph.

    The in-plane flux terms are assembled from first partials only and their
    outer derivatives are taken by central differences, so this shares no
    second-derivative algebra with the closed form.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    _check_inside(u, v)
    w = np.sqrt(1.0 + surface.fx(u, v) ** 2 + surface.fy(u, v) ** 2)

    outs = []
    for hu_, hv_, _huu, _huv, _hvv in _component_partials(surface, tf):

        def flux_a(uu, vv):
            p = surface.fx(uu, vv)
            q = surface.fy(uu, vv)
            ww = np.sqrt(1.0 + p * p + q * q)
            return ((1.0 + q * q) * hu_(uu, vv) - p * q * hv_(uu, vv)) / ww

        def flux_b(uu, vv):
            p = surface.fx(uu, vv)
            q = surface.fy(uu, vv)
            ww = np.sqrt(1.0 + p * p + q * q)
            return (-p * q * hu_(uu, vv) + (1.0 + p * p) * hv_(uu, vv)) / ww

        a_u = (flux_a(u + step, v) - flux_a(u - step, v)) / (2.0 * step)
        b_v = (flux_b(u, v + step) - flux_b(u, v - step)) / (2.0 * step)
        outs.append((a_u + b_v) / w)
    if tf.mode == "scalar":
        return outs[0]
    return np.stack(outs, axis=-1)
