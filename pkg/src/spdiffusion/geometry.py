"""Domains, compartments and problem descriptions.

A problem is a bounded domain holding ``N`` small compartments of radius
``epsilon * ell_j``.  Each compartment carries a boundary model (a fixed
concentration, a passive receptor pool, or active intracellular kinetics)
and a permeability ``kappa`` (``inf`` means a Dirichlet boundary).

Problems are validated once; downstream solvers accept the resulting
:class:`ValidatedSpec` and never re-check invariants.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Union

import numpy as np

from .errors import ValidationError, Violation

EPS_MAX = 0.5


# ---------------------------------------------------------------- domains


@dataclass(frozen=True)
class Disk2D:
    """Disk of radius ``radius`` centred at the origin."""

    radius: float = 1.0

    dim = 2
    kind = "disk"

    @property
    def measure(self) -> float:
        return math.pi * self.radius**2

    @property
    def length_scale(self) -> float:
        return 2.0 * self.radius

    def boundary_distance(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.radius - np.linalg.norm(x, axis=-1)

    def contains(self, x) -> np.ndarray:
        return self.boundary_distance(x) > 0.0

    def bounding_box(self):
        r = self.radius
        return np.array([-r, -r]), np.array([r, r])


@dataclass(frozen=True)
class Rect2D:
    """Rectangle ``[0, L1] x [0, L2]``."""

    L1: float = 1.0
    L2: float = 1.0

    dim = 2
    kind = "rectangle"

    @property
    def measure(self) -> float:
        return self.L1 * self.L2

    @property
    def length_scale(self) -> float:
        return min(self.L1, self.L2)

    def boundary_distance(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = np.minimum(x[..., 0], self.L1 - x[..., 0])
        return np.minimum(d, np.minimum(x[..., 1], self.L2 - x[..., 1]))

    def contains(self, x) -> np.ndarray:
        return self.boundary_distance(x) > 0.0

    def bounding_box(self):
        return np.array([0.0, 0.0]), np.array([self.L1, self.L2])


@dataclass(frozen=True)
class Sphere3D:
    """Ball of radius ``R0`` centred at the origin."""

    R0: float = 1.0

    dim = 3
    kind = "sphere"

    @property
    def measure(self) -> float:
        return 4.0 * math.pi * self.R0**3 / 3.0

    @property
    def length_scale(self) -> float:
        return 2.0 * self.R0

    def boundary_distance(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.R0 - np.linalg.norm(x, axis=-1)

    def contains(self, x) -> np.ndarray:
        return self.boundary_distance(x) > 0.0

    def bounding_box(self):
        r = self.R0
        return np.full(3, -r), np.full(3, r)


Geometry = Union[Disk2D, Rect2D, Sphere3D]


# --------------------------------------------------------- boundary models


@dataclass(frozen=True)
class ModelI:
    """Fixed concentration ``c0`` on the compartment boundary."""

    c0: float = 0.0

    kind = "I"


@dataclass(frozen=True)
class ModelII:
    """Passive receptor pool with diffusivity, decay and production rates."""

    Dbar: float = 1.0
    gammabar: float = 1.0
    Ibar: float = 0.0

    kind = "II"

    @property
    def beta(self) -> float:
        return math.sqrt(self.gammabar / self.Dbar)


@dataclass(frozen=True)
class ModelIII:
    """Well-mixed intracellular kinetics with ``K`` species.

    Species ``0`` is the one exchanged with the bulk.  ``kinetics`` names an
    entry of :data:`spdiffusion.kinetics.REGISTRY` and ``params`` its keyword
    arguments.
    """

    kinetics: str = "linear"
    K: int = 1
    w0: tuple = (0.0,)
    params: tuple = ()

    kind = "III"

    def kinetics_params(self) -> dict:
        return dict(self.params)


BoundaryModel = Union[ModelI, ModelII, ModelIII]


# ----------------------------------------------------- non-spherical shapes


@dataclass(frozen=True)
class ShapeSpec:
    """Three-dimensional compartment shape used through its capacitance.

    ``kind`` is one of ``sphere``, ``hemisphere``, ``prolate``, ``oblate``.
    ``a`` is the radius (sphere, hemisphere) or the semi-axis along the
    symmetry axis; ``b`` is the other semi-axis.
    """

    kind: str = "sphere"
    a: float = 1.0
    b: float | None = None


@dataclass(frozen=True)
class CompartmentSpec:
    center: tuple
    ell: float = 1.0
    kappa: float = math.inf
    model: BoundaryModel = field(default_factory=ModelI)
    shape: ShapeSpec | None = None

    @property
    def dirichlet(self) -> bool:
        return math.isinf(self.kappa)


@dataclass(frozen=True)
class ProblemSpec:
    """Complete description of a steady or time-dependent problem.

    Parameters
    ----------
    geometry : Disk2D | Rect2D | Sphere3D
    compartments : tuple of CompartmentSpec
    D : float
        Bulk diffusivity.
    gamma0 : float
        Bulk degradation rate (``0`` selects the conservative branch).
    I0 : float
        Spatially uniform bulk production.
    epsilon : float
        Ratio of compartment radius to domain size.
    sep_min : float or None
        Minimum admissible separation; defaults to ``4 * epsilon * max(ell)``.
    """

    geometry: Geometry
    compartments: tuple
    D: float = 1.0
    gamma0: float = 0.0
    I0: float = 0.0
    epsilon: float = 0.05
    sep_min: float | None = None

    @property
    def dim(self) -> int:
        return self.geometry.dim

    @property
    def N(self) -> int:
        return len(self.compartments)

    def centers(self) -> np.ndarray:
        return np.array([c.center for c in self.compartments], dtype=float).reshape(self.N, self.dim)

    def ells(self) -> np.ndarray:
        return np.array([c.ell for c in self.compartments], dtype=float)

    def kappas(self) -> np.ndarray:
        return np.array([c.kappa for c in self.compartments], dtype=float)

    def with_epsilon(self, epsilon: float) -> "ProblemSpec":
        return replace(self, epsilon=epsilon)


@dataclass(frozen=True)
class ValidatedSpec:
    """A :class:`ProblemSpec` that passed validation, annotated with ``nu``."""

    spec: ProblemSpec
    nu: float
    length_scale: float
    warnings: tuple = ()

    def __getattr__(self, name):
        # forward read access to the wrapped problem
        if name.startswith("__") or name == "spec":
            raise AttributeError(name)
        return getattr(self.spec, name)

    @property
    def shift(self) -> float:
        """Uniform background ``I0 / gamma0`` (zero when there is no production)."""
        if self.spec.I0 == 0.0:
            return 0.0
        return self.spec.I0 / self.spec.gamma0


def nu_from_epsilon(epsilon: float) -> float:
    """Logarithmic gauge ``-1 / ln(epsilon)`` for ``epsilon`` in ``(0, 1)``."""
    if not (0.0 < epsilon < 1.0):
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    return -1.0 / math.log(epsilon)


def check(spec: ProblemSpec) -> list:
    """Return the list of violated invariants (empty when the spec is valid)."""
    out = []
    geom = spec.geometry
    if isinstance(geom, Disk2D) and not geom.radius > 0:
        out.append(Violation("geometry", "disk radius must be positive"))
    if isinstance(geom, Rect2D) and not (geom.L1 > 0 and geom.L2 > 0):
        out.append(Violation("geometry", "rectangle sides must be positive"))
    if isinstance(geom, Sphere3D) and not geom.R0 > 0:
        out.append(Violation("geometry", "sphere radius must be positive"))
    if not (0.0 < spec.epsilon < EPS_MAX):
        out.append(Violation("epsilon", f"epsilon must lie in (0, {EPS_MAX})"))
    if not spec.D > 0:
        out.append(Violation("D", "bulk diffusivity must be positive"))
    if spec.gamma0 < 0:
        out.append(Violation("gamma0", "bulk degradation must be non-negative"))
    if spec.I0 < 0:
        out.append(Violation("I0", "bulk production must be non-negative"))
    if spec.I0 > 0 and spec.gamma0 == 0:
        out.append(Violation("I0", "production without degradation has no steady state"))
    if spec.N == 0:
        out.append(Violation("compartments", "at least one compartment is required"))
        return out

    d = geom.dim
    for j, c in enumerate(spec.compartments):
        if len(c.center) != d:
            out.append(Violation("center", f"center must have {d} coordinates", (j,)))
        if not (0.0 < c.ell <= 1.0):
            out.append(Violation("ell", "radius factor must lie in (0, 1]", (j,)))
        if not c.kappa > 0:
            out.append(Violation("kappa", "permeability must be positive", (j,)))
        m = c.model
        if isinstance(m, ModelII):
            if m.Dbar <= 0 or m.gammabar < 0 or m.Ibar < 0:
                out.append(Violation("model", "receptor pool rates must be non-negative", (j,)))
        if isinstance(m, ModelIII):
            if m.K < 1 or len(m.w0) != m.K:
                out.append(Violation("model", "kinetics state must have K entries", (j,)))
        if c.shape is not None and d != 3:
            out.append(Violation("shape", "shapes apply to three-dimensional problems", (j,)))
    if out:
        return out

    x = spec.centers()
    ell = spec.ells()
    sep = spec.sep_min if spec.sep_min is not None else 4.0 * spec.epsilon * float(ell.max())
    dist_b = np.atleast_1d(geom.boundary_distance(x))
    for j in range(spec.N):
        if dist_b[j] < sep:
            out.append(Violation("separation", f"compartment within {sep:g} of the boundary", (j,)))
    for j in range(spec.N):
        for k in range(j + 1, spec.N):
            if np.linalg.norm(x[j] - x[k]) < sep:
                out.append(Violation("separation", f"compartments closer than {sep:g}", (j, k)))
    return out


def validate(spec) -> ValidatedSpec:
    """Validate a problem and attach ``nu = -1/ln(epsilon)``.

    Idempotent: a :class:`ValidatedSpec` is returned unchanged.
    """
    if isinstance(spec, ValidatedSpec):
        return spec
    problems = check(spec)
    if problems:
        raise ValidationError(problems)
    L = spec.geometry.length_scale
    warn = []
    x = spec.centers()
    for j in range(spec.N):
        for k in range(j + 1, spec.N):
            if np.linalg.norm(x[j] - x[k]) < 0.2 * L:
                warn.append(f"compartments {j} and {k} closer than 0.2 L; accuracy degrades")
    return ValidatedSpec(spec=spec, nu=nu_from_epsilon(spec.epsilon), length_scale=L, warnings=tuple(warn))


# ------------------------------------------------------------ serialization


def _float(v):
    if isinstance(v, str):
        return float(v)  # accepts "inf"
    return float(v)


def _jsonable(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def geometry_from_dict(d: dict) -> Geometry:
    kind = d.get("kind", "disk")
    if kind == "disk":
        return Disk2D(radius=_float(d.get("radius", 1.0)))
    if kind == "rectangle":
        return Rect2D(L1=_float(d.get("L1", 1.0)), L2=_float(d.get("L2", 1.0)))
    if kind == "sphere":
        return Sphere3D(R0=_float(d.get("R0", 1.0)))
    raise ValidationError([Violation("geometry", f"unknown geometry kind {kind!r}")])


def geometry_to_dict(g: Geometry) -> dict:
    return {"kind": g.kind, **asdict(g)}


def model_from_dict(d: dict | None) -> BoundaryModel:
    if d is None:
        return ModelI()
    kind = str(d.get("kind", "I"))
    if kind == "I":
        return ModelI(c0=_float(d.get("c0", 0.0)))
    if kind == "II":
        return ModelII(Dbar=_float(d.get("Dbar", 1.0)), gammabar=_float(d.get("gammabar", 1.0)),
                       Ibar=_float(d.get("Ibar", 0.0)))
    if kind == "III":
        w0 = tuple(_float(v) for v in d.get("w0", [0.0]))
        params = tuple(sorted((k, _float(v)) for k, v in d.get("params", {}).items()))
        return ModelIII(kinetics=d.get("kinetics", "linear"), K=int(d.get("K", len(w0))), w0=w0, params=params)
    raise ValidationError([Violation("model", f"unknown boundary model {kind!r}")])


def model_to_dict(m: BoundaryModel) -> dict:
    d = {"kind": m.kind, **asdict(m)}
    if isinstance(m, ModelIII):
        d["params"] = dict(m.params)
        d["w0"] = list(m.w0)
    return d


def spec_from_dict(d: dict) -> ProblemSpec:
    """Build a :class:`ProblemSpec` from its JSON form."""
    try:
        geom = geometry_from_dict(d["geometry"])
        comps = []
        for c in d["compartments"]:
            shape = c.get("shape")
            if shape is not None:
                shape = ShapeSpec(kind=shape["kind"], a=_float(shape["a"]),
                                  b=None if shape.get("b") is None else _float(shape["b"]))
            comps.append(CompartmentSpec(
                center=tuple(_float(v) for v in c["center"]),
                ell=_float(c.get("ell", 1.0)),
                kappa=_float(c.get("kappa", "inf")),
                model=model_from_dict(c.get("model")),
                shape=shape,
            ))
        return ProblemSpec(
            geometry=geom,
            compartments=tuple(comps),
            D=_float(d.get("D", 1.0)),
            gamma0=_float(d.get("gamma0", 0.0)),
            I0=_float(d.get("I0", 0.0)),
            epsilon=_float(d.get("epsilon", 0.05)),
            sep_min=None if d.get("sep_min") is None else _float(d["sep_min"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError([Violation("schema", f"malformed problem description: {exc}")]) from exc


def spec_to_dict(spec: ProblemSpec) -> dict:
    comps = []
    for c in spec.compartments:
        e = {"center": list(c.center), "ell": c.ell, "kappa": c.kappa, "model": model_to_dict(c.model)}
        if c.shape is not None:
            e["shape"] = asdict(c.shape)
        comps.append(e)
    d = {
        "geometry": geometry_to_dict(spec.geometry),
        "compartments": comps,
        "D": spec.D,
        "gamma0": spec.gamma0,
        "I0": spec.I0,
        "epsilon": spec.epsilon,
    }
    if spec.sep_min is not None:
        d["sep_min"] = spec.sep_min
    return _jsonable(d)


def load_spec(path) -> ProblemSpec:
    with open(path) as fh:
        return spec_from_dict(json.load(fh))


def dump_spec(spec: ProblemSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(spec_to_dict(spec), fh, indent=2, sort_keys=True)
