"""Analytic-SDF object models built from box/cylinder/sphere primitives.

Object SDFs are positive OUTSIDE the object (the usual graphics
convention), opposite to the body SDF. Templates for the built-in
categories live in data/objects/*.json, each with the annotations the
anchor-pose generator needs (seat surface, lift rim).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from ..errors import TemplateError
from ..kinematics.rotations import yaw_matrix


@dataclass(frozen=True)
class Primitive:
    kind: str                      # box | cylinder | sphere
    center: np.ndarray             # (3,) in object frame
    yaw: float = 0.0               # rotation about +Y
    half_extents: np.ndarray | None = None   # box
    radius: float = 0.0            # cylinder / sphere
    height: float = 0.0            # cylinder (along +Y)

    def _to_local(self, q: np.ndarray) -> np.ndarray:
        p = q - self.center
        if self.yaw != 0.0:
            p = p @ yaw_matrix(self.yaw)  # inverse rotation: R^T applied as p @ R
        return p

    def _to_object(self, p: np.ndarray) -> np.ndarray:
        if self.yaw != 0.0:
            p = p @ yaw_matrix(self.yaw).T
        return p + self.center

    def sdf(self, q: np.ndarray) -> np.ndarray:
        """Signed distance, q (..., 3) in the object frame."""
        p = self._to_local(np.asarray(q, dtype=np.float64))
        if self.kind == "box":
            d = np.abs(p) - self.half_extents
            outside = np.linalg.norm(np.maximum(d, 0.0), axis=-1)
            inside = np.minimum(np.max(d, axis=-1), 0.0)
            return outside + inside
        if self.kind == "cylinder":
            dr = np.linalg.norm(p[..., [0, 2]], axis=-1) - self.radius
            dy = np.abs(p[..., 1]) - self.height / 2.0
            d = np.stack([dr, dy], axis=-1)
            outside = np.linalg.norm(np.maximum(d, 0.0), axis=-1)
            inside = np.minimum(np.max(d, axis=-1), 0.0)
            return outside + inside
        if self.kind == "sphere":
            return np.linalg.norm(p, axis=-1) - self.radius
        raise ValueError(f"unknown primitive kind {self.kind!r}")

    def surface_area(self) -> float:
        if self.kind == "box":
            hx, hy, hz = self.half_extents
            return float(8.0 * (hx * hy + hy * hz + hx * hz))
        if self.kind == "cylinder":
            return float(2.0 * np.pi * self.radius * self.height
                         + 2.0 * np.pi * self.radius**2)
        if self.kind == "sphere":
            return float(4.0 * np.pi * self.radius**2)
        raise ValueError(f"unknown primitive kind {self.kind!r}")

    def sample_surface(self, rng: np.random.Generator) -> np.ndarray:
        """One uniform surface sample in the object frame."""
        if self.kind == "box":
            hx, hy, hz = self.half_extents
            areas = np.array([hy * hz, hy * hz, hx * hz, hx * hz, hx * hy, hx * hy])
            face = rng.choice(6, p=areas / areas.sum())
            u = rng.uniform(-1.0, 1.0)
            v = rng.uniform(-1.0, 1.0)
            axis = face // 2
            sign = 1.0 if face % 2 == 0 else -1.0
            p = np.empty(3)
            h = np.array([hx, hy, hz])
            p[axis] = sign * h[axis]
            rest = [i for i in range(3) if i != axis]
            p[rest[0]] = u * h[rest[0]]
            p[rest[1]] = v * h[rest[1]]
        elif self.kind == "cylinder":
            side = 2.0 * np.pi * self.radius * self.height
            caps = 2.0 * np.pi * self.radius**2
            angle = rng.uniform(0.0, 2.0 * np.pi)
            if rng.uniform(0.0, side + caps) < side:
                y = rng.uniform(-self.height / 2.0, self.height / 2.0)
                p = np.array(
                    [self.radius * np.cos(angle), y, self.radius * np.sin(angle)]
                )
            else:
                r = self.radius * np.sqrt(rng.uniform())
                y = self.height / 2.0 if rng.uniform() < 0.5 else -self.height / 2.0
                p = np.array([r * np.cos(angle), y, r * np.sin(angle)])
        elif self.kind == "sphere":
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            p = d * self.radius
        else:
            raise ValueError(f"unknown primitive kind {self.kind!r}")
        return self._to_object(p)


@dataclass(frozen=True)
class ObjectModel:
    label: str
    primitives: tuple
    annotations: dict = field(default_factory=dict)

    def sdf_object_frame(self, q: np.ndarray) -> np.ndarray:
        vals = np.stack([p.sdf(q) for p in self.primitives], axis=-1)
        return np.min(vals, axis=-1)

    def require_annotation(self, name: str) -> dict:
        if name not in self.annotations:
            raise TemplateError(f"object {self.label!r} lacks annotation {name!r}")
        return self.annotations[name]

    def bounding_radius(self) -> float:
        """Radius of a ground-plane circle containing all primitives."""
        r = 0.0
        for p in self.primitives:
            c = np.linalg.norm(p.center[[0, 2]])
            if p.kind == "box":
                ext = np.linalg.norm(p.half_extents[[0, 2]])
            elif p.kind == "cylinder":
                ext = p.radius
            else:
                ext = p.radius
            r = max(r, c + ext)
        return r

    @classmethod
    def from_dict(cls, d: dict) -> "ObjectModel":
        prims = []
        for p in d["primitives"]:
            prims.append(
                Primitive(
                    kind=p["kind"],
                    center=np.asarray(p["center"], dtype=np.float64),
                    yaw=float(p.get("yaw", 0.0)),
                    half_extents=(
                        np.asarray(p["half_extents"], dtype=np.float64)
                        if "half_extents" in p
                        else None
                    ),
                    radius=float(p.get("radius", 0.0)),
                    height=float(p.get("height", 0.0)),
                )
            )
        if not prims:
            raise ValueError("object needs at least one primitive")
        return cls(
            label=d["label"],
            primitives=tuple(prims),
            annotations=d.get("annotations", {}),
        )


def load_object_template(label: str) -> ObjectModel:
    path = resources.files("hoisynth.data.objects").joinpath(f"{label}.json")
    try:
        with path.open() as f:
            return ObjectModel.from_dict(json.load(f))
    except FileNotFoundError as e:
        raise TemplateError(f"no object template named {label!r}") from e


def available_labels() -> list[str]:
    out = []
    for entry in resources.files("hoisynth.data.objects").iterdir():
        if entry.name.endswith(".json"):
            out.append(entry.name[:-5])
    return sorted(out)


@dataclass(frozen=True)
class ObjectPlacement:
    """Rigid transform of the object relative to the person's frame."""

    matrix: np.ndarray  # (4, 4)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (4, 4):
            raise ValueError("placement must be 4x4")
        r = m[:3, :3]
        if not np.allclose(r @ r.T, np.eye(3), atol=1e-6):
            raise ValueError("placement rotation is not orthonormal")
        if np.linalg.det(r) < 0.0:
            raise ValueError("placement rotation must have det +1")
        if not np.allclose(m[3], [0.0, 0.0, 0.0, 1.0], atol=1e-9):
            raise ValueError("placement last row must be (0,0,0,1)")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "ObjectPlacement":
        return cls(np.eye(4))

    @classmethod
    def from_yaw_translation(cls, yaw: float, translation) -> "ObjectPlacement":
        m = np.eye(4)
        m[:3, :3] = yaw_matrix(yaw)
        m[:3, 3] = np.asarray(translation, dtype=np.float64)
        return cls(m)

    def transform_points(self, p: np.ndarray) -> np.ndarray:
        return p @ self.matrix[:3, :3].T + self.matrix[:3, 3]

    def inverse_points(self, p: np.ndarray) -> np.ndarray:
        return (p - self.matrix[:3, 3]) @ self.matrix[:3, :3]

    def compose_left(self, t4: np.ndarray) -> "ObjectPlacement":
        return ObjectPlacement(t4 @ self.matrix)


def object_sdf(
    obj: ObjectModel, placement: ObjectPlacement, query: np.ndarray
):
    """Signed distance to the placed object, positive outside."""
    query = np.asarray(query, dtype=np.float64)
    single = query.ndim == 1
    q_obj = placement.inverse_points(np.atleast_2d(query))
    vals = obj.sdf_object_frame(q_obj)
    return float(vals[0]) if single else vals


_POINT_CACHE: dict = {}


def sample_object_points(
    obj: ObjectModel,
    placement: ObjectPlacement,
    count: int = 5000,
    seed: int = 0,
) -> np.ndarray:
    """Area-weighted surface samples of the composite, (count, 3).

    Candidate points landing inside another primitive are rejected, so
    every returned point lies on the union boundary. Deterministic per
    seed; points come back in the placed frame.
    """
    if count <= 0:
        return np.zeros((0, 3))
    key = (obj.label, count, seed)
    cached = _POINT_CACHE.get(key)
    if cached is not None:
        return placement.transform_points(cached)
    rng = np.random.default_rng(seed)
    areas = np.array([p.surface_area() for p in obj.primitives])
    probs = areas / areas.sum()
    pts = np.empty((count, 3))
    n_prims = len(obj.primitives)
    for i in range(count):
        for _attempt in range(1000):
            pi = int(rng.choice(n_prims, p=probs)) if n_prims > 1 else 0
            p = obj.primitives[pi].sample_surface(rng)
            ok = True
            for j, other in enumerate(obj.primitives):
                if j != pi and other.sdf(p) < -1e-9:
                    ok = False
                    break
            if ok:
                pts[i] = p
                break
        else:
            raise RuntimeError(
                f"could not sample a visible surface point on {obj.label!r}"
            )
    _POINT_CACHE[key] = pts
    return placement.transform_points(pts)
