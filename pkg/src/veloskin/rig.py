"""Skeleton and skinned mesh containers plus the per-model precomputation:
subtree weight propagation, vertex masses and bone centroids.

Bones are stored parent-before-child so a single forward pass accumulates
global transforms and a single backward pass accumulates subtree sums.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    CyclicHierarchyError,
    ForwardParentReferenceError,
    MultipleRootsError,
)
from .geometry import EPS, RigidTransform

# weight sums farther than this from 1 trigger renormalization
WEIGHT_SUM_TOL = 1e-6


@dataclass(eq=False)
class Bone:
    name: str
    parent_index: int  # negative for the root
    rest_local: RigidTransform


@dataclass(eq=False)
class Skeleton:
    bones: list[Bone]

    def __len__(self) -> int:
        return len(self.bones)

    @cached_property
    def children(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in self.bones]
        for i, b in enumerate(self.bones):
            if b.parent_index >= 0:
                out[b.parent_index].append(i)
        return out

    @cached_property
    def rest_globals(self) -> list[RigidTransform]:
        """Rest-pose global transforms, accumulated root to leaf."""
        out: list[RigidTransform] = []
        for b in self.bones:
            if b.parent_index < 0:
                out.append(b.rest_local)
            else:
                out.append(out[b.parent_index].compose(b.rest_local))
        return out

    def rest_origins(self) -> np.ndarray:
        """(B, 3) global rest positions of the bone origins."""
        return np.array([g.translation for g in self.rest_globals])


def validate_skeleton(skeleton: Skeleton) -> None:
    """Check the hierarchy is a parent-ordered tree with a single root.

    Raises:
        CyclicHierarchyError: a bone parents itself.
        ForwardParentReferenceError: a parent index does not precede its bone.
        MultipleRootsError: more than one bone has no parent.
    """
    roots = 0
    for i, b in enumerate(skeleton.bones):
        if b.parent_index == i:
            raise CyclicHierarchyError(f"bone {i} ({b.name!r}) is its own parent")
        if b.parent_index > i:
            raise ForwardParentReferenceError(
                f"bone {i} ({b.name!r}) references parent {b.parent_index} stored after it"
            )
        if b.parent_index < 0:
            roots += 1
    if roots > 1:
        raise MultipleRootsError(f"expected exactly one root bone, found {roots}")


@dataclass(eq=False)
class SkinnedMesh:
    """Triangle mesh with sparse per-vertex skinning weights.

    lbs_weights holds, for each vertex, a list of (bone_index, weight)
    pairs. Weights are kept normalized; see normalize_weights.
    """

    rest_positions: np.ndarray  # (N, 3)
    triangles: np.ndarray  # (M, 3) int
    lbs_weights: list[list[tuple[int, float]]]
    _csr_cache: dict = field(default_factory=dict, repr=False)

    @property
    def num_vertices(self) -> int:
        return len(self.rest_positions)

    def weights_by_bone(self, num_bones: int) -> list[tuple[np.ndarray, np.ndarray]]:
        """Per-bone (vertex_indices, weights) arrays, cached.

        Grouping by bone lets skinning run one vectorized pass per bone while
        keeping a fixed bone-ascending accumulation order per vertex.
        """
        if num_bones in self._csr_cache:
            return self._csr_cache[num_bones]
        verts: list[list[int]] = [[] for _ in range(num_bones)]
        vals: list[list[float]] = [[] for _ in range(num_bones)]
        for u, pairs in enumerate(self.lbs_weights):
            for bone, w in pairs:
                verts[bone].append(u)
                vals[bone].append(w)
        csr = [
            (np.array(v, dtype=np.intp), np.array(x, dtype=float))
            for v, x in zip(verts, vals)
        ]
        self._csr_cache[num_bones] = csr
        return csr

    def dense_weights(self, num_bones: int) -> np.ndarray:
        """(N, B) dense weight matrix."""
        w = np.zeros((self.num_vertices, num_bones))
        for bone, (idx, vals) in enumerate(self.weights_by_bone(num_bones)):
            w[idx, bone] += vals
        return w


def normalize_weights(mesh: SkinnedMesh, num_bones: int) -> list[str]:
    """Clamp-free weight cleanup, in place. Returns warning strings.

    Duplicate bone entries per vertex are merged. Negative weights are
    rejected. Sums off 1 by more than WEIGHT_SUM_TOL are renormalized with a
    warning instead of being rejected, so hand-edited files stay usable.
    """
    warnings: list[str] = []
    for u, pairs in enumerate(mesh.lbs_weights):
        merged: dict[int, float] = {}
        for bone, w in pairs:
            if not 0 <= bone < num_bones:
                raise IndexError(f"vertex {u} references bone {bone} of {num_bones}")
            if w < 0.0:
                raise ValueError(f"vertex {u} has negative weight {w} on bone {bone}")
            merged[bone] = merged.get(bone, 0.0) + float(w)
        if len(merged) < len(pairs):
            warnings.append(f"vertex {u}: merged duplicate bone entries")
        total = sum(merged.values())
        if total <= EPS:
            raise ValueError(f"vertex {u} has zero total skinning weight")
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            warnings.append(f"vertex {u}: weights sum to {total:.9g}, renormalized")
            merged = {b: w / total for b, w in merged.items()}
        mesh.lbs_weights[u] = sorted(merged.items())
    mesh._csr_cache.clear()
    return warnings


# ===========================================================================
# weight propagation over the hierarchy
# ===========================================================================


def propagate_weights_upward(mesh: SkinnedMesh, skeleton: Skeleton) -> np.ndarray:
    """(N, B) subtree-accumulated weights.

    Entry [u, i] is the sum of vertex u's skinning weights over bone i and
    every descendant of i. A vertex strongly bound deep in a limb therefore
    responds to every joint along that limb. For normalized weights the
    root column is exactly the full weight sum, i.e. 1.
    """
    w = mesh.dense_weights(len(skeleton))
    phi = w.copy()
    for i in reversed(range(len(skeleton))):
        p = skeleton.bones[i].parent_index
        if p >= 0:
            phi[:, p] += phi[:, i]
    return phi


def propagate_weights_downward(mesh: SkinnedMesh, skeleton: Skeleton) -> np.ndarray:
    """(N, B) ancestor-accumulated weights.

    Entry [u, i] sums vertex u's weights over bone i and its ancestors,
    which measures how much of the vertex's binding moves rigidly with
    bone i. Used to place bone centroids.
    """
    w = mesh.dense_weights(len(skeleton))
    psi = w.copy()
    for i in range(len(skeleton)):
        p = skeleton.bones[i].parent_index
        if p >= 0:
            psi[:, i] += psi[:, p]
    return psi


# ===========================================================================
# masses and centroids
# ===========================================================================


def compute_vertex_masses(mesh: SkinnedMesh) -> np.ndarray:
    """(N,) lumped surface masses: one third of each incident triangle area.

    Degenerate triangles contribute zero area and are tolerated. The sum of
    all masses equals the total surface area.
    """
    p = mesh.rest_positions
    tris = mesh.triangles
    masses = np.zeros(mesh.num_vertices)
    if len(tris) == 0:
        return masses
    a = p[tris[:, 0]]
    cross = np.cross(p[tris[:, 1]] - a, p[tris[:, 2]] - a)
    third = 0.5 * np.sqrt(np.einsum("ij,ij->i", cross, cross)) / 3.0
    for k in range(3):
        np.add.at(masses, tris[:, k], third)
    return masses


def compute_bone_centroids(
    mesh: SkinnedMesh,
    psi: np.ndarray,
    masses: np.ndarray,
    rest_origins: np.ndarray,
) -> np.ndarray:
    """(B, 3) rest-pose deformation centers, one per bone.

    Each centroid is the mass-weighted mean of the rest positions, with the
    ancestor-accumulated weights psi deciding how strongly each vertex
    belongs to the bone. Bones whose support carries no mass fall back to
    their own origin.
    """
    coeff = psi * masses[:, None]  # (N, B)
    denom = coeff.sum(axis=0)
    centroids = np.empty((psi.shape[1], 3))
    for i in range(psi.shape[1]):
        if denom[i] <= EPS:
            centroids[i] = rest_origins[i]
        else:
            centroids[i] = (coeff[:, i][:, None] * mesh.rest_positions).sum(axis=0) / denom[i]
    return centroids


@dataclass(eq=False)
class BoneGeometry:
    """Per-bone deformation geometry: centroid and origin, both (B, 3).

    The segment origin -> centroid is the medial axis used by the
    rotation-driven squash; it is undefined for bones where the two nearly
    coincide and callers must fall back accordingly.
    """

    centroids: np.ndarray
    origins: np.ndarray


def posed_bone_geometry(
    skeleton: Skeleton,
    globals_posed: list[RigidTransform],
    rest_geometry: BoneGeometry,
    centroid_offsets: np.ndarray | None = None,
) -> BoneGeometry:
    """Map rest centroids and origins rigidly into the current pose.

    Artist offsets, when given, are expressed in each bone's local frame and
    applied before mapping so they follow the bone.
    """
    B = len(skeleton)
    centroids = np.empty((B, 3))
    origins = np.empty((B, 3))
    for i in range(B):
        g = globals_posed[i]
        local_c = skeleton.rest_globals[i].inverse().apply(rest_geometry.centroids[i])
        if centroid_offsets is not None:
            local_c = local_c + centroid_offsets[i]
        centroids[i] = g.apply(local_c)
        origins[i] = g.translation
    return BoneGeometry(centroids=centroids, origins=origins)
