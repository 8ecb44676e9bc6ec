"""Skeleton, template mesh, forward kinematics, and linear blend skinning.

A rig is a topologically-ordered joint tree plus a triangulated template mesh
whose vertices carry part labels and sparse skin weights.  FK composes local
joint rotations parent-to-child; LBS poses points with the blended per-joint
transforms relative to the rest pose.  Both come with exact reverse-mode
backward passes so per-frame pose corrections can be optimized.

Rigs are immutable after construction (arrays are marked read-only) and safe
to share across workers; FK/LBS are pure functions.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from . import transforms as tf

RIG_FORMAT = "splatar-rig"
RIG_VERSION = 1
POSE_FORMAT = "splatar-poses"
POSE_VERSION = 1

# Fixed part table; id 0 is background everywhere (masks, palettes, renders).
PART_NAMES = (
    "background",
    "torso",
    "head",
    "left_arm",
    "right_arm",
    "left_hand",
    "right_hand",
    "left_leg",
    "right_leg",
    "left_foot",
    "right_foot",
    "skirt",
)

# Documented palette indexed by part id, values in [0, 1].
PART_PALETTE = np.array(
    [
        [0.00, 0.00, 0.00],  # background
        [0.90, 0.30, 0.25],  # torso
        [0.95, 0.75, 0.30],  # head
        [0.30, 0.65, 0.90],  # left_arm
        [0.25, 0.35, 0.85],  # right_arm
        [0.55, 0.85, 0.95],  # left_hand
        [0.50, 0.55, 0.95],  # right_hand
        [0.35, 0.80, 0.40],  # left_leg
        [0.20, 0.60, 0.35],  # right_leg
        [0.75, 0.90, 0.45],  # left_foot
        [0.55, 0.75, 0.30],  # right_foot
        [0.80, 0.40, 0.80],  # skirt
    ]
)


@dataclass
class Rig:
    """Joint hierarchy + template mesh. Immutable after construction."""

    joint_names: tuple[str, ...]
    parents: np.ndarray            # (J,) int32, parents[0] == -1
    rest_offsets: np.ndarray       # (J, 3) offset from parent in rest pose
    template_vertices: np.ndarray  # (V, 3) canonical A-pose positions
    template_triangles: np.ndarray  # (T, 3) int32
    vertex_part_labels: np.ndarray  # (V,) int32 into part_names
    part_names: tuple[str, ...]
    joint_part_map: np.ndarray     # (J,) int32 part id per joint
    skin_weights: np.ndarray       # (V, J) rows sum to 1

    def __post_init__(self):
        self.parents = np.asarray(self.parents, dtype=np.int32)
        self.rest_offsets = np.asarray(self.rest_offsets, dtype=np.float64)
        self.template_vertices = np.asarray(self.template_vertices, dtype=np.float64)
        self.template_triangles = np.asarray(self.template_triangles, dtype=np.int32)
        self.vertex_part_labels = np.asarray(self.vertex_part_labels, dtype=np.int32)
        self.joint_part_map = np.asarray(self.joint_part_map, dtype=np.int32)
        self.skin_weights = np.asarray(self.skin_weights, dtype=np.float64)
        self._validate()
        for arr in (
            self.parents,
            self.rest_offsets,
            self.template_vertices,
            self.template_triangles,
            self.vertex_part_labels,
            self.joint_part_map,
            self.skin_weights,
        ):
            arr.flags.writeable = False
        self._rest_positions = self._compute_rest_positions()
        self._rest_positions.flags.writeable = False

    @property
    def n_joints(self) -> int:
        return len(self.joint_names)

    @property
    def n_vertices(self) -> int:
        return self.template_vertices.shape[0]

    @property
    def rest_positions(self) -> np.ndarray:
        """World position of each joint in the rest pose, (J, 3)."""
        return self._rest_positions

    def joint_index(self, name: str) -> int:
        return self.joint_names.index(name)

    def part_id(self, name: str) -> int:
        return self.part_names.index(name)

    def _compute_rest_positions(self) -> np.ndarray:
        pos = np.zeros((self.n_joints, 3))
        for j in range(self.n_joints):
            p = self.parents[j]
            pos[j] = self.rest_offsets[j] if p < 0 else pos[p] + self.rest_offsets[j]
        return pos

    def _validate(self):
        n = len(self.joint_names)
        if self.parents.shape != (n,) or self.rest_offsets.shape != (n, 3):
            raise DataError("rig: joint arrays inconsistent with joint_names")
        if self.parents[0] != -1:
            raise DataError("rig: joint 0 must be the root (parent = -1)")
        for j in range(1, n):
            if not 0 <= self.parents[j] < j:
                raise DataError(f"rig: joints must be topologically ordered (joint {j})")
        v = self.template_vertices.shape[0]
        if self.skin_weights.shape != (v, n):
            raise DataError("rig: skin_weights shape mismatch")
        if np.any(self.skin_weights < -1e-12):
            raise DataError("rig: negative skin weight")
        sums = self.skin_weights.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-6):
            raise DataError("rig: skin weight rows must sum to 1 (±1e-6)")
        tris = self.template_triangles
        if tris.size and (tris.min() < 0 or tris.max() >= v):
            raise DataError("rig: triangle index out of range")
        if tris.size:
            p = self.template_vertices
            cross = np.cross(p[tris[:, 1]] - p[tris[:, 0]], p[tris[:, 2]] - p[tris[:, 0]])
            if np.any(np.linalg.norm(cross, axis=1) < 1e-14):
                raise DataError("rig: degenerate (zero-area) template triangle")
        if self.vertex_part_labels.shape != (v,):
            raise DataError("rig: vertex_part_labels shape mismatch")
        if self.joint_part_map.shape != (n,):
            raise DataError("rig: joint_part_map shape mismatch")

    # ---- serialization -------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "format": RIG_FORMAT,
            "version": RIG_VERSION,
            "joint_names": list(self.joint_names),
            "parents": self.parents.tolist(),
            "rest_offsets": self.rest_offsets.tolist(),
            "template_vertices": self.template_vertices.tolist(),
            "template_triangles": self.template_triangles.tolist(),
            "vertex_part_labels": self.vertex_part_labels.tolist(),
            "part_names": list(self.part_names),
            "joint_part_map": self.joint_part_map.tolist(),
            "skin_weights": _weights_to_sparse(self.skin_weights),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Rig":
        if d.get("format") != RIG_FORMAT:
            raise DataError(f"not a rig file (format={d.get('format')!r})")
        if d.get("version") != RIG_VERSION:
            raise DataError(f"unsupported rig version {d.get('version')!r}")
        n_joints = len(d["joint_names"])
        weights = _weights_from_sparse(d["skin_weights"], n_joints)
        return cls(
            joint_names=tuple(d["joint_names"]),
            parents=np.array(d["parents"]),
            rest_offsets=np.array(d["rest_offsets"]),
            template_vertices=np.array(d["template_vertices"]),
            template_triangles=np.array(d["template_triangles"]),
            vertex_part_labels=np.array(d["vertex_part_labels"]),
            part_names=tuple(d["part_names"]),
            joint_part_map=np.array(d["joint_part_map"]),
            skin_weights=weights,
        )

    def canonical_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))

    def content_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def save(self, path):
        Path(path).write_text(self.canonical_json())

    @classmethod
    def load(cls, path) -> "Rig":
        p = Path(path)
        if not p.exists():
            raise DataError(f"rig file not found: {p}")
        try:
            d = json.loads(p.read_text())
        except json.JSONDecodeError as e:
            raise DataError(f"rig file {p} is not valid JSON: {e}") from e
        return cls.from_json_dict(d)


def _weights_to_sparse(w: np.ndarray) -> dict:
    idx, val = [], []
    for row in w:
        nz = np.nonzero(row > 0)[0]
        idx.append(nz.tolist())
        val.append([float(row[i]) for i in nz])
    return {"indices": idx, "values": val}


def _weights_from_sparse(d: dict, n_joints: int) -> np.ndarray:
    idx, val = d["indices"], d["values"]
    w = np.zeros((len(idx), n_joints))
    for r, (ii, vv) in enumerate(zip(idx, val)):
        w[r, ii] = vv
    return w


@dataclass
class Pose:
    """Root translation + per-joint local rotations (unit quaternions)."""

    root_translation: np.ndarray  # (3,)
    joint_rotations: np.ndarray   # (J, 4), (w, x, y, z)

    def __post_init__(self):
        self.root_translation = np.asarray(self.root_translation, dtype=np.float64)
        self.joint_rotations = np.asarray(self.joint_rotations, dtype=np.float64)

    @classmethod
    def identity(cls, rig: Rig) -> "Pose":
        return cls(np.zeros(3), tf.quat_identity(rig.n_joints))

    def validate(self, rig: Rig):
        if self.joint_rotations.shape != (rig.n_joints, 4):
            raise DataError(
                f"pose has {self.joint_rotations.shape[0]} joints, rig has {rig.n_joints}"
            )
        norms = np.linalg.norm(self.joint_rotations, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise DataError("pose quaternions must be unit-norm (±1e-6)")
        if not (np.isfinite(self.root_translation).all() and np.isfinite(self.joint_rotations).all()):
            raise DataError("pose contains non-finite values")

    def to_json_dict(self) -> dict:
        return {
            "root_translation": self.root_translation.tolist(),
            "joint_rotations": self.joint_rotations.tolist(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Pose":
        return cls(np.array(d["root_translation"]), np.array(d["joint_rotations"]))


def save_pose_sequence(poses: list[Pose], path):
    """Frame-indexed pose records, one JSON object per line after the header."""
    lines = [json.dumps({"format": POSE_FORMAT, "version": POSE_VERSION})]
    for i, p in enumerate(poses):
        rec = {"frame": i}
        rec.update(p.to_json_dict())
        lines.append(json.dumps(rec))
    Path(path).write_text("\n".join(lines) + "\n")


def load_pose_sequence(path) -> list[Pose]:
    p = Path(path)
    if not p.exists():
        raise DataError(f"pose file not found: {p}")
    lines = [ln for ln in p.read_text().splitlines() if ln.strip()]
    if not lines:
        raise DataError(f"pose file {p} is empty")
    head = json.loads(lines[0])
    if head.get("format") != POSE_FORMAT or head.get("version") != POSE_VERSION:
        raise DataError(f"pose file {p}: unsupported header {head!r}")
    records = [json.loads(ln) for ln in lines[1:]]
    records.sort(key=lambda r: r["frame"])
    return [Pose.from_json_dict(r) for r in records]


# ---- forward kinematics ------------------------------------------------


@dataclass
class FKResult:
    rot_world: np.ndarray   # (J, 3, 3)
    pos_world: np.ndarray   # (J, 3)
    rot_local: np.ndarray   # (J, 3, 3) effective local rotations


def fk_forward(rig: Rig, quats: np.ndarray, root_translation: np.ndarray) -> FKResult:
    """Compose local transforms parent-to-child in topological order."""
    J = rig.n_joints
    rot_local = tf.quat_to_matrix(quats)
    rot_world = np.zeros((J, 3, 3))
    pos_world = np.zeros((J, 3))
    rot_world[0] = rot_local[0]
    pos_world[0] = rig.rest_offsets[0] + root_translation
    for j in range(1, J):
        p = rig.parents[j]
        rot_world[j] = rot_world[p] @ rot_local[j]
        pos_world[j] = rot_world[p] @ rig.rest_offsets[j] + pos_world[p]
    return FKResult(rot_world, pos_world, rot_local)


def fk_backward(rig: Rig, fk: FKResult, d_rot_world: np.ndarray, d_pos_world: np.ndarray):
    """Pull world-transform gradients back to local rotations + root translation.

    Returns (d_rot_local (J,3,3), d_root_translation (3,)).  Inputs are
    consumed as accumulators and must not be reused afterwards.
    """
    J = rig.n_joints
    dR = d_rot_world.copy()
    dt = d_pos_world.copy()
    d_rot_local = np.zeros((J, 3, 3))
    for j in range(J - 1, 0, -1):
        p = rig.parents[j]
        d_rot_local[j] = fk.rot_world[p].T @ dR[j]
        dR[p] += dR[j] @ fk.rot_local[j].T + np.outer(dt[j], rig.rest_offsets[j])
        dt[p] += dt[j]
    d_rot_local[0] = dR[0]
    return d_rot_local, dt[0]


def skinning_transforms(rig: Rig, fk: FKResult):
    """Per-joint rigid maps from rest space to posed space: x -> Mr x + Mt."""
    rest = rig.rest_positions
    Mr = fk.rot_world
    Mt = fk.pos_world - np.einsum("jab,jb->ja", fk.rot_world, rest)
    return Mr, Mt


def skinning_transforms_backward(rig: Rig, d_Mr: np.ndarray, d_Mt: np.ndarray):
    """Gradients of (Mr, Mt) back to world transforms."""
    rest = rig.rest_positions
    d_rot_world = d_Mr - np.einsum("ja,jb->jab", d_Mt, rest)
    d_pos_world = d_Mt.copy()
    return d_rot_world, d_pos_world


# ---- linear blend skinning ---------------------------------------------


def blend_matrices(weights: np.ndarray, Mr: np.ndarray, Mt: np.ndarray):
    """Per-point blended rigid transforms: Br (N,3,3), Bt (N,3)."""
    Br = np.einsum("nj,jab->nab", weights, Mr)
    Bt = weights @ Mt
    return Br, Bt


def lbs_apply(Br: np.ndarray, Bt: np.ndarray, points: np.ndarray) -> np.ndarray:
    return np.einsum("nab,nb->na", Br, points) + Bt


def lbs_apply_backward(Br, points, weights, d_out):
    """Backward of blend+apply. Returns (d_points, d_Mr, d_Mt)."""
    d_points = np.einsum("nab,na->nb", Br, d_out)
    d_Br = np.einsum("na,nb->nab", d_out, points)
    d_Mr = np.einsum("nj,nab->jab", weights, d_Br)
    d_Mt = weights.T @ d_out
    return d_points, d_Mr, d_Mt


def blend_rotate(Br: np.ndarray, normals: np.ndarray) -> np.ndarray:
    """Rotate direction vectors by the blended rotation and renormalize."""
    raw = np.einsum("nab,nb->na", Br, normals)
    norms = np.linalg.norm(raw, axis=1, keepdims=True)
    if np.any(norms < 1e-12):
        raise DataError("zero-length normal after blending")
    return raw / norms


def blend_rotate_backward(Br, normals, weights, d_unit):
    """Backward of blend_rotate. Returns (d_normals, d_Mr)."""
    raw = np.einsum("nab,nb->na", Br, normals)
    norms = np.linalg.norm(raw, axis=1, keepdims=True)
    unit = raw / norms
    d_raw = (d_unit - unit * np.sum(unit * d_unit, axis=1, keepdims=True)) / norms
    d_normals = np.einsum("nab,na->nb", Br, d_raw)
    d_Br = np.einsum("na,nb->nab", d_raw, normals)
    d_Mr = np.einsum("nj,nab->jab", weights, d_Br)
    return d_normals, d_Mr


def _check_weights(weights: np.ndarray, n_points: int, n_joints: int):
    if weights.shape != (n_points, n_joints):
        raise DataError("weights shape mismatch")
    if np.any(np.abs(weights.sum(axis=1) - 1.0) > 1e-6):
        raise DataError("skin weight rows must sum to 1 (±1e-6)")


def forward_kinematics(rig: Rig, pose: Pose):
    """World transform per joint as (rotations (J,3,3), translations (J,3))."""
    pose.validate(rig)
    fk = fk_forward(rig, pose.joint_rotations, pose.root_translation)
    return fk.rot_world, fk.pos_world


def lbs_transform_points(rig: Rig, pose: Pose, points: np.ndarray, weights: np.ndarray) -> np.ndarray:
    pose.validate(rig)
    points = np.asarray(points, dtype=np.float64)
    if not np.isfinite(points).all():
        raise DataError("NaN/inf in points")
    _check_weights(np.asarray(weights, dtype=np.float64), points.shape[0], rig.n_joints)
    fk = fk_forward(rig, pose.joint_rotations, pose.root_translation)
    Mr, Mt = skinning_transforms(rig, fk)
    Br, Bt = blend_matrices(np.asarray(weights, dtype=np.float64), Mr, Mt)
    return lbs_apply(Br, Bt, points)


def lbs_transform_normals(rig: Rig, pose: Pose, normals: np.ndarray, weights: np.ndarray) -> np.ndarray:
    pose.validate(rig)
    normals = np.asarray(normals, dtype=np.float64)
    if np.any(np.linalg.norm(normals, axis=1) < 1e-12):
        raise DataError("zero-length normal")
    weights = np.asarray(weights, dtype=np.float64)
    _check_weights(weights, normals.shape[0], rig.n_joints)
    fk = fk_forward(rig, pose.joint_rotations, pose.root_translation)
    Br, _ = blend_matrices(weights, fk.rot_world, np.zeros((rig.n_joints, 3)))
    return blend_rotate(Br, normals)


# ---- joint ring graph ---------------------------------------------------


@dataclass
class JointRingGraph:
    """Per-joint membership of joints within k tree edges (symmetric)."""

    k: int
    member: np.ndarray  # (J, J) bool, member[i, j] == (dist(i, j) <= k)

    def ring(self, joint: int) -> np.ndarray:
        return np.nonzero(self.member[joint])[0]


def build_ring_graph(rig: Rig, k: int = 4) -> JointRingGraph:
    if k < 0:
        raise DataError("ring size k must be >= 0")
    J = rig.n_joints
    adj = [[] for _ in range(J)]
    for j in range(1, J):
        p = int(rig.parents[j])
        adj[j].append(p)
        adj[p].append(j)
    member = np.zeros((J, J), dtype=bool)
    for start in range(J):
        dist = np.full(J, -1)
        dist[start] = 0
        queue = [start]
        while queue:
            nxt = []
            for u in queue:
                if dist[u] == k:
                    continue
                for v in adj[u]:
                    if dist[v] < 0:
                        dist[v] = dist[u] + 1
                        nxt.append(v)
            queue = nxt
        member[start] = dist >= 0
    return JointRingGraph(k=k, member=member)


# ---- default rig builder -------------------------------------------------


def _radius_profile(keys, y):
    ys = np.array([k[0] for k in keys])
    rs = np.array([k[1] for k in keys])
    return float(np.interp(y, ys, rs))


class _MeshAccum:
    """Collects mesh pieces with per-vertex part labels and weight dicts."""

    def __init__(self, n_joints):
        self.verts = []
        self.tris = []
        self.labels = []
        self.weights = []
        self.n_joints = n_joints

    def add_vertex(self, p, label, wdict):
        self.verts.append(np.asarray(p, dtype=np.float64))
        self.labels.append(label)
        self.weights.append(wdict)
        return len(self.verts) - 1

    def add_tri(self, a, b, c):
        self.tris.append((a, b, c))

    def grid(self, rings, close_seam=True):
        """Triangulate consecutive rings of equal length (list of index lists)."""
        for r0, r1 in zip(rings[:-1], rings[1:]):
            m = len(r0)
            last = m if close_seam else m - 1
            for s in range(last):
                a, b = r0[s], r0[(s + 1) % m]
                c, d = r1[s], r1[(s + 1) % m]
                self.add_tri(a, c, d)
                self.add_tri(a, d, b)

    def fan(self, center_idx, ring, flip=False):
        m = len(ring)
        for s in range(m):
            a, b = ring[s], ring[(s + 1) % m]
            if flip:
                self.add_tri(center_idx, b, a)
            else:
                self.add_tri(center_idx, a, b)

    def finish(self):
        verts = np.array(self.verts)
        tris = np.array(self.tris, dtype=np.int32)
        labels = np.array(self.labels, dtype=np.int32)
        weights = np.zeros((len(self.verts), self.n_joints))
        for i, wd in enumerate(self.weights):
            for j, w in wd.items():
                weights[i, j] += w
        weights /= weights.sum(axis=1, keepdims=True)
        return verts, tris, labels, weights


def _tube_rings(acc, path, radii, segs, label, weight_fn, cross=(1.0, 1.0),
                axes=((1.0, 0.0, 0.0), (0.0, 0.0, 1.0))):
    """Rings of `segs` vertices around each path point; returns ring index lists."""
    u = np.asarray(axes[0], dtype=np.float64)
    v = np.asarray(axes[1], dtype=np.float64)
    rings = []
    n = len(path)
    for i, (p, r) in enumerate(zip(path, radii)):
        t = i / max(n - 1, 1)
        wd = weight_fn(t)
        ring = []
        for s in range(segs):
            ang = 2.0 * np.pi * s / segs
            offset = u * (np.cos(ang) * r * cross[0]) + v * (np.sin(ang) * r * cross[1])
            ring.append(acc.add_vertex(np.asarray(p) + offset, label, wd))
        rings.append(ring)
    acc.grid(rings)
    return rings


def _bone_weight_fn(joint, parent, child, band=0.22):
    """Weights along a bone tube: proximal blend to parent, distal to child."""

    def fn(t):
        wd = {joint: 1.0}
        if parent is not None and t < band:
            b = 0.5 * (1.0 - t / band)
            wd[joint] -= b
            wd[parent] = wd.get(parent, 0.0) + b
        if child is not None and t > 1.0 - band:
            b = 0.5 * (t - (1.0 - band)) / band
            wd[joint] -= b
            wd[child] = wd.get(child, 0.0) + b
        return wd

    return fn


def _limb(acc, rig_pos, j, specs, part, density):
    """Chain of tubes along consecutive joints. specs: (name_a, name_b, r0, r1, rings, segs, cross)."""
    for name_a, name_b, r0, r1, want_rings, want_segs, cross, wparent, tip in specs:
        a = rig_pos[name_a]
        b = rig_pos[name_b] if isinstance(name_b, str) else np.asarray(name_b)
        rings_n = max(3, round(want_rings * density))
        segs = max(6, round(want_segs * density))
        path = [a + (b - a) * (i / (rings_n - 1)) for i in range(rings_n)]
        radii = [r0 + (r1 - r0) * (i / (rings_n - 1)) for i in range(rings_n)]
        child = j[name_b] if isinstance(name_b, str) else None
        wfn = _bone_weight_fn(j[name_a], j.get(wparent) if wparent else None, child)
        axis = b - a
        axis = axis / np.linalg.norm(axis)
        ref = np.array([0.0, 1.0, 0.0]) if abs(axis[1]) < 0.9 else np.array([0.0, 0.0, 1.0])
        u = np.cross(axis, ref)
        u /= np.linalg.norm(u)
        v = np.cross(u, axis)  # (u, v) chosen so rings wind outward along the tube
        rings = _tube_rings(acc, path, radii, segs, part, wfn, cross=cross, axes=(u, v))
        if tip:
            c = acc.add_vertex(path[-1] + axis * radii[-1] * 0.6, part, wfn(1.0))
            acc.fan(c, rings[-1], flip=True)


# Joint layout of the shipped humanoid (A-pose, meters, y-up, faces +z).
_JOINTS = [
    ("root", -1, (0.0, 1.00, 0.0)),
    ("spine1", 0, (0.0, 1.10, 0.0)),
    ("spine2", 1, (0.0, 1.22, 0.0)),
    ("spine3", 2, (0.0, 1.34, 0.0)),
    ("neck", 3, (0.0, 1.50, 0.0)),
    ("head", 4, (0.0, 1.58, 0.0)),
    ("clav_l", 3, (0.055, 1.45, 0.0)),
    ("shoulder_l", 6, (0.195, 1.43, 0.0)),
    ("elbow_l", 7, (0.37, 1.25, 0.0)),
    ("wrist_l", 8, (0.53, 1.08, 0.0)),
    ("hand_l", 9, (0.62, 0.99, 0.0)),
    ("clav_r", 3, (-0.055, 1.45, 0.0)),
    ("shoulder_r", 11, (-0.195, 1.43, 0.0)),
    ("elbow_r", 12, (-0.37, 1.25, 0.0)),
    ("wrist_r", 13, (-0.53, 1.08, 0.0)),
    ("hand_r", 14, (-0.62, 0.99, 0.0)),
    ("hip_l", 0, (0.095, 0.97, 0.0)),
    ("knee_l", 16, (0.105, 0.53, 0.0)),
    ("ankle_l", 17, (0.11, 0.09, 0.0)),
    ("foot_l", 18, (0.11, 0.045, 0.13)),
    ("hip_r", 0, (-0.095, 0.97, 0.0)),
    ("knee_r", 20, (-0.105, 0.53, 0.0)),
    ("ankle_r", 21, (-0.11, 0.09, 0.0)),
    ("foot_r", 22, (-0.11, 0.045, 0.13)),
]

_JOINT_PART = {
    "root": "torso", "spine1": "torso", "spine2": "torso", "spine3": "torso",
    "neck": "head", "head": "head",
    "clav_l": "left_arm", "shoulder_l": "left_arm", "elbow_l": "left_arm",
    "wrist_l": "left_hand", "hand_l": "left_hand",
    "clav_r": "right_arm", "shoulder_r": "right_arm", "elbow_r": "right_arm",
    "wrist_r": "right_hand", "hand_r": "right_hand",
    "hip_l": "left_leg", "knee_l": "left_leg", "ankle_l": "left_foot", "foot_l": "left_foot",
    "hip_r": "right_leg", "knee_r": "right_leg", "ankle_r": "right_foot", "foot_r": "right_foot",
}


def build_default_rig(density: float = 1.0) -> Rig:
    """Procedural humanoid: cylinder limbs, ellipsoid head, loose skirt band.

    density scales ring/segment counts; 1.0 gives roughly 4.5k vertices,
    0.65 a light ~2k-vertex variant for fast experiments and tests.
    """
    names = [n for n, _, _ in _JOINTS]
    parents = [p for _, p, _ in _JOINTS]
    positions = {n: np.array(p) for n, p, in [(n, p) for n, _, p in _JOINTS]}
    offsets = []
    for name, parent, pos in _JOINTS:
        pos = np.array(pos)
        offsets.append(pos if parent < 0 else pos - np.array(_JOINTS[parent][2]))
    j = {n: i for i, n in enumerate(names)}
    part = {n: PART_NAMES.index(p) for n, p in _JOINT_PART.items()}

    d = density * 1.8  # base counts below are calibrated for density=1.0 ≈ 4.5k verts
    acc = _MeshAccum(len(names))

    # torso: vertical tapered elliptic tube through the spine chain
    torso_keys = [(0.93, 0.142), (1.00, 0.150), (1.10, 0.128), (1.22, 0.134),
                  (1.34, 0.150), (1.44, 0.128), (1.52, 0.092)]
    spine_keys = [(1.00, "root"), (1.10, "spine1"), (1.22, "spine2"),
                  (1.34, "spine3"), (1.50, "neck")]

    def torso_weights(y):
        ys = [k[0] for k in spine_keys]
        if y <= ys[0]:
            return {j["root"]: 1.0}
        if y >= ys[-1]:
            return {j["neck"]: 1.0}
        hi = int(np.searchsorted(ys, y))
        lo = hi - 1
        t = (y - ys[lo]) / (ys[hi] - ys[lo])
        return {j[spine_keys[lo][1]]: 1.0 - t, j[spine_keys[hi][1]]: t}

    t_rings = max(6, round(13 * d))
    t_segs = max(10, round(20 * d))
    torso_rings = []
    ys = np.linspace(0.93, 1.52, t_rings)
    for y in ys:
        r = _radius_profile(torso_keys, y)
        wd = torso_weights(y)
        ring = []
        for s in range(t_segs):
            ang = 2 * np.pi * s / t_segs
            ring.append(acc.add_vertex(
                (np.cos(ang) * r, y, np.sin(ang) * r * 0.62), PART_NAMES.index("torso"), wd))
        torso_rings.append(ring)
    acc.grid(torso_rings)
    top_c = acc.add_vertex((0, 1.54, 0), PART_NAMES.index("torso"), {j["neck"]: 1.0})
    acc.fan(top_c, torso_rings[-1], flip=True)
    bot_c = acc.add_vertex((0, 0.915, 0), PART_NAMES.index("torso"), {j["root"]: 1.0})
    acc.fan(bot_c, torso_rings[0], flip=False)

    # head: closed ellipsoid, lower cap blends into the neck
    h_lat = max(5, round(10 * d))
    h_lon = max(8, round(14 * d))
    center = np.array([0.0, 1.67, 0.0])
    rad = np.array([0.082, 0.105, 0.092])
    head_rings = []
    for li in range(1, h_lat):
        phi = np.pi * li / h_lat - np.pi / 2
        blend = min(1.0, (np.sin(phi) + 1.0) / 0.7)
        wd = {j["head"]: blend, j["neck"]: 1.0 - blend} if blend < 1.0 else {j["head"]: 1.0}
        ring = []
        for s in range(h_lon):
            ang = 2 * np.pi * s / h_lon
            p = center + rad * np.array([np.cos(phi) * np.cos(ang), np.sin(phi), np.cos(phi) * np.sin(ang)])
            ring.append(acc.add_vertex(p, PART_NAMES.index("head"), wd))
        head_rings.append(ring)
    acc.grid(head_rings)
    south = acc.add_vertex(center - rad * np.array([0, 1, 0]), PART_NAMES.index("head"),
                           {j["head"]: 0.4, j["neck"]: 0.6})
    acc.fan(south, head_rings[0], flip=False)
    north = acc.add_vertex(center + rad * np.array([0, 1, 0]), PART_NAMES.index("head"), {j["head"]: 1.0})
    acc.fan(north, head_rings[-1], flip=True)

    # skirt: open flared cone hanging from the waist, skinned to spine1/root
    s_rings = max(5, round(9 * d))
    s_segs = max(12, round(22 * d))
    skirt_rings = []
    for i in range(s_rings):
        t = 1.0 - i / (s_rings - 1)  # hem first so rings advance upward (outward winding)
        y = 1.05 + (0.56 - 1.05) * t
        r = 0.160 + (0.270 - 0.160) * t
        wd = {j["spine1"]: 0.65, j["root"]: 0.35}
        ring = []
        for s in range(s_segs):
            ang = 2 * np.pi * s / s_segs
            ring.append(acc.add_vertex(
                (np.cos(ang) * r, y, np.sin(ang) * r * 0.80), PART_NAMES.index("skirt"), wd))
        skirt_rings.append(ring)
    acc.grid(skirt_rings)

    # limbs: (joint_a, joint_b/point, r0, r1, rings, segs, cross, blend_parent, tip_cap)
    for side in ("l", "r"):
        arm = PART_NAMES.index("left_arm" if side == "l" else "right_arm")
        hand = PART_NAMES.index("left_hand" if side == "l" else "right_hand")
        leg = PART_NAMES.index("left_leg" if side == "l" else "right_leg")
        foot = PART_NAMES.index("left_foot" if side == "l" else "right_foot")
        _limb(acc, positions, j, [
            (f"shoulder_{side}", f"elbow_{side}", 0.047, 0.040, 7, 9, (1, 1), f"clav_{side}", False),
            (f"elbow_{side}", f"wrist_{side}", 0.039, 0.031, 7, 9, (1, 1), f"shoulder_{side}", False),
        ], arm, d)
        _limb(acc, positions, j, [
            (f"wrist_{side}", f"hand_{side}", 0.031, 0.020, 4, 8, (1.0, 0.6), f"elbow_{side}", True),
        ], hand, d)
        _limb(acc, positions, j, [
            (f"hip_{side}", f"knee_{side}", 0.072, 0.055, 9, 11, (1, 1), "root", False),
            (f"knee_{side}", f"ankle_{side}", 0.053, 0.036, 9, 11, (1, 1), f"hip_{side}", False),
        ], leg, d)
        _limb(acc, positions, j, [
            (f"ankle_{side}", f"foot_{side}", 0.036, 0.028, 4, 8, (1.3, 0.8), f"knee_{side}", True),
        ], foot, d)

    verts, tris, labels, weights = acc.finish()
    return Rig(
        joint_names=tuple(names),
        parents=np.array(parents),
        rest_offsets=np.array(offsets),
        template_vertices=verts,
        template_triangles=tris,
        vertex_part_labels=labels,
        part_names=PART_NAMES,
        joint_part_map=np.array([part[n] for n in names]),
        skin_weights=weights,
    )


def build_chain_rig(n_joints: int = 4, bone_length: float = 0.5, rings_per_bone: int = 3,
                    segments: int = 8, radius: float = 0.12) -> Rig:
    """Tiny straight-chain rig with a tube template; used by toy scenes and tests."""
    names = tuple(f"j{i}" for i in range(n_joints))
    parents = np.array([-1] + list(range(n_joints - 1)))
    offsets = np.zeros((n_joints, 3))
    offsets[1:, 1] = bone_length
    part_names = ("background",) + tuple(f"bone{i}" for i in range(n_joints))

    acc = _MeshAccum(n_joints)
    all_rings = []
    total_rings = (n_joints - 1) * rings_per_bone + 1 if n_joints > 1 else rings_per_bone
    length = bone_length * max(n_joints - 1, 1)
    for i in range(total_rings):
        y = length * i / (total_rings - 1)
        bone = min(int(y / bone_length), n_joints - 2) if n_joints > 1 else 0
        t = y / bone_length - bone
        wd = {bone: 1.0 - 0.5 * max(0.0, (t - 0.7) / 0.3)}
        if n_joints > 1 and t > 0.7:
            wd[bone + 1] = 1.0 - wd[bone]
        ring = []
        for s in range(segments):
            ang = 2 * np.pi * s / segments
            ring.append(acc.add_vertex(
                (np.cos(ang) * radius, y, np.sin(ang) * radius), bone + 1, wd))
        all_rings.append(ring)
    acc.grid(all_rings)
    c0 = acc.add_vertex((0, -radius * 0.5, 0), 1, {0: 1.0})
    acc.fan(c0, all_rings[0], flip=False)
    c1 = acc.add_vertex((0, length + radius * 0.5, 0), n_joints, {n_joints - 1: 1.0})
    acc.fan(c1, all_rings[-1], flip=True)

    verts, tris, labels, weights = acc.finish()
    return Rig(
        joint_names=names,
        parents=parents,
        rest_offsets=offsets,
        template_vertices=verts,
        template_triangles=tris,
        vertex_part_labels=labels,
        part_names=part_names,
        joint_part_map=np.arange(1, n_joints + 1, dtype=np.int32),
        skin_weights=weights,
    )
