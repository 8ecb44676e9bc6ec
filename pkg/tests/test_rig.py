"""Tests for the skeleton: FK, LBS, ring graph, rig/pose serialization."""

import json

import numpy as np
import pytest

from splatar import rig as rigmod
from splatar import transforms as tf
from splatar.errors import DataError
from splatar.rig import Pose, build_chain_rig, build_default_rig, build_ring_graph


def random_pose(rig, rng, scale=0.8, translation=0.3):
    quats = tf.axis_angle_to_quat(rng.normal(size=(rig.n_joints, 3)) * scale)
    return Pose(rng.normal(size=3) * translation, quats)


def compose_transforms_oracle(rig, pose):
    """Brute-force 4x4 homogeneous matrix composition, written independently."""
    J = rig.n_joints
    mats = np.zeros((J, 4, 4))
    for jj in range(J):
        local = np.eye(4)
        local[:3, :3] = tf.quat_to_matrix(pose.joint_rotations[jj])
        lift = np.eye(4)
        lift[:3, 3] = rig.rest_offsets[jj]
        if jj == 0:
            lift[:3, 3] = lift[:3, 3] + pose.root_translation
            mats[jj] = lift @ local
        else:
            mats[jj] = mats[rig.parents[jj]] @ lift @ local
    return mats


class TestForwardKinematics:
    def test_identity_pose_is_rest_pose_bitwise(self):
        rig = build_chain_rig(5)
        rot, pos = rigmod.forward_kinematics(rig, Pose.identity(rig))
        assert np.array_equal(pos, rig.rest_positions)
        assert np.array_equal(rot, np.tile(np.eye(3), (rig.n_joints, 1, 1)))

    def test_root_rotation_rotates_all_joints(self):
        rig = build_chain_rig(5)
        quats = tf.quat_identity(rig.n_joints)
        quats[0] = tf.axis_angle_to_quat(np.array([0.0, 0.0, np.pi / 2]))
        _, pos = rigmod.forward_kinematics(rig, Pose(np.zeros(3), quats))
        root = rig.rest_positions[0]
        Rz = tf.rotation_about([0, 0, 1], np.pi / 2)
        expect = (rig.rest_positions - root) @ Rz.T + root
        np.testing.assert_allclose(pos, expect, atol=1e-12)

    def test_matches_matrix_composition_oracle(self):
        rig = build_chain_rig(5)
        rng = np.random.default_rng(7)
        for _ in range(5):
            pose = random_pose(rig, rng)
            rot, pos = rigmod.forward_kinematics(rig, pose)
            mats = compose_transforms_oracle(rig, pose)
            np.testing.assert_allclose(rot, mats[:, :3, :3], atol=1e-12)
            np.testing.assert_allclose(pos, mats[:, :3, 3], atol=1e-12)

    def test_joint_count_mismatch(self):
        rig = build_chain_rig(4)
        bad = Pose(np.zeros(3), tf.quat_identity(3))
        with pytest.raises(DataError, match="joints"):
            rigmod.forward_kinematics(rig, bad)

    def test_non_unit_quaternion_rejected(self):
        rig = build_chain_rig(3)
        q = tf.quat_identity(3)
        q[1] *= 1.01
        with pytest.raises(DataError, match="unit"):
            rigmod.forward_kinematics(rig, Pose(np.zeros(3), q))


class TestLBS:
    def test_identity_is_exact(self):
        rig = build_chain_rig(4)
        pts = rig.template_vertices
        out = rigmod.lbs_transform_points(rig, Pose.identity(rig), pts, rig.skin_weights)
        np.testing.assert_allclose(out, pts, atol=1e-12)

    def test_single_joint_translation_moves_point(self):
        rig = build_chain_rig(3)
        pose = Pose(np.array([0.3, -0.2, 0.9]), tf.quat_identity(3))
        w = np.zeros((1, 3))
        w[0, 0] = 1.0  # fully bound to the root; root carries the translation
        pt = np.array([[0.1, 0.2, 0.3]])
        out = rigmod.lbs_transform_points(rig, pose, pt, w)
        np.testing.assert_allclose(out, pt + pose.root_translation, atol=1e-12)

    def test_half_weights_give_midpoint(self):
        rig = build_chain_rig(3)
        rng = np.random.default_rng(3)
        pose = random_pose(rig, rng)
        pt = np.array([[0.2, 0.6, -0.1]])
        w_a = np.array([[1.0, 0.0, 0.0]])
        w_b = np.array([[0.0, 1.0, 0.0]])
        w_mix = np.array([[0.5, 0.5, 0.0]])
        a = rigmod.lbs_transform_points(rig, pose, pt, w_a)
        b = rigmod.lbs_transform_points(rig, pose, pt, w_b)
        mix = rigmod.lbs_transform_points(rig, pose, pt, w_mix)
        np.testing.assert_allclose(mix, 0.5 * (a + b), atol=1e-12)

    def test_rigid_motion_equivariance(self):
        rig = build_chain_rig(5)
        rng = np.random.default_rng(11)
        pose = random_pose(rig, rng)
        pts = rig.template_vertices[::7]
        w = rig.skin_weights[::7]
        posed = rigmod.lbs_transform_points(rig, pose, pts, w)

        # rigidly move the world by rotating the root and shifting the translation
        R_extra = tf.rotation_about([0.3, 1.0, -0.2], 0.7)
        q_extra = tf.axis_angle_to_quat(np.array([0.3, 1.0, -0.2]) / np.linalg.norm([0.3, 1.0, -0.2]) * 0.7)
        quats2 = pose.joint_rotations.copy()
        quats2[0] = tf.quat_mul(q_extra, quats2[0])
        root_rest = rig.rest_positions[0]
        # world transform: x -> R (x - root_rest) + root_rest + t_extra
        t_extra = np.array([0.4, -0.1, 0.2])
        pose2 = Pose(
            R_extra @ (pose.root_translation + root_rest - root_rest) + t_extra + R_extra @ root_rest - root_rest,
            quats2,
        )
        posed2 = rigmod.lbs_transform_points(rig, pose2, pts, w)
        moved = (posed - root_rest) @ R_extra.T + root_rest + t_extra
        np.testing.assert_allclose(posed2, moved, atol=1e-10)

    def test_unnormalized_weights_rejected(self):
        rig = build_chain_rig(3)
        w = np.array([[0.6, 0.3, 0.0]])
        with pytest.raises(DataError, match="sum to 1"):
            rigmod.lbs_transform_points(rig, Pose.identity(rig), np.zeros((1, 3)), w)

    def test_nan_points_rejected(self):
        rig = build_chain_rig(3)
        w = np.array([[1.0, 0.0, 0.0]])
        with pytest.raises(DataError, match="NaN"):
            rigmod.lbs_transform_points(rig, Pose.identity(rig), np.array([[np.nan, 0, 0]]), w)


class TestLBSNormals:
    def test_identity_preserves_normals(self):
        rig = build_chain_rig(4)
        n = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
        w = np.zeros((2, 4))
        w[:, 1] = 1.0
        out = rigmod.lbs_transform_normals(rig, Pose.identity(rig), n, w)
        np.testing.assert_allclose(out, n, atol=1e-12)

    def test_single_joint_rotation_rotates_normal(self):
        rig = build_chain_rig(3)
        quats = tf.quat_identity(3)
        quats[0] = tf.axis_angle_to_quat(np.array([0.0, 0.0, np.pi / 2]))
        w = np.array([[1.0, 0.0, 0.0]])
        out = rigmod.lbs_transform_normals(rig, Pose(np.zeros(3), quats), np.array([[1.0, 0, 0]]), w)
        np.testing.assert_allclose(out, [[0.0, 1.0, 0.0]], atol=1e-12)

    def test_blended_matches_normalize_oracle(self):
        rig = build_chain_rig(4)
        rng = np.random.default_rng(5)
        pose = random_pose(rig, rng)
        rot, _ = rigmod.forward_kinematics(rig, pose)
        n = np.array([[0.3, 0.5, -0.8]])
        n /= np.linalg.norm(n)
        w = np.array([[0.2, 0.5, 0.3, 0.0]])
        blended = sum(w[0, j] * rot[j] @ n[0] for j in range(4))
        expect = blended / np.linalg.norm(blended)
        out = rigmod.lbs_transform_normals(rig, pose, n, w)
        np.testing.assert_allclose(out, [expect], atol=1e-12)

    def test_zero_length_normal_rejected(self):
        rig = build_chain_rig(3)
        w = np.array([[1.0, 0.0, 0.0]])
        with pytest.raises(DataError, match="zero-length"):
            rigmod.lbs_transform_normals(rig, Pose.identity(rig), np.zeros((1, 3)), w)


class TestRingGraph:
    def test_k0_is_self_only(self):
        rig = build_chain_rig(5)
        g = build_ring_graph(rig, 0)
        np.testing.assert_array_equal(g.member, np.eye(5, dtype=bool))

    def test_chain_k1(self):
        rig = build_chain_rig(5)
        g = build_ring_graph(rig, 1)
        assert set(g.ring(2)) == {1, 2, 3}

    def test_symmetry_and_self_membership(self):
        rig = build_default_rig(0.42)
        g = build_ring_graph(rig, 3)
        assert np.array_equal(g.member, g.member.T)
        assert g.member.diagonal().all()

    def test_monotone_in_k(self):
        rig = build_default_rig(0.42)
        prev = build_ring_graph(rig, 0).member
        for k in range(1, 6):
            cur = build_ring_graph(rig, k).member
            assert np.all(prev <= cur)
            prev = cur

    def test_default_k4_matches_floyd_warshall_oracle(self):
        rig = build_default_rig(0.42)
        J = rig.n_joints
        dist = np.full((J, J), 1e9)
        np.fill_diagonal(dist, 0)
        for j in range(1, J):
            p = rig.parents[j]
            dist[j, p] = dist[p, j] = 1
        for m in range(J):
            for a in range(J):
                for b in range(J):
                    if dist[a, m] + dist[m, b] < dist[a, b]:
                        dist[a, b] = dist[a, m] + dist[m, b]
        g = build_ring_graph(rig, 4)
        np.testing.assert_array_equal(g.member, dist <= 4)

    def test_negative_k_rejected(self):
        with pytest.raises(DataError):
            build_ring_graph(build_chain_rig(3), -1)


class TestFKBackward:
    def test_fk_backward_matches_finite_differences(self):
        rig = build_chain_rig(5)
        rng = np.random.default_rng(13)
        base = random_pose(rig, rng)
        d_rot = rng.normal(size=(5, 3, 3))
        d_pos = rng.normal(size=(5, 3))

        def value(quats, root_t):
            fk = rigmod.fk_forward(rig, quats, root_t)
            return (fk.rot_world * d_rot).sum() + (fk.pos_world * d_pos).sum()

        fk = rigmod.fk_forward(rig, base.joint_rotations, base.root_translation)
        d_local, d_root = rigmod.fk_backward(rig, fk, d_rot.copy(), d_pos.copy())
        d_quat = tf.matrix_backward_to_quat(base.joint_rotations, d_local)

        h = 1e-6
        for j in range(5):
            for c in range(4):
                qp = base.joint_rotations.copy()
                qm = base.joint_rotations.copy()
                qp[j, c] += h
                qm[j, c] -= h
                fd = (value(qp, base.root_translation) - value(qm, base.root_translation)) / (2 * h)
                assert abs(fd - d_quat[j, c]) < 1e-5 * max(1.0, abs(fd))
        for c in range(3):
            tp = base.root_translation.copy()
            tm = base.root_translation.copy()
            tp[c] += h
            tm[c] -= h
            fd = (value(base.joint_rotations, tp) - value(base.joint_rotations, tm)) / (2 * h)
            assert abs(fd - d_root[c]) < 1e-6 * max(1.0, abs(fd))


class TestRigSerialization:
    def test_roundtrip_preserves_hash_and_arrays(self, tmp_path):
        rig = build_default_rig(0.42)
        path = tmp_path / "rig.json"
        rig.save(path)
        rig2 = rigmod.Rig.load(path)
        assert rig.content_hash() == rig2.content_hash()
        assert np.array_equal(rig.template_vertices, rig2.template_vertices)
        assert np.array_equal(rig.skin_weights, rig2.skin_weights)

    def test_bad_version_rejected(self, tmp_path):
        rig = build_chain_rig(3)
        d = rig.to_json_dict()
        d["version"] = 99
        path = tmp_path / "rig.json"
        path.write_text(json.dumps(d))
        with pytest.raises(DataError, match="version"):
            rigmod.Rig.load(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="not found"):
            rigmod.Rig.load(tmp_path / "nope.json")

    def test_degenerate_triangle_rejected(self):
        rig = build_chain_rig(3)
        tris = rig.template_triangles.copy()
        tris[0] = [0, 0, 1]
        with pytest.raises(DataError, match="degenerate"):
            rigmod.Rig(
                joint_names=rig.joint_names,
                parents=rig.parents.copy(),
                rest_offsets=rig.rest_offsets.copy(),
                template_vertices=rig.template_vertices.copy(),
                template_triangles=tris,
                vertex_part_labels=rig.vertex_part_labels.copy(),
                part_names=rig.part_names,
                joint_part_map=rig.joint_part_map.copy(),
                skin_weights=rig.skin_weights.copy(),
            )

    def test_pose_sequence_roundtrip(self, tmp_path):
        rig = build_chain_rig(4)
        rng = np.random.default_rng(2)
        poses = [random_pose(rig, rng) for _ in range(3)]
        path = tmp_path / "poses.jsonl"
        rigmod.save_pose_sequence(poses, path)
        loaded = rigmod.load_pose_sequence(path)
        assert len(loaded) == 3
        for a, b in zip(poses, loaded):
            np.testing.assert_allclose(a.joint_rotations, b.joint_rotations)
            np.testing.assert_allclose(a.root_translation, b.root_translation)


class TestDefaultRig:
    def test_size_and_invariants(self):
        rig = build_default_rig(1.0)
        assert 4000 <= rig.n_vertices <= 8000
        assert rig.n_joints == 24
        sums = rig.skin_weights.sum(axis=1)
        np.testing.assert_allclose(sums, 1.0, atol=1e-9)

    def test_skirt_sees_shoulders_within_four_rings(self):
        # the loose skirt hangs from the waist, so arm pose must be visible
        # to its gaussians under the default 4-ring mask
        rig = build_default_rig(0.42)
        g = build_ring_graph(rig, 4)
        skirt = rig.vertex_part_labels == rig.part_id("skirt")
        dom = rig.skin_weights[skirt].argmax(axis=1)
        for side in ("shoulder_l", "shoulder_r"):
            sj = rig.joint_index(side)
            assert g.member[dom, sj].all()

    def test_deterministic_build(self):
        a = build_default_rig(0.42)
        b = build_default_rig(0.42)
        assert a.content_hash() == b.content_hash()
