"""Kinematic vacuum-grasp environment.

A single suction cup descends onto one box per episode. Control is
two-layered: the policy emits pose deltas at 10 Hz, an impedance loop tracks
the integrated target at 100 Hz with the positional error bounded so contact
forces stay finite. The end effector is kinematic: the impedance force maps
to velocity through a virtual admittance (v = F / c_damp) instead of full
rigid-body dynamics.

Actions are 7-dim (position delta, rotation delta as an MRP increment,
gripper command decoded at +-0.5 into activate / inactive / release) and are
expressed in the episode start frame, like every observed vector quantity.

The suction seal succeeds only when the cup footprint lies fully on the top
face, intersects no hole or ridge cell, the cup axis is within the tilt
limit of the face normal, and the cup is in contact. Deformable boxes
(rigidity < 1) can drop the box while airborne.

Force sensing convention: the sensed wrench is tool-on-environment, so
pressing down on a box reads negative Fz (this is what the behavior-tree
trigger listens for).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import boxes as boxmod
from . import geometry as geo
from . import sensing


@dataclass
class EnvConfig:
    # impedance / admittance, translation
    kp: float = 400.0
    kd: float = 20.0
    err_bound: float = 0.03
    c_damp: float = 100.0
    # impedance, rotation (errors as MRP vectors)
    kp_rot: float = 8.0
    kd_rot: float = 0.4
    err_bound_rot: float = 0.2
    c_damp_rot: float = 4.0
    # action scaling per policy step
    dpos_scale: float = 0.005
    drot_scale: float = 0.05
    # suction model
    r_cup: float = 0.015
    tilt_max_deg: float = 15.0
    seal_threshold: float = 0.5
    pressure_ramp_time: float = 0.3
    seal_strength: float = 60.0
    detach_coeff: float = 0.08
    contact_eps: float = 0.002
    # reward coefficients
    r_goal: float = 100.0
    c_step: float = 0.1
    c_pose: float = 2.0
    c_rot: float = 1.0
    pos_tol: float = 0.05
    rot_tol: float = 0.2
    c_act: float = 0.05
    c_grip: float = 0.5
    c_waste: float = 1.0
    # episode
    max_steps: int = 100
    policy_dt: float = 0.1
    n_substeps: int = 10
    goal_lift: float = 0.01
    # reset randomization
    box_jitter_xy: float = 0.005
    box_jitter_yaw: float = np.deg2rad(3.0)
    start_jitter_xy: float = 0.010
    start_jitter_yaw: float = np.deg2rad(10.0)
    start_height: float = 0.04
    # sensing
    force_noise: float = 0.1
    torque_noise: float = 0.01
    depth_noise: float = 0.0


@dataclass
class GripperState:
    pressure: float = 0.0
    gripped: bool = False


@dataclass
class RewardBreakdown:
    goal: float = 0.0
    step: float = 0.0
    pose: float = 0.0
    action: float = 0.0
    suction: float = 0.0

    @property
    def total(self) -> float:
        return self.goal - self.step - self.pose - self.action + self.suction


@dataclass
class Observation:
    rel_pos: np.ndarray  # (3,)
    rel_mrp: np.ndarray  # (3,)
    twist_lin: np.ndarray  # (3,)
    twist_ang: np.ndarray  # (3,)
    force: np.ndarray  # (3,)
    torque: np.ndarray  # (3,)
    pressure: float
    gripped: float
    prev_action: np.ndarray  # (7,)
    depth: Optional[np.ndarray] = None  # (2, 128, 128) float32
    voxel: Optional[np.ndarray] = None  # (50, 50, 40) uint8

    def vec(self, proprio: str = "full") -> np.ndarray:
        """27-dim proprioceptive vector, or the 2-dim gripper slice."""
        if proprio == "gripper_only":
            return np.array([self.pressure, self.gripped], dtype=np.float32)
        return np.concatenate(
            [
                self.rel_pos,
                self.rel_mrp,
                self.twist_lin,
                self.twist_ang,
                self.force,
                self.torque,
                [self.pressure, self.gripped],
                self.prev_action,
            ]
        ).astype(np.float32)


def canonicalize_observation(obs: Observation):
    """Rotate an observation into the x >= 0, y >= 0 quadrant.

    Returns (rotated observation, k). Every vector quantity and the voxel
    grid rotate by the same k * 90 degrees about z; depth images and gripper
    scalars pass through unchanged.
    """
    k = geo.symmetry_index(obs.rel_pos)
    if k == 0:
        return obs, 0
    prev = obs.prev_action
    new_prev = np.concatenate(
        [geo.rotate_z_90(prev[:3], k), geo.rotate_z_90(prev[3:6], k), prev[6:]]
    )
    return (
        replace(
            obs,
            rel_pos=geo.rotate_z_90(obs.rel_pos, k),
            rel_mrp=geo.rotate_z_90(obs.rel_mrp, k),
            twist_lin=geo.rotate_z_90(obs.twist_lin, k),
            twist_ang=geo.rotate_z_90(obs.twist_ang, k),
            force=geo.rotate_z_90(obs.force, k),
            torque=geo.rotate_z_90(obs.torque, k),
            prev_action=new_prev,
            voxel=geo.rotate_grid_z90(obs.voxel, k) if obs.voxel is not None else None,
        ),
        k,
    )


def decanonicalize_action(action: np.ndarray, k: int) -> np.ndarray:
    """Rotate a policy action from the canonical frame back by -k * 90 deg."""
    if k == 0:
        return np.asarray(action, dtype=np.float64).copy()
    action = np.asarray(action, dtype=np.float64)
    dpos, drot = geo.decanonicalize_action_vectors(action[:3], action[3:6], k)
    return np.concatenate([dpos, drot, action[6:]])


def canonicalize_action(action: np.ndarray, k: int) -> np.ndarray:
    """Rotate a start-frame action into the canonical frame (inverse of above)."""
    if k == 0:
        return np.asarray(action, dtype=np.float64).copy()
    action = np.asarray(action, dtype=np.float64)
    return np.concatenate(
        [geo.rotate_z_90(action[:3], k), geo.rotate_z_90(action[3:6], k), action[6:]]
    )


# 3-vector slices of the 27-dim observation vector that rotate under the
# z-symmetry: pose, orientation, twist, force, torque, prev-action deltas
_VEC_ROT_SLICES = (0, 3, 6, 9, 12, 15, 20, 23)


def symmetry_index_of_vec(vec) -> int:
    return geo.symmetry_index(vec[:3])


def canonicalize_vec27(vec, k: int):
    """Apply a k * 90 degree z-rotation to every vector slice of a 27-vec."""
    if k == 0:
        return np.array(vec, copy=True)
    out = np.array(vec, dtype=vec.dtype if hasattr(vec, "dtype") else np.float64, copy=True)
    for s in _VEC_ROT_SLICES:
        out[s : s + 3] = geo.rotate_z_90(out[s : s + 3].astype(np.float64), k)
    return out


def impedance_substep(p_ref, p, v, kp, kd, bound, c_damp, dt):
    """One 100 Hz impedance/admittance tick on a 3-vector channel.

    Error e = p_ref - p is clamped componentwise to |e| <= bound before the
    force law F = kp * e + kd * de/dt (with de/dt = -v between target
    updates); the kinematic plant integrates v = F / c_damp.
    Returns (force, new_p, new_v).
    """
    e = np.clip(p_ref - p, -bound, bound)
    force = kp * e + kd * (-v)
    v_new = force / c_damp
    return force, p + v_new * dt, v_new


def grip_command(raw: float) -> str:
    if raw > 0.5:
        return "activate"
    if raw < -0.5:
        return "release"
    return "inactive"


def suction_attempt(cup_pos, cup_quat, box, box_pos, box_yaw, in_contact, config=None):
    """Pure seal check; returns the steady-state GripperState of the attempt.

    Success requires: footprint of radius r_cup fully on the top face, no
    hole/ridge cell intersecting the footprint, cup-axis tilt from the face
    normal under the limit, and contact.
    """
    cfg = config or EnvConfig()
    ok = in_contact and _seal_geometry_ok(cup_pos, cup_quat, box, box_pos, box_yaw, cfg)
    if ok:
        return GripperState(pressure=1.0, gripped=True)
    return GripperState(pressure=0.0, gripped=False)


def _box_frame_xy(box_pos, box_yaw, world_xy):
    c, s = np.cos(box_yaw), np.sin(box_yaw)
    dx = world_xy[0] - box_pos[0]
    dy = world_xy[1] - box_pos[1]
    return np.array([c * dx + s * dy, -s * dx + c * dy])


def _cell_rect_hits(box, uv, radius):
    """Mask of surface cells whose 5 mm rect intersects the footprint disc."""
    nu, nv = box.surface.shape
    hx, hy = box.half_extents[:2]
    cu = -hx + (np.arange(nu) + 0.5) * boxmod.CELL_SIZE
    cv = -hy + (np.arange(nv) + 0.5) * boxmod.CELL_SIZE
    du = np.maximum(np.abs(uv[0] - cu) - boxmod.CELL_SIZE / 2.0, 0.0)
    dv = np.maximum(np.abs(uv[1] - cv) - boxmod.CELL_SIZE / 2.0, 0.0)
    return du[:, None] ** 2 + dv[None, :] ** 2 <= radius**2


def _seal_geometry_ok(cup_pos, cup_quat, box, box_pos, box_yaw, cfg):
    hx, hy = box.half_extents[:2]
    uv = _box_frame_xy(box_pos, box_yaw, cup_pos[:2])
    if abs(uv[0]) + cfg.r_cup > hx or abs(uv[1]) + cfg.r_cup > hy:
        return False
    hits = _cell_rect_hits(box, uv, cfg.r_cup)
    flags = box.surface[hits]
    if np.isin(flags, (boxmod.HOLE, boxmod.RIDGE)).any():
        return False
    # cup axis vs face normal
    down = geo.quat_rotate(cup_quat, np.array([0.0, 0.0, -1.0]))
    tilt = np.deg2rad(box.tilt_deg)
    n_local = np.array([0.0, -np.sin(tilt), np.cos(tilt)])
    c, s = np.cos(box_yaw), np.sin(box_yaw)
    n_world = np.array(
        [c * n_local[0] - s * n_local[1], s * n_local[0] + c * n_local[1], n_local[2]]
    )
    cos_ang = float(np.clip(-down @ n_world, -1.0, 1.0))
    return np.degrees(np.arccos(cos_ang)) < cfg.tilt_max_deg

_OFFSET_TABLE = np.array(
    [boxmod.CELL_OFFSET[c] for c in (boxmod.SMOOTH, boxmod.HOLE, boxmod.RIDGE, boxmod.CONCAVE)]
)


def surface_height_local(box, u, v):
    """Top-face height above the table at box-frame (u, v), with cell offsets."""
    base = box.top_z + np.tan(np.deg2rad(box.tilt_deg)) * v
    cell = box.cell_index(u, v)
    off = boxmod.CELL_OFFSET[int(box.surface[cell])] if cell is not None else 0.0
    return base + off


def _surface_height_grid(box):
    """(nu, nv) array of cell heights above the table for a resting box."""
    nu, nv = box.surface.shape
    hy = box.half_extents[1]
    cv = -hy + (np.arange(nv) + 0.5) * boxmod.CELL_SIZE
    tilt = np.tan(np.deg2rad(box.tilt_deg))
    return box.top_z + tilt * cv[None, :] + _OFFSET_TABLE[box.surface]


def compute_reward(cfg, *, goal, rel_pos, rel_mrp, action, prev_action,
                   gripped_now, waste_event):
    """Shaped reward; total = goal - step - pose - action + suction."""
    pose = cfg.c_pose * max(0.0, float(np.linalg.norm(rel_pos)) - cfg.pos_tol)
    pose += cfg.c_rot * max(0.0, float(np.linalg.norm(rel_mrp)) - cfg.rot_tol)
    act = cfg.c_act * (
        float(np.linalg.norm(action)) + float(np.linalg.norm(action - prev_action))
    )
    suction = 0.0
    if gripped_now:
        suction += cfg.c_grip
    if waste_event:
        suction -= cfg.c_waste
    return RewardBreakdown(
        goal=cfg.r_goal if goal else 0.0,
        step=cfg.c_step,
        pose=pose,
        action=act,
        suction=suction,
    )


class PickEnv:
    """Gym-style environment; observe in {"proprio", "depth", "voxel", "both"}.

    One instance is single-threaded; run several instances for parallel
    rollouts, each with its own seed.
    """

    def __init__(self, scenario, set_name="seen", observe="proprio",
                 config: EnvConfig | None = None):
        if isinstance(scenario, (str, bytes)) or hasattr(scenario, "__fspath__"):
            scenario = boxmod.load_scenario(scenario)
        self.sets = scenario
        self.default_set = set_name
        self.observe = observe
        self.cfg = config or EnvConfig()
        self.rig = sensing.CameraRig.default()
        self.grid_spec = sensing.GridSpec()
        self._cup_stamp = sensing.cup_stamp_indices(self.grid_spec, self.cfg.r_cup)
        self._finished = True
        self._rng = np.random.default_rng(0)

    # -- episode control ----------------------------------------------------

    def reset(self, seed, scenario=None):
        set_name = scenario or self.default_set
        if set_name not in self.sets:
            raise ValueError(f"unknown scenario set {set_name!r}")
        pool = self.sets[set_name]
        if not pool:
            raise ValueError(f"scenario set {set_name!r} is empty")
        self._rng = np.random.default_rng(seed)
        rng = self._rng
        self.box_index = int(rng.integers(len(pool)))
        self.box = pool[self.box_index]
        cfg = self.cfg

        jit = rng.uniform(-cfg.box_jitter_xy, cfg.box_jitter_xy, 2)
        self.box_pos = np.array(
            [self.box.base_xy[0] + jit[0], self.box.base_xy[1] + jit[1],
             self.box.half_extents[2]]
        )
        self.box_yaw = self.box.base_yaw + rng.uniform(
            -cfg.box_jitter_yaw, cfg.box_jitter_yaw
        )
        self.box_rest_z = float(self.box.half_extents[2])
        self._heights = _surface_height_grid(self.box)

        # start pose targets the box's *nominal* location (estimate error)
        sxy = self.box.base_xy + rng.uniform(-cfg.start_jitter_xy, cfg.start_jitter_xy, 2)
        syaw = (
            self.box.base_yaw
            + self.box.start_yaw
            + rng.uniform(-cfg.start_jitter_yaw, cfg.start_jitter_yaw)
        )
        sz = self.box.top_z + cfg.start_height
        self.p_start = np.array([sxy[0], sxy[1], sz])
        self.q_start = geo.quat_from_axis_angle(np.array([0.0, 0.0, 1.0]), syaw)
        self.R_start = geo.quat_to_matrix(self.q_start)

        self.p = self.p_start.copy()
        self.q = self.q_start.copy()
        self.v = np.zeros(3)
        self.w = np.zeros(3)
        self.p_ref = self.p.copy()
        self.q_ref = self.q.copy()
        self.sealed = False
        self.pressure = 0.0
        self.gripped = False
        self.grasp_off = np.zeros(3)
        self.grasp_yaw_off = 0.0
        self.prev_action = np.zeros(7)
        self.contact = False
        self.contact_force_z = 0.0
        self.step_idx = 0
        self._finished = False
        return self._observation()

    def step(self, action):
        if self._finished:
            raise RuntimeError("episode finished; call reset() first")
        cfg = self.cfg
        a = np.clip(np.asarray(action, dtype=np.float64), -1.0, 1.0)
        cmd = grip_command(a[6])

        # integrate the target pose in the start frame
        self.p_ref = self.p_ref + self.R_start @ (a[:3] * cfg.dpos_scale)
        self.p_ref = np.clip(self.p_ref, self.p_start - 0.25, self.p_start + 0.25)
        sig_d = a[3:6] * cfg.drot_scale
        n = np.linalg.norm(sig_d)
        if n > 1e-12:
            angle = 4.0 * np.arctan(n)
            axis = self.R_start @ (sig_d / n)
            self.q_ref = geo.quat_multiply(geo.quat_from_axis_angle(axis, angle), self.q_ref)
            # keep the target within 60 degrees of the start orientation
            sig_rel = geo.mrp_from_quaternion(
                geo.quat_multiply(geo.quat_conjugate(self.q_start), self.q_ref)
            )
            max_sig = np.tan(np.deg2rad(60.0) / 4.0)
            nr = np.linalg.norm(sig_rel)
            if nr > max_sig:
                sig_rel = sig_rel * (max_sig / nr)
                self.q_ref = geo.quat_multiply(
                    self.q_start, geo.mrp_to_quaternion(sig_rel)
                )
            self.q_ref = self.q_ref / np.linalg.norm(self.q_ref)

        dt = cfg.policy_dt / cfg.n_substeps
        for _ in range(cfg.n_substeps):
            self._substep(dt)

        waste = False
        if cmd == "release":
            self._release_box()
        elif cmd == "activate":
            if not self.sealed:
                self.sealed = self._try_seal()
                waste = not self.sealed
        # pressure dynamics at policy rate
        ramp = cfg.policy_dt / cfg.pressure_ramp_time
        if self.sealed:
            self.pressure = min(1.0, self.pressure + ramp)
        else:
            self.pressure = max(0.0, self.pressure - 3.0 * ramp)
        if self.sealed and not self.gripped and self.pressure > cfg.seal_threshold:
            self._attach_box()
        if self.sealed and not self.gripped and not self._seal_holds():
            self.sealed = False
        if self.gripped:
            self._maybe_detach()

        obs_rel_pos = self.R_start.T @ (self.p - self.p_start)
        rel_mrp = geo.mrp_from_quaternion(
            geo.quat_multiply(geo.quat_conjugate(self.q_start), self.q)
        )
        box_airborne = self.box_pos[2] > self.box_rest_z + 1e-9
        goal = bool(self.gripped and box_airborne and obs_rel_pos[2] >= cfg.goal_lift)

        reward = compute_reward(
            cfg,
            goal=goal,
            rel_pos=obs_rel_pos,
            rel_mrp=rel_mrp,
            action=a,
            prev_action=self.prev_action,
            gripped_now=self.gripped,
            waste_event=waste,
        )
        self.prev_action = a
        self.step_idx += 1
        terminated = goal
        truncated = bool(not terminated and self.step_idx >= cfg.max_steps)
        self._finished = terminated or truncated
        return self._observation(), reward, terminated, truncated

    # -- internals ----------------------------------------------------------

    def _substep(self, dt):
        cfg = self.cfg
        f_cmd, p_new, v_new = impedance_substep(
            self.p_ref, self.p, self.v, cfg.kp, cfg.kd, cfg.err_bound, cfg.c_damp, dt
        )
        self.p, self.v = p_new, v_new

        sig_err = geo.mrp_from_quaternion(
            geo.quat_multiply(self.q_ref, geo.quat_conjugate(self.q))
        )
        sig_err = np.clip(sig_err, -cfg.err_bound_rot, cfg.err_bound_rot)
        tau = cfg.kp_rot * sig_err + cfg.kd_rot * (-self.w)
        self.w = tau / cfg.c_damp_rot
        wn = np.linalg.norm(self.w)
        if wn > 1e-12:
            dq = geo.quat_from_axis_angle(self.w / wn, wn * dt)
            self.q = geo.quat_multiply(dq, self.q)
            self.q = self.q / np.linalg.norm(self.q)

        # contact with table / ungripped box; a gripped cup bottoms out when
        # the held box is pressed onto the table
        self.contact = False
        self.contact_force_z = 0.0
        floor = 0.0
        if self.gripped:
            floor = max(floor, self.box_rest_z - self.grasp_off[2])
        else:
            h_box = self._box_support_height(self.p[:2])
            if h_box is not None:
                floor = max(floor, h_box)
        if self.p[2] < floor:
            self.p[2] = floor
            self.contact = True
            if f_cmd[2] < 0.0:
                self.contact_force_z = f_cmd[2]
            if self.v[2] < 0.0:
                self.v[2] = 0.0

        if self.gripped:
            self._follow_box()

    def _box_support_height(self, world_xy):
        """Highest surface point under the cup footprint, or None if off-box."""
        box = self.box
        uv = _box_frame_xy(self.box_pos, self.box_yaw, world_xy)
        hx, hy = box.half_extents[:2]
        if abs(uv[0]) > hx + self.cfg.r_cup or abs(uv[1]) > hy + self.cfg.r_cup:
            return None
        hits = _cell_rect_hits(box, uv, self.cfg.r_cup)
        if not hits.any():
            if abs(uv[0]) <= hx and abs(uv[1]) <= hy:
                return float(surface_height_local(box, uv[0], uv[1]))
            return None
        base = self.box_pos[2] - self.box_rest_z  # lift offset (0 while resting)
        return float(self._heights[hits].max()) + base

    def _try_seal(self):
        h = self._box_support_height(self.p[:2])
        in_contact = bool(
            self.contact and h is not None and self.p[2] <= h + self.cfg.contact_eps
        )
        state = suction_attempt(
            self.p, self.q, self.box, self.box_pos, self.box_yaw, in_contact, self.cfg
        )
        return state.gripped

    def _seal_holds(self):
        """A seal that has not yet reached grip pressure needs sustained contact."""
        return self.contact and _seal_geometry_ok(
            self.p, self.q, self.box, self.box_pos, self.box_yaw, self.cfg
        )

    def _attach_box(self):
        self.gripped = True
        R = geo.quat_to_matrix(self.q)
        self.grasp_off = R.T @ (self.box_pos - self.p)
        self.grasp_yaw_off = self.box_yaw - self._cup_yaw()

    def _follow_box(self):
        R = geo.quat_to_matrix(self.q)
        pos = self.p + R @ self.grasp_off
        pos[2] = max(pos[2], self.box_rest_z)  # table holds the box up
        self.box_pos = pos
        self.box_yaw = self._cup_yaw() + self.grasp_yaw_off

    def _cup_yaw(self):
        R = geo.quat_to_matrix(self.q)
        return float(np.arctan2(R[1, 0], R[0, 0]))

    def _release_box(self):
        self.sealed = False
        self.pressure = 0.0
        if self.gripped:
            self.gripped = False
            self.box_pos = np.array([self.box_pos[0], self.box_pos[1], self.box_rest_z])

    def _maybe_detach(self):
        cfg = self.cfg
        airborne = self.box_pos[2] > self.box_rest_z + 1e-9
        if not airborne:
            return
        load = self.box.mass * 9.81
        strength = cfg.seal_strength * (0.25 + 0.75 * self.box.rigidity)
        p_drop = cfg.detach_coeff * (1.0 - self.box.rigidity)
        if load > strength or (p_drop > 0.0 and self._rng.uniform() < p_drop):
            self._release_box()

    # -- observation --------------------------------------------------------

    def _observation(self):
        cfg = self.cfg
        rel_pos = self.R_start.T @ (self.p - self.p_start)
        rel_mrp = geo.mrp_from_quaternion(
            geo.quat_multiply(geo.quat_conjugate(self.q_start), self.q)
        )
        twist_lin = self.R_start.T @ self.v
        twist_ang = self.R_start.T @ self.w

        f_world = np.array([0.0, 0.0, self.contact_force_z])
        t_world = np.zeros(3)
        box_airborne = self.box_pos[2] > self.box_rest_z + 1e-9
        if self.gripped and box_airborne:
            hold = self.box.mass * 9.81
            f_world = f_world + np.array([0.0, 0.0, hold])
            r_off = geo.quat_to_matrix(self.q) @ self.grasp_off
            t_world = np.cross(r_off, np.array([0.0, 0.0, hold]))
        force = self.R_start.T @ f_world + self._rng.normal(0.0, cfg.force_noise, 3)
        torque = self.R_start.T @ t_world + self._rng.normal(0.0, cfg.torque_noise, 3)

        depth = None
        voxel = None
        if self.observe in ("depth", "voxel", "both"):
            scene = sensing.Scene(
                box=self.box, box_pos=self.box_pos.copy(), box_yaw=self.box_yaw
            )
            R_cup = geo.quat_to_matrix(self.q)
            images = sensing.render_rig(
                self.rig, self.p, R_cup, scene,
                noise_sigma=cfg.depth_noise, rng=self._rng,
            )
            if self.observe in ("depth", "both"):
                depth = np.stack(images).astype(np.float32)
            if self.observe in ("voxel", "both"):
                points = sensing.fuse_point_clouds(images[0], images[1], self.rig)
                voxel = sensing.voxelize(points, self.grid_spec)
                voxel[self._cup_stamp] = 1

        return Observation(
            rel_pos=rel_pos,
            rel_mrp=rel_mrp,
            twist_lin=twist_lin,
            twist_ang=twist_ang,
            force=force,
            torque=torque,
            pressure=float(self.pressure),
            gripped=float(self.gripped),
            prev_action=self.prev_action.copy(),
            depth=depth,
            voxel=voxel,
        )

    # -- checkpoint support ---------------------------------------------------

    def get_state(self):
        return {
            "box_index": self.box_index,
            "set_name": self.box.set_name,
            "box_pos": self.box_pos.copy(),
            "box_yaw": self.box_yaw,
            "box_rest_z": self.box_rest_z,
            "p_start": self.p_start.copy(),
            "q_start": self.q_start.copy(),
            "p": self.p.copy(),
            "q": self.q.copy(),
            "v": self.v.copy(),
            "w": self.w.copy(),
            "p_ref": self.p_ref.copy(),
            "q_ref": self.q_ref.copy(),
            "sealed": self.sealed,
            "pressure": self.pressure,
            "gripped": self.gripped,
            "grasp_off": self.grasp_off.copy(),
            "grasp_yaw_off": self.grasp_yaw_off,
            "prev_action": self.prev_action.copy(),
            "contact": self.contact,
            "contact_force_z": self.contact_force_z,
            "step_idx": self.step_idx,
            "finished": self._finished,
            "rng_state": self._rng.bit_generator.state,
        }

    def set_state(self, state):
        self.box_index = int(state["box_index"])
        self.box = self.sets[state["set_name"]][self.box_index]
        self._heights = _surface_height_grid(self.box)
        self.box_pos = np.array(state["box_pos"])
        self.box_yaw = float(state["box_yaw"])
        self.box_rest_z = float(state["box_rest_z"])
        self.p_start = np.array(state["p_start"])
        self.q_start = np.array(state["q_start"])
        self.R_start = geo.quat_to_matrix(self.q_start)
        self.p = np.array(state["p"])
        self.q = np.array(state["q"])
        self.v = np.array(state["v"])
        self.w = np.array(state["w"])
        self.p_ref = np.array(state["p_ref"])
        self.q_ref = np.array(state["q_ref"])
        self.sealed = bool(state["sealed"])
        self.pressure = float(state["pressure"])
        self.gripped = bool(state["gripped"])
        self.grasp_off = np.array(state["grasp_off"])
        self.grasp_yaw_off = float(state["grasp_yaw_off"])
        self.prev_action = np.array(state["prev_action"])
        self.contact = bool(state["contact"])
        self.contact_force_z = float(state["contact_force_z"])
        self.step_idx = int(state["step_idx"])
        self._finished = bool(state["finished"])
        self._rng = np.random.default_rng()
        self._rng.bit_generator.state = state["rng_state"]
