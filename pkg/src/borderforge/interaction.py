"""Human-robot-environment interaction: the four-state session machine driven
by the five commands, a velocity-limited simulated robot with a front camera,
auto-dispatch on stationary detections, per-state timing and atomic save."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from .extraction import ExtractionError, ExtractionParams, extract_border_with_report
from .geometry import Point2, Pose2, distance, normalize_angle
from .gridmap import OccupancyGrid, SeedPlacementError, cell_to_world, integrate_border
from .perception import (
    CameraIntrinsics,
    CameraKind,
    CameraModel,
    camera_pose,
    simulate_detection,
)
from .planner import GridNav


class SessionState(Enum):
    DEFAULT = "default"
    BORDER = "border"
    SEED = "seed"
    GUIDE = "guide"


class Command(Enum):
    DEFINE_BORDER = "define_border"
    DEFINE_SEED = "define_seed"
    GUIDE_ROBOT = "guide_robot"
    SAVE = "save"
    CANCEL = "cancel"


_COMMAND_TARGET_STATE = {
    Command.DEFINE_BORDER: SessionState.BORDER,
    Command.DEFINE_SEED: SessionState.SEED,
    Command.GUIDE_ROBOT: SessionState.GUIDE,
}


class Mode(Enum):
    ROBOT_ONLY = "robot-only"
    NRS = "nrs"


@dataclass(frozen=True)
class Event:
    seq: int
    kind: str
    payload: dict
    timestamp: float

    def to_record(self) -> dict:
        return {
            "seq": self.seq,
            "kind": self.kind,
            "payload": self.payload,
            "sim_time": self.timestamp,
        }


STATE_CHANGED = "StateChanged"
SPOT_DETECTED = "SpotDetected"
ROBOT_DISPATCHED = "RobotDispatched"
BORDER_SAVED = "BorderSaved"
CANCELLED = "Cancelled"
ERROR = "Error"


@dataclass(frozen=True)
class CameraMount:
    """Front camera rigidly attached to the robot base."""

    height: float = 0.30
    forward: float = 0.08
    pitch: float = math.radians(30.0)
    intrinsics: CameraIntrinsics = CameraIntrinsics(
        fx=525.0, fy=525.0, cx=320.0, cy=240.0, width=640, height=480
    )
    frame_rate: float = 25.0


@dataclass
class RobotSim:
    """Differential-drive stand-in: bounded linear and angular speed, path
    following for dispatch, spot following for visual servoing, and an
    explicit rotate-in-place control (the baseline's push-button rotation)."""

    pose: Pose2
    v_max: float = 0.2
    omega_max: float = 0.5
    mount: CameraMount = field(default_factory=CameraMount)
    dispatch_target: Point2 | None = None
    follow_target: Point2 | None = None
    rotate_target: Point2 | None = None
    follow_standoff: float = 0.5
    _path: tuple[Point2, ...] | None = None
    _path_pos: float = 0.0

    def camera_model(self) -> CameraModel:
        px = self.pose.x + self.mount.forward * math.cos(self.pose.theta)
        py = self.pose.y + self.mount.forward * math.sin(self.pose.theta)
        return CameraModel(
            id="robot",
            intrinsics=self.mount.intrinsics,
            pose=camera_pose(px, py, self.mount.height, self.pose.theta, self.mount.pitch),
            kind=CameraKind.MOBILE,
            frame_rate=self.mount.frame_rate,
        )

    def set_path(self, waypoints: tuple[Point2, ...]) -> None:
        self._path = waypoints
        self._path_pos = 0.0

    def clear_motion(self) -> None:
        self._path = None
        self.dispatch_target = None
        self.follow_target = None
        self.rotate_target = None

    def _turn_toward(self, target: Point2, dt: float) -> float:
        """Rotate at most omega_max*dt toward target; returns remaining error."""
        bearing = math.atan2(target.y - self.pose.y, target.x - self.pose.x)
        err = normalize_angle(bearing - self.pose.theta)
        step = max(-self.omega_max * dt, min(self.omega_max * dt, err))
        self.pose = Pose2(self.pose.position, self.pose.theta + step)
        return normalize_angle(bearing - self.pose.theta)

    def _advance_on_path(self, dt: float, arrival_tol: float) -> None:
        assert self._path is not None
        budget = self.v_max * dt
        pts = self._path
        pos = self._path_pos
        # locate current segment
        acc = 0.0
        i = 0
        while i < len(pts) - 1:
            seg = distance(pts[i], pts[i + 1])
            if acc + seg >= pos - 1e-12:
                break
            acc += seg
            i += 1
        while budget > 0 and i < len(pts) - 1:
            seg = distance(pts[i], pts[i + 1])
            into = pos - acc
            remaining = seg - into
            step = min(budget, remaining)
            pos += step
            budget -= step
            if pos >= acc + seg - 1e-12:
                acc += seg
                i += 1
        self._path_pos = pos
        # interpolated pose on the path
        acc = 0.0
        for a, b in zip(pts, pts[1:]):
            seg = distance(a, b)
            if acc + seg >= pos - 1e-12 and seg > 0:
                t = (pos - acc) / seg
                x = a.x + (b.x - a.x) * t
                y = a.y + (b.y - a.y) * t
                theta = math.atan2(b.y - a.y, b.x - a.x)
                self.pose = Pose2(Point2(x, y), theta)
                break
            acc += seg
        end = pts[-1]
        if distance(self.pose.position, end) <= arrival_tol:
            self.pose = Pose2(end, self.pose.theta)
            self._path = None

    def update(self, dt: float, arrival_tol: float) -> None:
        if self.rotate_target is not None:
            err = self._turn_toward(self.rotate_target, dt)
            if abs(err) < 0.03:
                self.rotate_target = None
            return
        if self._path is not None:
            self._advance_on_path(dt, arrival_tol)
            if (
                self.dispatch_target is not None
                and distance(self.pose.position, self.dispatch_target) <= arrival_tol
            ):
                self.dispatch_target = None
            return
        if self.follow_target is not None:
            err = self._turn_toward(self.follow_target, dt)
            if abs(err) < math.pi / 5:  # drive once roughly aligned
                gap = distance(self.pose.position, self.follow_target) - self.follow_standoff
                if gap > 0:
                    step = min(self.v_max * dt, gap)
                    self.pose = Pose2(
                        Point2(
                            self.pose.x + step * math.cos(self.pose.theta),
                            self.pose.y + step * math.sin(self.pose.theta),
                        ),
                        self.pose.theta,
                    )


class InteractionSession:
    """One interaction process: a single-writer state machine. Commands, laser
    spots and clock ticks are applied serially; the event log is append-only
    with gapless sequence numbers and monotone timestamps."""

    REPLAN_THRESHOLD = 0.25  # m of dispatch-target drift before replanning

    def __init__(
        self,
        prior: OccupancyGrid,
        robot: RobotSim,
        world: Any = None,
        cameras: list[CameraModel] | None = None,
        mode: Mode = Mode.NRS,
        params: ExtractionParams | None = None,
        rng_seed: int = 0,
        switch_latency: float = 3.0,
        noise_scale: float = 1.0,
        inflation: float = 0.18,
    ):
        self.prior = prior
        self.posterior: OccupancyGrid | None = None
        self.robot = robot
        self.world = world if world is not None else _EmptyWorld()
        self.cameras = list(cameras or [])
        self.mode = mode
        self.params = params or ExtractionParams()
        self.rng = np.random.default_rng(rng_seed)
        self.switch_latency = switch_latency if mode is Mode.ROBOT_ONLY else 0.0
        self.noise_scale = noise_scale
        self.inflation = inflation

        self.state = SessionState.DEFAULT
        self.border_buffer: list[Point2] = []
        self.seed_buffer: list[Point2] = []
        self.timers = {
            SessionState.BORDER: 0.0,
            SessionState.SEED: 0.0,
            SessionState.GUIDE: 0.0,
        }
        self.event_log: list[Event] = []
        self.now = 0.0
        self.cancelled = False
        self.map_version = 0
        self.last_extraction: dict | None = None
        self._seq = 0
        self._nav: GridNav | None = None
        self._planned_goal: Point2 | None = None

    # -- helpers ---------------------------------------------------------

    @property
    def finished(self) -> bool:
        return self.posterior is not None or self.cancelled

    def current_map(self) -> OccupancyGrid:
        """Map in effect: each saved border becomes the next process's prior."""
        return self.posterior if self.posterior is not None else self.prior

    def _emit(self, kind: str, payload: dict) -> Event:
        ev = Event(self._seq, kind, payload, self.now)
        self._seq += 1
        self.event_log.append(ev)
        return ev

    def _nav_on_current(self) -> GridNav:
        if self._nav is None or self._nav.grid is not self.current_map():
            self._nav = GridNav(self.current_map(), self.inflation)
        return self._nav

    def _clear_buffers(self) -> None:
        self.border_buffer.clear()
        self.seed_buffer.clear()


class _EmptyWorld:
    walls: list = []
    noise_sigma: dict = {}


def handle_command(session: InteractionSession, cmd: Command) -> list[Event]:
    """Apply one of the five commands; returns the events it produced.

    Save is atomic: on any extraction or integration failure the session is
    unchanged except for the appended Error event.
    """
    events: list[Event] = []
    if cmd in _COMMAND_TARGET_STATE:
        target = _COMMAND_TARGET_STATE[cmd]
        if session.state is not target:
            previous = session.state
            session.state = target
            if session.switch_latency > 0:
                session.timers[target] += session.switch_latency
                session.now += session.switch_latency
            events.append(
                session._emit(
                    STATE_CHANGED,
                    {"from": previous.value, "to": target.value, "command": cmd.value},
                )
            )
        return events

    if cmd is Command.CANCEL:
        previous = session.state
        session.state = SessionState.DEFAULT
        session._clear_buffers()
        session.robot.clear_motion()
        session.cancelled = True
        events.append(session._emit(CANCELLED, {"from": previous.value}))
        return events

    assert cmd is Command.SAVE
    if not session.border_buffer or not session.seed_buffer:
        missing = "border" if not session.border_buffer else "seed"
        events.append(
            session._emit(
                ERROR,
                {"stage": "save", "message": f"nothing to save: {missing} buffer is empty"},
            )
        )
        return events
    try:
        report = extract_border_with_report(
            session.border_buffer, session.seed_buffer, session.params
        )
        posterior = integrate_border(session.current_map(), report.border)
    except ExtractionError as exc:
        events.append(
            session._emit(ERROR, {"stage": exc.stage, "message": str(exc)})
        )
        return events
    except (SeedPlacementError, ValueError) as exc:
        events.append(
            session._emit(ERROR, {"stage": "integration", "message": str(exc)})
        )
        return events

    session.posterior = posterior
    session.map_version += 1
    session.last_extraction = {
        "kind": report.border.kind.value,
        "chain_size": report.chain_size,
        "cluster_size": report.cluster_size,
        "thinned_size": report.thinned_size,
        "noise_points": report.noise_points,
        "dropped_points": report.dropped_points,
        "border_points": len(session.border_buffer),
        "seed_points": len(session.seed_buffer),
    }
    previous = session.state
    session.state = SessionState.DEFAULT
    session._clear_buffers()
    session.robot.clear_motion()
    session._nav = None
    events.append(session._emit(BORDER_SAVED, dict(session.last_extraction)))
    events.append(
        session._emit(
            STATE_CHANGED,
            {"from": previous.value, "to": SessionState.DEFAULT.value, "command": cmd.value},
        )
    )
    return events


def on_laser_spot(
    session: InteractionSession, true_spot: Point2, now: float | None = None
) -> list[Event]:
    """Feed one true laser-spot position into the session.

    Detection is simulated per camera: in NRS mode the stationary set plus the
    robot camera observe, in robot-only mode just the robot camera. Detections
    buffer in Border/Seed, steer the robot without buffering in Guide, and are
    ignored in Default. In NRS mode a stationary detection while Border/Seed
    dispatches the robot toward the spot.
    """
    if now is not None:
        session.now = max(session.now, now)
    if session.state is SessionState.DEFAULT:
        return []

    if session.mode is Mode.NRS:
        stationary = session.cameras
    else:
        stationary = []
    detections = simulate_detection(
        session.world,
        stationary,
        session.robot.camera_model(),
        true_spot,
        rng_seed=session.rng,
        now=session.now,
        noise_scale=session.noise_scale,
    )
    if not detections:
        return []

    events: list[Event] = []
    buffered = 0
    if session.state in (SessionState.BORDER, SessionState.SEED):
        buf = (
            session.border_buffer
            if session.state is SessionState.BORDER
            else session.seed_buffer
        )
        for det in detections:
            buf.append(det.position)
        buffered = len(detections)
        robot_det = next((d for d in detections if d.source == "robot"), None)
        if session.mode is Mode.ROBOT_ONLY and robot_det is not None:
            session.robot.follow_target = robot_det.position
    else:  # GUIDE: steer without storing
        robot_det = next((d for d in detections if d.source == "robot"), None)
        if robot_det is not None:
            session.robot.follow_target = robot_det.position

    events.append(
        session._emit(
            SPOT_DETECTED,
            {
                "cameras": [d.source for d in detections],
                "count": len(detections),
                "state": session.state.value,
                "buffered": buffered,
            },
        )
    )

    if session.mode is Mode.NRS and session.state in (
        SessionState.BORDER,
        SessionState.SEED,
    ):
        first_stationary = next((d for d in detections if d.source != "robot"), None)
        if first_stationary is not None:
            ev = _dispatch(session, first_stationary.position)
            if ev is not None:
                events.append(ev)
    return events


def _dispatch(session: InteractionSession, target: Point2) -> Event | None:
    """Send the robot toward the latest stationary detection, replanning only
    when the target has drifted materially from the last planned goal."""
    session.robot.dispatch_target = target
    if (
        session._planned_goal is not None
        and session.robot._path is not None
        and distance(target, session._planned_goal) <= session.REPLAN_THRESHOLD
    ):
        return None
    nav = session._nav_on_current()
    goal_cell = nav.nearest_free_cell(target)
    start_cell = nav.nearest_free_cell(session.robot.pose.position)
    if goal_cell is None or start_cell is None:
        return None
    cells = nav.plan_cells(start_cell, goal_cell)
    if cells is None or len(cells) < 2:
        return None
    waypoints = [cell_to_world(nav.grid, c, r) for c, r in cells]
    # anchor the path at the true pose so progress equals displacement
    if distance(session.robot.pose.position, waypoints[0]) > 1e-9:
        waypoints.insert(0, session.robot.pose.position)
    session.robot.set_path(tuple(waypoints))
    session._planned_goal = target
    return session._emit(
        ROBOT_DISPATCHED,
        {
            "target": [target.x, target.y],
            "cells": len(cells),
        },
    )


def tick(session: InteractionSession, dt: float) -> list[Event]:
    """Advance the simulation clock: active-state timer and robot motion."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    session.now += dt
    if session.state is not SessionState.DEFAULT:
        session.timers[session.state] += dt
    session.robot.update(dt, arrival_tol=session.prior.resolution)
    return []


def timing_report(session: InteractionSession) -> dict:
    """Per-state time decomposition of a finished session."""
    if not session.finished:
        raise RuntimeError("timing_report requires a finished session (saved or cancelled)")
    guide = session.timers[SessionState.GUIDE]
    border = session.timers[SessionState.BORDER]
    seed = session.timers[SessionState.SEED]
    return {
        "guide": guide,
        "border": border,
        "seed": seed,
        "total": guide + border + seed,
    }
