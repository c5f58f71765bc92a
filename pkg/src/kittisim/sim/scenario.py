"""Kinematic simulation of the highway overtake scene.

Three vehicles on a straight multi-lane highway: the sensor carrier (ego)
follows a faster lead vehicle; further ahead in the same lane a slower
vehicle cruises.  When the lead closes on the slow vehicle it changes lanes
to pass, exposing the slow vehicle, and the ego decelerates behind it under
a constant-time-headway law.

World coordinates are left-handed: x forward along the road, y to the
right, z up; the ego's lane center is y = 0.  Longitudinal gaps in the
config are bumper-to-bumper.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

from ..errors import InfeasibleConfig

KMH = 1.0 / 3.6  # km/h -> m/s

DODGE_CHARGER = (5.0, 1.95, 1.45)
MERCEDES_COUPE = (4.7, 1.85, 1.40)


@dataclass(frozen=True)
class ScenarioConfig:
    lane_count: int = 4
    lane_width: float = 3.5
    ego_lane: int = 3
    ego_initial_speed: float = 90.0  # km/h
    fast_vehicle_speed: float = 90.0  # km/h
    slow_vehicle_speed: float = 60.0  # km/h
    gap_ego_to_fast: float = 45.0  # m, bumper to bumper
    gap_fast_to_slow: float = 60.0  # m, bumper to bumper
    overtake_trigger_gap: float = 30.0  # m
    lane_change_duration: float = 3.0  # s
    headway_time: float = 1.8  # s
    standstill_gap: float = 5.0  # m
    max_decel: float = 4.0  # m/s^2
    max_accel: float = 2.0  # m/s^2
    sim_rate: float = 10.0  # Hz
    record_every: int = 5
    total_recorded_frames: int = 547
    test_frames: int = 492
    val_frames: int = 55
    seed: int = 31337

    def __post_init__(self):
        if self.fast_vehicle_speed <= self.slow_vehicle_speed:
            raise InfeasibleConfig(
                "fast_vehicle_speed must exceed slow_vehicle_speed "
                f"({self.fast_vehicle_speed} <= {self.slow_vehicle_speed})"
            )
        if self.record_every < 1:
            raise InfeasibleConfig("record_every must be >= 1")
        if self.sim_rate <= 0:
            raise InfeasibleConfig("sim_rate must be positive")
        if self.test_frames + self.val_frames != self.total_recorded_frames:
            raise InfeasibleConfig(
                "test_frames + val_frames must equal total_recorded_frames "
                f"({self.test_frames} + {self.val_frames} != {self.total_recorded_frames})"
            )
        if not 1 <= self.ego_lane <= self.lane_count:
            raise InfeasibleConfig(f"ego_lane {self.ego_lane} outside 1..{self.lane_count}")
        if min(self.gap_ego_to_fast, self.gap_fast_to_slow) <= 0:
            raise InfeasibleConfig("initial gaps must be positive")
        if self.overtake_trigger_gap >= self.gap_fast_to_slow:
            raise InfeasibleConfig(
                "overtake_trigger_gap must be smaller than gap_fast_to_slow "
                f"({self.overtake_trigger_gap} >= {self.gap_fast_to_slow})"
            )
        if min(self.total_recorded_frames, self.test_frames, self.val_frames) < 0:
            raise InfeasibleConfig("frame counts must be non-negative")
        if self.lane_change_duration <= 0 or self.headway_time <= 0:
            raise InfeasibleConfig("durations must be positive")


@dataclass
class VehicleState:
    id: str
    model_name: str
    lane: float  # continuous lane coordinate (1 = leftmost configured lane)
    s: float  # longitudinal position of the box center, meters
    speed: float  # m/s, longitudinal
    lateral_speed: float = 0.0  # m/s, positive toward +y (right)
    box_dims: tuple[float, float, float] = DODGE_CHARGER  # (l, w, h)

    def __post_init__(self):
        if self.speed < 0.0:
            raise ValueError(f"{self.id}: speed must be non-negative")
        if min(self.box_dims) <= 0.0:
            raise ValueError(f"{self.id}: box_dims must be positive")

    @property
    def yaw(self) -> float:
        """Heading in the left-handed world frame."""
        if self.speed <= 0.0:
            return 0.0
        return math.atan2(self.lateral_speed, self.speed)


@dataclass
class SceneState:
    step: int
    time: float
    vehicles: tuple[VehicleState, ...]  # ego first

    @property
    def ego(self) -> VehicleState:
        return self.vehicles[0]

    @property
    def others(self) -> tuple[VehicleState, ...]:
        return self.vehicles[1:]

    def state_hash(self) -> str:
        payload = {
            "step": self.step,
            "time": repr(self.time),
            "vehicles": [
                {
                    "id": v.id,
                    "model": v.model_name,
                    "lane": repr(v.lane),
                    "s": repr(v.s),
                    "speed": repr(v.speed),
                    "lateral_speed": repr(v.lateral_speed),
                    "dims": [repr(d) for d in v.box_dims],
                }
                for v in self.vehicles
            ],
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def lane_center_y(config: ScenarioConfig, lane: float) -> float:
    return (lane - config.ego_lane) * config.lane_width


def _bumper_gap(rear: VehicleState, front: VehicleState) -> float:
    return (front.s - rear.s) - (front.box_dims[0] + rear.box_dims[0]) / 2.0


def _check_no_overlap(state: SceneState, lane_width: float) -> None:
    vs = state.vehicles
    for i in range(len(vs)):
        for j in range(i + 1, len(vs)):
            a, b = vs[i], vs[j]
            ds = abs(a.s - b.s)
            dy = abs(a.lane - b.lane) * lane_width
            if ds < (a.box_dims[0] + b.box_dims[0]) / 2.0 and dy < (
                a.box_dims[1] + b.box_dims[1]
            ) / 2.0:
                raise InfeasibleConfig(
                    f"vehicles {a.id} and {b.id} overlap at step {state.step}"
                )


def build_timeline(config: ScenarioConfig) -> list[SceneState]:
    """Integrate the scenario at sim_rate and return one state per step.

    The timeline covers exactly the steps the recorder needs:
    total_recorded_frames * record_every.
    """
    dt = 1.0 / config.sim_rate
    n_steps = max(config.total_recorded_frames * config.record_every, 1)

    ego = VehicleState(
        id="ego",
        model_name="MercedesCoupe",
        lane=float(config.ego_lane),
        s=0.0,
        speed=config.ego_initial_speed * KMH,
        box_dims=MERCEDES_COUPE,
    )
    fast = VehicleState(
        id="fast",
        model_name="DodgeCharger",
        lane=float(config.ego_lane),
        s=config.gap_ego_to_fast + (MERCEDES_COUPE[0] + DODGE_CHARGER[0]) / 2.0,
        speed=config.fast_vehicle_speed * KMH,
        box_dims=DODGE_CHARGER,
    )
    slow = VehicleState(
        id="slow",
        model_name="DodgeCharger",
        lane=float(config.ego_lane),
        s=fast.s + config.gap_fast_to_slow + DODGE_CHARGER[0],
        speed=config.slow_vehicle_speed * KMH,
        box_dims=DODGE_CHARGER,
    )

    # the lead passes on the left when one exists, otherwise on the right
    target_lane = config.ego_lane - 1 if config.ego_lane > 1 else config.ego_lane + 1
    if not 1 <= target_lane <= config.lane_count:
        raise InfeasibleConfig("no adjacent lane available for the overtake")

    timeline: list[SceneState] = []
    change_start: float | None = None
    fast_lane0 = fast.lane

    for step in range(n_steps):
        t = step * dt
        state = SceneState(step=step, time=t, vehicles=(ego, fast, slow))
        _check_no_overlap(state, config.lane_width)
        timeline.append(state)

        # --- lead vehicle: trigger + sinusoidal lane change
        if change_start is None and _bumper_gap(fast, slow) < config.overtake_trigger_gap:
            change_start = t
        if change_start is None:
            new_lane, lat_speed = fast.lane, 0.0
        else:
            tau = min(max(t + dt - change_start, 0.0), config.lane_change_duration)
            frac = 0.5 * (1.0 - math.cos(math.pi * tau / config.lane_change_duration))
            new_lane = fast_lane0 + (target_lane - fast_lane0) * frac
            dfrac = (
                0.5
                * math.pi
                / config.lane_change_duration
                * math.sin(math.pi * tau / config.lane_change_duration)
            )
            lat_speed = (target_lane - fast_lane0) * dfrac * config.lane_width
            if tau >= config.lane_change_duration:
                lat_speed = 0.0
        fast = VehicleState(
            id="fast",
            model_name=fast.model_name,
            lane=new_lane,
            s=fast.s + fast.speed * dt,
            speed=fast.speed,
            lateral_speed=lat_speed,
            box_dims=fast.box_dims,
        )

        slow = VehicleState(
            id="slow",
            model_name=slow.model_name,
            lane=slow.lane,
            s=slow.s + slow.speed * dt,
            speed=slow.speed,
            box_dims=slow.box_dims,
        )

        # --- ego: constant-time-headway controller toward the in-lane lead
        lead = None
        for v in (fast, slow):
            if abs(v.lane - ego.lane) < 0.5 and v.s > ego.s:
                if lead is None or v.s < lead.s:
                    lead = v
        if lead is None:
            accel = 0.0
        else:
            gap = _bumper_gap(ego, lead)
            desired = config.standstill_gap + config.headway_time * ego.speed
            accel = 0.25 * (gap - desired) + 1.2 * (lead.speed - ego.speed)
            accel = min(max(accel, -config.max_decel), config.max_accel)
        ego = VehicleState(
            id="ego",
            model_name=ego.model_name,
            lane=ego.lane,
            s=ego.s + ego.speed * dt,
            speed=max(0.0, ego.speed + accel * dt),
            box_dims=ego.box_dims,
        )

    return timeline
