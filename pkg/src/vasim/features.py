"""Window -> feature vector: movement intensity plus environment variables."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import dsp
from .trace import WINDOW_RATE, PhoneState, Window

SUBWINDOW_SECONDS = 2.0
ACCEL_CUTOFF_HZ = 5.0
ACCEL_FILTER_ORDER = 4
ENV_MEDIAN_SECONDS = 1.0

MOTION = "Motion"
STATIONARY = "Stationary"
MOTION_CLASSES = (STATIONARY, MOTION)

MOTION_FEATURE_NAMES = (
    "mag_mean_avg", "mag_std_avg", "jerk_avg",
    "mag_mean_max", "mag_std_max", "jerk_max",
)
FEATURE_NAMES = (
    "stationary_bit", "motion_bit", "noise_mean", "noise_max",
    "light_mean", "light_min", "screen_interactive", "audio_route_external",
)


class MotionCategory(enum.Enum):
    DefiniteMotion = "DefiniteMotion"
    DefiniteStationary = "DefiniteStationary"
    RelativeMotionStationary = "RelativeMotionStationary"


_ONE_HOT = {
    MotionCategory.DefiniteMotion: (0, 1),
    MotionCategory.DefiniteStationary: (1, 0),
    MotionCategory.RelativeMotionStationary: (1, 1),
}


@dataclass(frozen=True)
class FeatureVector:
    movement_onehot: tuple[int, int]
    noise_mean: float
    noise_max: float
    light_mean: float
    light_min: float
    screen_interactive: int
    audio_route_external: int
    p_motion: float | None = None

    def __post_init__(self):
        if tuple(self.movement_onehot) not in _ONE_HOT.values():
            raise ValueError(f"invalid movement encoding {self.movement_onehot}")

    def as_array(self) -> np.ndarray:
        return np.array([*self.movement_onehot, self.noise_mean, self.noise_max,
                         self.light_mean, self.light_min, self.screen_interactive,
                         self.audio_route_external], dtype=float)


def movement_intensity(p_motion: float) -> MotionCategory:
    """Three-way split of the motion probability; 0.4 and 0.6 are "relative"."""
    if not 0.0 <= p_motion <= 1.0:
        raise ValueError(f"probability out of range: {p_motion}")
    if p_motion > 0.6:
        return MotionCategory.DefiniteMotion
    if p_motion < 0.4:
        return MotionCategory.DefiniteStationary
    return MotionCategory.RelativeMotionStationary


def one_hot(category: MotionCategory) -> tuple[int, int]:
    return _ONE_HOT[category]


def filter_accel(accel, rate: float = WINDOW_RATE) -> np.ndarray:
    coeffs = dsp.butterworth_lowpass(ACCEL_FILTER_ORDER, ACCEL_CUTOFF_HZ, rate)
    return dsp.filter_apply(coeffs, np.asarray(accel, dtype=float))


def motion_features(accel, rate: float = WINDOW_RATE) -> np.ndarray:
    """Six magnitude statistics of an already-filtered accelerometer window.

    Per 2 s sub-window: mean and standard deviation of |a| and the mean
    absolute jerk of |a|. These are averaged and maxed over sub-windows.
    """
    a = np.asarray(accel, dtype=float)
    per = int(round(SUBWINDOW_SECONDS * rate))
    n_sub = a.shape[0] // per
    if n_sub < 1:
        raise ValueError(f"window too short: need at least {SUBWINDOW_SECONDS} s of samples")
    mag = np.sqrt(np.sum(a[:n_sub * per] ** 2, axis=1)).reshape(n_sub, per)
    stats = np.column_stack([
        mag.mean(axis=1),
        mag.std(axis=1),
        np.abs(np.diff(mag, axis=1)).mean(axis=1) * rate,
    ])
    return np.concatenate([stats.mean(axis=0), stats.max(axis=0)])


def env_features(noise, light, phone: PhoneState) -> tuple[float, float, float, float, int, int]:
    noise = np.asarray(noise, dtype=float)
    light = np.asarray(light, dtype=float)
    if noise.size == 0 or light.size == 0:
        raise ValueError("environment windows must be non-empty")
    return (float(noise.mean()), float(noise.max()), float(light.mean()), float(light.min()),
            int(phone.screen_interactive), int(phone.audio_route_external))


def smooth_env(x, rate: float = WINDOW_RATE) -> np.ndarray:
    return dsp.median_smooth(x, int(round(ENV_MEDIAN_SECONDS * rate)))


def window_motion_features(window: Window) -> np.ndarray:
    return motion_features(filter_accel(window.accel))


def motion_probability(motion_model, motion_feats) -> float:
    try:
        col = list(motion_model.class_order).index(MOTION)
    except ValueError:
        raise ValueError(
            f"motion model classes {motion_model.class_order} lack {MOTION!r}") from None
    return float(motion_model.predict_proba(np.asarray(motion_feats)[None, :])[0, col])


def assemble(window: Window, motion_model, phone: PhoneState | None = None) -> FeatureVector:
    """Full feature vector for one window."""
    phone = window.phone if phone is None else phone
    p_motion = motion_probability(motion_model, window_motion_features(window))
    onehot = one_hot(movement_intensity(p_motion))
    env = env_features(smooth_env(window.noise), smooth_env(window.light), phone)
    return FeatureVector(onehot, *env, p_motion=p_motion)
