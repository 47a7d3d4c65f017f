"""The unit record flowing through the pipeline."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .common import FRAME, GENDERS

AUG_MARKER = "__aug"


@dataclass
class Sample:
    image_id: str
    pixels: np.ndarray  # (96,96) float64 in [0,1]
    class_label: int
    gender_label: str
    landmarks: np.ndarray  # (15,2), NaN = missing

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        self.landmarks = np.asarray(self.landmarks, dtype=np.float64)
        if self.pixels.shape != (FRAME, FRAME):
            raise ValueError(
                f"{self.image_id}: pixels must be {FRAME}x{FRAME}, "
                f"got {self.pixels.shape}")
        if self.landmarks.shape != (15, 2):
            raise ValueError(
                f"{self.image_id}: landmarks must be (15,2), "
                f"got {self.landmarks.shape}")
        if self.gender_label not in GENDERS:
            raise ValueError(
                f"{self.image_id}: gender must be one of {GENDERS}, "
                f"got {self.gender_label!r}")

    def is_augmented(self):
        return AUG_MARKER in self.image_id

    def derived(self, suffix, pixels, landmarks):
        return replace(self, image_id=self.image_id + suffix,
                       pixels=pixels, landmarks=landmarks)
