# label_uncertainty/blur_world.py
"""
Image-blur label-noise world.

Each image is a procedurally drawn glyph of one of k classes. A blur level
0..3 is picked per image; the image is blurred with a Gaussian of that
variance and three labels are drawn from a noise distribution whose spread
grows with the level.
"""
from __future__ import annotations

import logging
import math
from typing import Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.ndimage import convolve1d

from label_uncertainty.datasets import Seed, build_instance, make_rng, spawn_seeds
from label_uncertainty.errors import InvalidParameterError
from label_uncertainty.models import (
    GradeHistogram,
    GradeScale,
    LabeledInstance,
    UncertaintyKind,
    UncertaintySpec,
)

# logging
logger = logging.getLogger(__name__)

BLUR_LEVELS = (0, 1, 2, 3)
# mass on each of the four incorrect labels, per blur level
NOISE_MASS: Dict[int, float] = {0: 0.0, 1: 0.02, 2: 0.08, 3: 0.12}
NOISY_LABELS = 4
# pixel noise is added before blurring, so unblurred glyphs are the hardest
# to classify while their labels never disagree
GLYPH_NOISE = 1.0

# any disagreement among the labels is the positive class
BLUR_SPECS = (
    UncertaintySpec(kind=UncertaintyKind.DISAGREE, threshold=0.0),
    UncertaintySpec(kind=UncertaintyKind.VARIANCE, threshold=0.0),
)


class BlurWorld(BaseModel):
    """Parameters of the blur label-noise world."""
    model_config = ConfigDict(frozen=True)

    image_size: Tuple[int, int] = Field((12, 12), description="(H, W) of rendered glyphs.")
    class_count: int = Field(10, description="Number of glyph classes k.")
    noise_table: Dict[int, float] = Field(
        default_factory=lambda: dict(NOISE_MASS),
        description="Mass placed on each of four incorrect labels, per level.",
    )
    labels_per_image: int = Field(3, ge=1, description="Labels drawn per image.")
    pixel_noise: float = Field(GLYPH_NOISE, ge=0.0, description="Std of Gaussian pixel noise before blurring.")

    @model_validator(mode="after")
    def _check(self) -> "BlurWorld":
        if set(self.noise_table) != set(BLUR_LEVELS):
            raise ValueError("noise_table needs an entry for each blur level")
        if self.noise_table[0] != 0.0:
            raise ValueError("level 0 must be a point mass")
        if any(not 0.0 <= m <= 1.0 / NOISY_LABELS for m in self.noise_table.values()):
            raise ValueError("noise masses must leave a valid distribution")
        if self.class_count < NOISY_LABELS + 1:
            raise ValueError("need at least five classes")
        if min(self.image_size) < 5:
            raise ValueError("glyphs need at least 5x5 pixels")
        return self

    @property
    def scale(self) -> GradeScale:
        return GradeScale.uniform(self.class_count)


def _check_level(level: int) -> None:
    if level not in BLUR_LEVELS:
        raise InvalidParameterError("blur level must be 0, 1, 2 or 3", data={"level": level})


def gaussian_kernel(variance: float) -> np.ndarray:
    """Discrete Gaussian truncated at radius ceil(3 sigma), normalized to 1."""
    radius = int(math.ceil(3.0 * math.sqrt(variance)))
    offsets = np.arange(-radius, radius + 1, dtype=float)
    kernel = np.exp(-offsets**2 / (2.0 * variance))
    return kernel / kernel.sum()


def blur_image(img: np.ndarray, level: int) -> np.ndarray:
    """Separable Gaussian blur of variance `level` with reflect padding."""
    _check_level(level)
    img = np.asarray(img, dtype=float)
    if img.size == 0:
        raise InvalidParameterError("empty image")
    if level == 0:
        return img.copy()
    kernel = gaussian_kernel(float(level))
    out = convolve1d(img, kernel, axis=-2, mode="reflect")
    return convolve1d(out, kernel, axis=-1, mode="reflect")


def label_noise_dist(
    true_label: int,
    level: int,
    k: int = 10,
    seed: Seed = 0,
    noise_table: Dict[int, float] | None = None,
) -> GradeHistogram:
    """Point mass at level 0; otherwise four random wrong labels share the noise."""
    _check_level(level)
    if k < NOISY_LABELS + 1:
        raise InvalidParameterError("need at least five classes for four incorrect labels", data={"k": k})
    if not 0 <= true_label < k:
        raise InvalidParameterError("label outside 0..k-1", data={"label": true_label, "k": k})
    if level == 0:
        return GradeHistogram.point_mass(true_label, k)
    noise = (noise_table or NOISE_MASS)[level]
    others = np.asarray([c for c in range(k) if c != true_label])
    wrong = make_rng(seed).choice(others, size=NOISY_LABELS, replace=False)
    mass = np.zeros(k)
    mass[wrong] = noise
    mass[true_label] = 1.0 - NOISY_LABELS * noise
    return GradeHistogram.from_array(mass)


def glyph_templates(size: Tuple[int, int], k: int) -> np.ndarray:
    """k distinct stroke glyphs on an (H, W) canvas, values in {0, 1}."""
    h, w = size
    rows, cols = np.mgrid[0:h, 0:w]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    u, v = (rows - cy) / (h / 2.0), (cols - cx) / (w / 2.0)
    radius = np.sqrt(u**2 + v**2)
    stroke = 0.18
    shapes = [
        np.abs(u) < stroke,                                            # horizontal bar
        np.abs(v) < stroke,                                            # vertical bar
        np.abs(u - v) < stroke,                                        # diagonal
        np.abs(u + v) < stroke,                                        # anti-diagonal
        (np.abs(u) < stroke) | (np.abs(v) < stroke),                   # plus
        (np.abs(u - v) < stroke) | (np.abs(u + v) < stroke),           # cross
        np.abs(radius - 0.6) < stroke,                                 # ring
        (np.maximum(np.abs(u), np.abs(v)) > 0.7) & (np.maximum(np.abs(u), np.abs(v)) < 0.7 + 2 * stroke),  # box
        ((np.abs(v + 0.5) < stroke) | (np.abs(u - 0.5) < stroke)) & (u > -0.8) & (v < 0.8),  # L corner
        (np.abs(u + 0.5) < stroke) | ((np.abs(v) < stroke) & (u > -0.5)),  # T
        radius < 0.35,                                                 # dot
        (np.abs(u) < stroke) & (v < 0),                                # half bar
    ]
    if k > len(shapes):
        # extra classes get fixed random stipple patterns
        rng = np.random.default_rng(k)
        shapes += [rng.random((h, w)) < 0.3 for _ in range(k - len(shapes))]
    return np.stack([s.astype(float) for s in shapes[:k]])


def render_images(world: BlurWorld, classes: np.ndarray, seed: Seed) -> np.ndarray:
    """Templates shifted by up to one pixel, plus Gaussian pixel noise."""
    rng = make_rng(seed)
    templates = glyph_templates(world.image_size, world.class_count)
    shifts = rng.integers(-1, 2, size=(len(classes), 2))
    images = np.stack([
        np.roll(templates[c], (int(dy), int(dx)), axis=(0, 1)) for c, (dy, dx) in zip(classes, shifts)
    ])
    return images + world.pixel_noise * rng.standard_normal(images.shape)


def gen_blur_dataset_with_levels(
    n_images: int, seed: Seed, world: BlurWorld | None = None
) -> Tuple[List[LabeledInstance], np.ndarray]:
    """Like `gen_blur_dataset`, also returning each image's blur level."""
    world = world or BlurWorld()
    if n_images < 1:
        raise InvalidParameterError("need at least one image", data={"n_images": n_images})
    class_seed, render_seed, noise_seed, label_seed = spawn_seeds(seed, 4)
    class_rng = make_rng(class_seed)
    classes = class_rng.integers(0, world.class_count, size=n_images)
    levels = class_rng.integers(0, len(BLUR_LEVELS), size=n_images)
    images = render_images(world, classes, render_seed)
    for level in BLUR_LEVELS[1:]:
        picked = levels == level
        if np.any(picked):
            images[picked] = blur_image(images[picked], level)
    noise_seeds = spawn_seeds(noise_seed, n_images)
    label_rng = make_rng(label_seed)
    scale = world.scale
    instances: List[LabeledInstance] = []
    for i in range(n_images):
        dist = label_noise_dist(
            int(classes[i]), int(levels[i]), world.class_count, noise_seeds[i], world.noise_table
        )
        labels = label_rng.choice(world.class_count, size=world.labels_per_image, p=dist.array())
        instances.append(
            build_instance(images[i].ravel(), f"img{i:06d}", labels, scale, BLUR_SPECS)
        )
    logger.debug("generated %d blur images", n_images)
    return instances, levels


def gen_blur_dataset(n_images: int, seed: Seed, world: BlurWorld | None = None) -> List[LabeledInstance]:
    """Blurred glyphs with noisy labels; DUP target is 1 iff labels disagree."""
    return gen_blur_dataset_with_levels(n_images, seed, world)[0]
