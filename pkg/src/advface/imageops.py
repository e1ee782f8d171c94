"""Image primitives shared by all attacks: PNG I/O, clamping, epsilon-ball
projection, and difference norms.

Pixel values live in [0, 1] internally. Perturbation budgets are accepted
in 0-255 pixel units (the scale attack grids are quoted in) and converted
once via :class:`EpsilonBudget`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError


class ImageError(Exception):
    """Base class for image loading/validation failures."""


class ImageDecodeError(ImageError):
    """File exists but is not a decodable PNG."""


class UnsupportedDepthError(ImageError):
    """PNG decodes but is not 8-bit grayscale or RGB."""


class ShapeMismatchError(ImageError):
    """Two images that must share a shape do not."""


def as_image(arr) -> np.ndarray:
    """Validate and canonicalize an (H, W, C) float image in [0, 1]."""
    img = np.asarray(arr, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ImageError(f"expected (H, W, 1|3) array, got shape {img.shape}")
    if img.size == 0:
        raise ImageError("empty image")
    if img.min() < 0.0 or img.max() > 1.0:
        raise ImageError("pixel values outside [0, 1]")
    return img


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")


@dataclass(frozen=True)
class EpsilonBudget:
    """Perturbation bound, quoted in 0-255 pixel units."""

    epsilon_255: float

    def __post_init__(self):
        if self.epsilon_255 < 0:
            raise ValueError("epsilon must be non-negative")

    @property
    def epsilon_norm(self) -> float:
        return self.epsilon_255 / 255.0


@dataclass(frozen=True)
class FacePair:
    """A face pair: ``source`` stays fixed, ``target`` is what attacks modify."""

    source: np.ndarray
    target: np.ndarray
    label: int = 1

    def __post_init__(self):
        object.__setattr__(self, "source", as_image(self.source))
        object.__setattr__(self, "target", as_image(self.target))
        _check_same_shape(self.source, self.target)


def load_image(path) -> np.ndarray:
    """Load an 8-bit PNG (grayscale or RGB) as an (H, W, C) array in [0, 1]."""
    try:
        with PILImage.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "L":
                arr = np.asarray(im, dtype=np.float64)[:, :, None]
            elif mode == "RGB":
                arr = np.asarray(im, dtype=np.float64)
            else:
                raise UnsupportedDepthError(
                    f"unsupported PNG mode {mode!r}; need 8-bit grayscale or RGB"
                )
    except FileNotFoundError:
        raise
    except UnidentifiedImageError as exc:
        raise ImageDecodeError(f"cannot decode {path}: {exc}") from exc
    return arr / 255.0


def save_image(img, path) -> None:
    """Write an image as 8-bit PNG. Round-trip error is at most 1/510 per channel."""
    img = as_image(img)
    quantized = np.rint(img * 255.0).astype(np.uint8)
    if img.shape[2] == 1:
        pil = PILImage.fromarray(quantized[:, :, 0], mode="L")
    else:
        pil = PILImage.fromarray(quantized, mode="RGB")
    pil.save(path, format="PNG")


def project(origin, candidate, budget: EpsilonBudget) -> np.ndarray:
    """Clamp ``candidate`` into the l-inf ball of radius eps around ``origin``,
    intersected with [0, 1]."""
    origin = as_image(origin)
    candidate = np.asarray(candidate, dtype=np.float64)
    if candidate.ndim == 2:
        candidate = candidate[:, :, None]
    _check_same_shape(origin, candidate)
    eps = budget.epsilon_norm
    out = np.clip(candidate, origin - eps, origin + eps)
    np.clip(out, 0.0, 1.0, out=out)
    return out


def l2_diff(a, b) -> float:
    """Euclidean norm of the pixel difference over flat [0, 1]-scaled arrays."""
    a = as_image(a)
    b = as_image(b)
    _check_same_shape(a, b)
    return float(np.linalg.norm((a - b).ravel()))


def to_channels(img: np.ndarray, channels: int) -> np.ndarray:
    """Broadcast grayscale to RGB (or pass through) to match an oracle's input."""
    img = as_image(img)
    if img.shape[2] == channels:
        return img
    if img.shape[2] == 1 and channels == 3:
        return np.repeat(img, 3, axis=2)
    raise ImageError(f"cannot convert {img.shape[2]}-channel image to {channels}")
