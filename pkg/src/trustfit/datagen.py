"""Synthetic benchmark of rotated elliptical 2D Gaussian images.

Every image is a square ``side x side`` grid of pixels addressed by
``(row, col)``; the Gaussian's ``x`` axis runs along columns and ``y`` along
rows.  All randomness comes from numpy's PCG64 generator seeded with
``(rng_seed, length_index, image_index)`` so any single image can be
regenerated on its own and results do not depend on generation order.
"""

import json
import os
from dataclasses import asdict, astuple, dataclass, field

import numpy as np

from .model import Dataset

__all__ = [
    "Gaussian2DParams",
    "BenchmarkSpec",
    "GeneratedImage",
    "gaussian2d",
    "canonical_params",
    "pixel_grid",
    "log_lengths",
    "desk_scale_spec",
    "full_scale_spec",
    "generate_image",
    "generate_dataset",
    "iter_images",
    "write_image",
    "write_dataset",
    "read_image",
    "read_manifest",
]

PARAM_NAMES = ("amplitude", "x0", "y0", "sigma_x", "sigma_y", "theta", "offset")


@dataclass(frozen=True)
class Gaussian2DParams:
    amplitude: float
    x0: float
    y0: float
    sigma_x: float
    sigma_y: float
    theta: float
    offset: float

    def __post_init__(self):
        if not (self.sigma_x > 0 and self.sigma_y > 0):
            raise ValueError("Gaussian widths must be positive")

    def as_array(self):
        return np.array(astuple(self), dtype=float)


def gaussian2d(coords, params):
    """Rotated elliptical Gaussian evaluated at ``(row, col)`` points.

    ``params`` is a :class:`Gaussian2DParams` or any length-7 sequence
    ``(A, x0, y0, sigma_x, sigma_y, theta, c)``; the entries may be dual
    numbers.
    """
    if isinstance(params, Gaussian2DParams):
        params = astuple(params)
    amp, x0, y0, sx, sy, theta, c = params
    coords = np.asarray(coords, dtype=float)
    y = coords[..., 0]
    x = coords[..., 1]
    cos, sin = np.cos(theta), np.sin(theta)
    sx2, sy2 = sx * sx, sy * sy
    a = cos * cos / (2 * sx2) + sin * sin / (2 * sy2)
    b = np.sin(2 * theta) * (1 / (4 * sy2) - 1 / (4 * sx2))
    d = sin * sin / (2 * sx2) + cos * cos / (2 * sy2)
    dx = x - x0
    dy = y - y0
    return amp * np.exp(-(a * dx * dx + 2 * b * dx * dy + d * dy * dy)) + c


def canonical_params(params):
    """Unique representative of a Gaussian's equivalent parameter sets.

    Swapping the widths and turning ``theta`` by a quarter turn gives the
    same surface, as does any half turn.  The representative has
    ``sigma_x <= sigma_y`` and ``theta`` in ``[0, pi)``.
    """
    amp, x0, y0, sx, sy, theta, c = np.asarray(
        astuple(params) if isinstance(params, Gaussian2DParams) else params, dtype=float
    )
    sx, sy = abs(sx), abs(sy)
    if sx > sy:
        sx, sy, theta = sy, sx, theta + np.pi / 2
    return Gaussian2DParams(amp, x0, y0, sx, sy, float(np.mod(theta, np.pi)), c)


def pixel_grid(shape):
    """``(h*w, 2)`` array of ``(row, col)`` pixel coordinates, row-major."""
    h, w = shape
    return np.indices((h, w), dtype=float).reshape(2, -1).T


def log_lengths(lo, hi, count):
    """``count`` data lengths spaced evenly in log between ``lo`` and ``hi``."""
    return [int(round(v)) for v in np.geomspace(lo, hi, count)]


@dataclass(frozen=True)
class BenchmarkSpec:
    """What to generate.

    ``side`` of each image is ``round(sqrt(v))``, so the realised pixel count
    is the nearest square to each requested length.  Position and width
    ranges are fractions of ``side``.
    """

    lengths: tuple
    images_per_length: int = 10
    noise_sigma: float = 0.1
    rng_seed: int = 0
    amplitude_range: tuple = (0.5, 2.0)
    center_range: tuple = (0.25, 0.75)
    width_range: tuple = (0.1, 0.25)
    theta_range: tuple = (0.0, np.pi)
    offset_range: tuple = (0.0, 0.5)

    def __post_init__(self):
        lengths = tuple(int(v) for v in self.lengths)
        if not lengths or any(v <= 0 for v in lengths):
            raise ValueError("lengths must be positive")
        if list(lengths) != sorted(lengths):
            raise ValueError("lengths must be sorted")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.images_per_length < 1:
            raise ValueError("images_per_length must be >= 1")
        object.__setattr__(self, "lengths", lengths)


def desk_scale_spec(**overrides):
    """Five lengths from 1e3 to 1e5, ten images each."""
    return BenchmarkSpec(lengths=tuple(log_lengths(1e3, 1e5, 5)), **overrides)


def full_scale_spec(**overrides):
    """Fifteen lengths from 1e4 to 8e6, fifty-one images each."""
    kw = dict(images_per_length=51)
    kw.update(overrides)
    return BenchmarkSpec(lengths=tuple(log_lengths(1e4, 8e6, 15)), **kw)


@dataclass
class GeneratedImage:
    image: np.ndarray
    truth: Gaussian2DParams
    seed: tuple
    noise_sigma: float
    length_index: int = 0
    image_index: int = 0
    grid: np.ndarray = field(default=None, repr=False)

    @property
    def shape(self):
        return self.image.shape

    @property
    def v(self):
        return self.image.size

    def dataset(self):
        grid = pixel_grid(self.shape) if self.grid is None else self.grid
        return Dataset(grid, self.image.ravel())


def _draw_params(rng, spec, side):
    lo, hi = spec.center_range
    wlo, whi = spec.width_range
    return Gaussian2DParams(
        amplitude=rng.uniform(*spec.amplitude_range),
        x0=rng.uniform(lo * side, hi * side),
        y0=rng.uniform(lo * side, hi * side),
        sigma_x=rng.uniform(wlo * side, whi * side),
        sigma_y=rng.uniform(wlo * side, whi * side),
        theta=rng.uniform(*spec.theta_range),
        offset=rng.uniform(*spec.offset_range),
    )


def generate_image(spec, length_index, image_index):
    """Generate one image of ``spec`` independently of all others."""
    v = spec.lengths[length_index]
    side = max(2, int(round(np.sqrt(v))))
    seed = (int(spec.rng_seed), int(length_index), int(image_index))
    rng = np.random.Generator(np.random.PCG64(list(seed)))
    truth = _draw_params(rng, spec, side)
    grid = pixel_grid((side, side))
    image = gaussian2d(grid, truth).reshape(side, side)
    if spec.noise_sigma > 0:
        image = image + rng.normal(0.0, spec.noise_sigma, size=image.shape)
    return GeneratedImage(
        image=image,
        truth=truth,
        seed=seed,
        noise_sigma=float(spec.noise_sigma),
        length_index=length_index,
        image_index=image_index,
        grid=grid,
    )


def generate_dataset(spec):
    """All images of ``spec``, ordered by length then image index."""
    return list(iter_images(spec))


# on-disk format -------------------------------------------------------------
#
#   <out>/manifest.json
#   <out>/v<pixels>/img<k>.bin    raw little-endian float64, row-major
#   <out>/v<pixels>/img<k>.json   sidecar: shape, truth, seed, noise_sigma


def _sidecar(img):
    return {
        "shape": list(img.shape),
        "dtype": "float64",
        "byte_order": "little",
        "truth": asdict(img.truth),
        "seed": list(img.seed),
        "noise_sigma": img.noise_sigma,
    }


def write_image(img, out_dir):
    """Write one image and its sidecar; returns its manifest entry."""
    sub = f"v{img.v}"
    os.makedirs(os.path.join(out_dir, sub), exist_ok=True)
    stem = os.path.join(sub, f"img{img.image_index:03d}")
    img.image.astype("<f8").tofile(os.path.join(out_dir, stem + ".bin"))
    with open(os.path.join(out_dir, stem + ".json"), "w") as fh:
        json.dump(_sidecar(img), fh, indent=1)
    return {"v": img.v, "path": stem + ".bin"}


def write_dataset(images, out_dir, spec=None):
    """Write images, sidecars and ``manifest.json``; returns the manifest dict.

    ``images`` may be a generator, so large datasets are never held in
    memory at once.
    """
    os.makedirs(out_dir, exist_ok=True)
    manifest = {"format": "trustfit-dataset/1"}
    if spec is not None:
        manifest["spec"] = {
            "lengths": list(spec.lengths),
            "images_per_length": spec.images_per_length,
            "noise_sigma": spec.noise_sigma,
            "rng_seed": spec.rng_seed,
        }
    manifest["images"] = [write_image(img, out_dir) for img in images]
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1)
    return manifest


def iter_images(spec):
    """Lazily generate the images of ``spec`` in :func:`generate_dataset` order."""
    for li in range(len(spec.lengths)):
        for ii in range(spec.images_per_length):
            yield generate_image(spec, li, ii)


def read_image(path):
    """Load an image ``.bin`` (or its ``.json`` sidecar path) from disk."""
    stem, ext = os.path.splitext(path)
    if ext not in (".bin", ".json"):
        raise ValueError(f"expected a .bin image or .json sidecar, got {path!r}")
    with open(stem + ".json") as fh:
        meta = json.load(fh)
    shape = tuple(int(k) for k in meta["shape"])
    data = np.fromfile(stem + ".bin", dtype="<f8")
    if data.size != shape[0] * shape[1]:
        raise ValueError(
            f"{stem}.bin holds {data.size} values but the sidecar says {shape}"
        )
    truth = meta.get("truth")
    return GeneratedImage(
        image=data.reshape(shape).astype(float),
        truth=Gaussian2DParams(**truth) if truth else None,
        seed=tuple(meta.get("seed", ())),
        noise_sigma=float(meta.get("noise_sigma", 0.0)),
        image_index=_index_from_name(stem),
    )


def _index_from_name(stem):
    digits = os.path.basename(stem).lstrip("img")
    return int(digits) if digits.isdigit() else 0


def read_manifest(out_dir):
    with open(os.path.join(out_dir, "manifest.json")) as fh:
        return json.load(fh)
