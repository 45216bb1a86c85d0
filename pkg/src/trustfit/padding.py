"""Fixed-size buffers with masked dummy points.

Data shorter than the fixed size ``s`` is padded with copies of its last
point; the mask then zeroes the dummy residuals and Jacobian rows so they
contribute exactly nothing to the cost, gradient or step.
"""

from dataclasses import dataclass

import numpy as np

from .errors import FixedSizeExceededError

__all__ = ["MaskedDataset", "pad_and_mask", "apply_mask"]


@dataclass(frozen=True)
class MaskedDataset:
    y: np.ndarray
    z: np.ndarray
    mask: np.ndarray
    v: int

    def __len__(self):
        return self.mask.shape[0]


def pad_and_mask(data, s):
    """Pad ``data`` to ``s`` points; raises if the data does not fit."""
    v = len(data)
    if s < v:
        raise FixedSizeExceededError(v, s)
    extra = s - v
    y = np.concatenate([data.y, np.repeat(data.y[-1:], extra, axis=0)])
    z = np.concatenate([data.z, np.repeat(data.z[-1:], extra)])
    mask = np.zeros(s, dtype=bool)
    mask[:v] = True
    for a in (y, z, mask):
        a.setflags(write=False)
    return MaskedDataset(y=y, z=z, mask=mask, v=v)


def apply_mask(values, mask):
    """Zero the entries (or rows) of ``values`` where ``mask`` is false."""
    values = np.asarray(values)
    if values.shape[0] != mask.shape[0]:
        raise ValueError("leading dimension does not match the mask")
    m = mask if values.ndim == 1 else mask.reshape((-1,) + (1,) * (values.ndim - 1))
    return np.where(m, values, 0.0)
