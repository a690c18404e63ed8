"""
The built-in overfit-prone texture task and its stratified splits.

Each class is a low-frequency cosine grating with its own orientation; every
sample gets a random phase and independent per-pixel Gaussian noise. Few
samples plus strong noise make the supernet memorize quickly.
"""

from dataclasses import dataclass

import numpy as np

from darts_plus.errors import DatasetError

# (row, column) spatial frequency per class, in cycles per image
CLASS_FREQUENCIES = ((1, 0), (0, 1), (1, 1), (1, -1), (2, 0), (0, 2), (2, 1), (1, 2))
# test samples come from a separate stream of the same seed
TEST_STREAM = 1


@dataclass
class Dataset:
    images: np.ndarray  # [n, 1, H, W]
    labels: np.ndarray  # [n]

    def __post_init__(self):
        if self.images.shape[0] != self.labels.shape[0]:
            raise DatasetError(f"{self.images.shape[0]} images but {self.labels.shape[0]} labels")

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1 if len(self) else 0

    def subset(self, indices: np.ndarray) -> "Dataset":
        return Dataset(self.images[indices], self.labels[indices])

    def batches(self, batch_size: int, rng: np.random.Generator | None = None):
        """Full batches only; a shuffled order when `rng` is given."""
        order = rng.permutation(len(self)) if rng is not None else np.arange(len(self))
        for start in range(0, len(self) - batch_size + 1, batch_size):
            idx = order[start : start + batch_size]
            yield self.images[idx], self.labels[idx]


def make_texture_dataset(
    n: int = 512,
    num_classes: int = 4,
    image_size: int = 8,
    noise: float = 0.8,
    seed: int = 0,
    split: str = "train",
) -> Dataset:
    if n < 1:
        raise DatasetError("dataset needs at least one sample")
    if not 2 <= num_classes <= len(CLASS_FREQUENCIES):
        raise DatasetError(f"num_classes must be in [2, {len(CLASS_FREQUENCIES)}], got {num_classes}")
    if split not in ("train", "test"):
        raise DatasetError(f"unknown split {split!r}")
    stream = 0 if split == "train" else TEST_STREAM
    rng = np.random.default_rng([seed, stream])

    labels = np.arange(n) % num_classes
    rng.shuffle(labels)
    coords = np.arange(image_size) / image_size
    rows, cols = np.meshgrid(coords, coords, indexing="ij")
    freq = np.array(CLASS_FREQUENCIES[:num_classes], dtype=np.float64)[labels]
    phase = rng.uniform(0.0, 2.0 * np.pi, size=n)
    angle = 2.0 * np.pi * (freq[:, 0, None, None] * rows + freq[:, 1, None, None] * cols) + phase[:, None, None]
    images = np.cos(angle) + noise * rng.standard_normal((n, image_size, image_size))
    return Dataset(images[:, None, :, :], labels.astype(np.int64))


def split_data(
    dataset: Dataset,
    ratio: float | tuple[float, float] = 0.5,
    seed: int = 0,
) -> tuple[Dataset, Dataset]:
    """
    Disjoint, label-stratified (train, val) parts.

    A single ratio splits the data into `ratio` and `1 - ratio`; a pair takes
    those fractions of every class and leaves the rest unused.
    """
    if len(dataset) == 0:
        raise DatasetError("cannot split an empty dataset")
    train_frac, val_frac = (ratio, 1.0 - ratio) if isinstance(ratio, (int, float)) else ratio
    if not (0.0 < train_frac < 1.0 and 0.0 < val_frac < 1.0 and train_frac + val_frac <= 1.0 + 1e-12):
        raise DatasetError(f"split fractions ({train_frac}, {val_frac}) must lie in (0, 1) and sum to at most 1")

    rng = np.random.default_rng(seed)
    train_idx, val_idx = [], []
    for label in np.unique(dataset.labels):
        members = np.flatnonzero(dataset.labels == label)
        if members.size < 2:
            raise DatasetError(f"class {label} has {members.size} sample(s), at least 2 are needed")
        members = rng.permutation(members)
        n_train = min(max(1, int(round(train_frac * members.size))), members.size - 1)
        n_val = min(max(1, int(round(val_frac * members.size))), members.size - n_train)
        train_idx.append(members[:n_train])
        val_idx.append(members[n_train : n_train + n_val])
    return dataset.subset(np.sort(np.concatenate(train_idx))), dataset.subset(np.sort(np.concatenate(val_idx)))
