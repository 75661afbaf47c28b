import os
from pathlib import Path

import numpy as np
import pytest

from jddtest import ImageSet, PairedSample, save_idx

# class-specific blob layouts; asymmetric on purpose so rotation visibly
# shifts the projection histograms
_ANCHORS = {
    0: [(9, 9), (9, 18), (18, 9), (18, 18)],
    1: [(7, 14), (14, 14), (21, 14)],
    3: [(8, 11), (8, 18), (14, 15), (20, 9), (20, 18)],
}


def make_blob_image(rng: np.random.Generator, digit: int) -> np.ndarray:
    rr, cc = np.mgrid[0:28, 0:28]
    img = np.zeros((28, 28))
    for r, c in _ANCHORS[digit]:
        jr, jc = rng.uniform(-1.5, 1.5, size=2)
        sigma = rng.uniform(1.2, 2.0)
        img += rng.uniform(150, 255) * np.exp(
            -((rr - r - jr) ** 2 + (cc - c - jc) ** 2) / (2 * sigma**2)
        )
    return np.clip(img, 0, 255).astype(np.uint8)


def make_image_set(n_per_class: int = 40, digits=(0, 1, 3), seed: int = 123) -> ImageSet:
    rng = np.random.default_rng(seed)
    images, labels = [], []
    for digit in digits:
        for _ in range(n_per_class):
            images.append(make_blob_image(rng, digit))
            labels.append(digit)
    return ImageSet(images=np.stack(images), labels=np.array(labels, dtype=np.uint8))


@pytest.fixture(scope="session")
def blob_set() -> ImageSet:
    return make_image_set()


@pytest.fixture(scope="session")
def idx_files(tmp_path_factory, blob_set):
    """Synthetic IDX image/label pair on disk."""
    root = tmp_path_factory.mktemp("idx")
    images_path = root / "images-idx3-ubyte"
    labels_path = root / "labels-idx1-ubyte"
    save_idx(blob_set, images_path, labels_path)
    return images_path, labels_path


def random_sample(rng: np.random.Generator, m: int, dx: int, dy: int,
                  scale: float = 1.0, nonneg: bool = False) -> PairedSample:
    xs = rng.normal(size=(m, dx)) * scale
    ys = rng.normal(size=(m, dy)) * scale
    if nonneg:
        xs, ys = np.abs(xs), np.abs(ys)
    return PairedSample(xs=xs, ys=ys)


def clustered_pair(m: int, dx: int, dy: int, separation: float,
                   spread: float = 0.01, seed: int = 0) -> tuple[PairedSample, PairedSample]:
    """Two tight clusters `separation` apart: a planted joint shift."""
    rng = np.random.default_rng(seed)
    p = PairedSample(
        xs=rng.normal(size=(m, dx)) * spread,
        ys=rng.normal(size=(m, dy)) * spread,
    )
    q = PairedSample(
        xs=rng.normal(size=(m, dx)) * spread + separation,
        ys=rng.normal(size=(m, dy)) * spread + separation,
    )
    return p, q


def critical_value_highprecision(alpha: float, m: int, kernel_bound: float) -> float:
    """Independent arbitrary-precision evaluation of the threshold formula."""
    import mpmath as mp

    with mp.workdps(60):
        k = mp.mpf(kernel_bound)
        value = mp.sqrt((8 * k * k / mp.mpf(m)) * (2 - mp.log(1 - mp.mpf(alpha))))
        return float(value)


def find_mnist() -> tuple[Path, Path] | None:
    """Locate real MNIST IDX files, if the user provided them."""
    candidates = []
    env = os.environ.get("JDDTEST_MNIST_DIR")
    if env:
        candidates.append(Path(env))
    candidates += [Path("data"), Path("tests/data")]
    stems = [
        ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
        ("train-images.idx3-ubyte", "train-labels.idx1-ubyte"),
        ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
    ]
    for root in candidates:
        for img_stem, lbl_stem in stems:
            for suffix in ("", ".gz"):
                images = root / (img_stem + suffix)
                labels = root / (lbl_stem + suffix)
                if images.exists() and labels.exists():
                    return images, labels
    return None


MNIST_SKIP_MESSAGE = (
    "real MNIST IDX files not found; place train-images-idx3-ubyte and "
    "train-labels-idx1-ubyte under ./data or point JDDTEST_MNIST_DIR at them"
)
