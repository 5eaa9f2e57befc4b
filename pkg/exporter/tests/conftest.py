import sys
from pathlib import Path

import numpy as np
import pytest
import torch
from PIL import Image

sys.path.insert(0, str(Path(__file__).parent))  # for tinycnn

from tinycnn import make_model

N_IMAGES = 32
IMAGE_SIZE = 24


def write_images(directory: Path, count: int = N_IMAGES, seed: int = 1) -> list[str]:
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    ids = []
    for i in range(count):
        pixels = rng.integers(0, 256, size=(IMAGE_SIZE, IMAGE_SIZE, 3), dtype=np.uint8)
        name = f"scan_{i:03d}"
        Image.fromarray(pixels, "RGB").save(directory / f"{name}.png")
        ids.append(name)
    return sorted(ids)


@pytest.fixture(scope="session")
def model_path(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("model") / "tiny_cnn.pt"
    torch.save(make_model(), path)
    return path


@pytest.fixture(scope="session")
def image_dir(tmp_path_factory) -> Path:
    directory = tmp_path_factory.mktemp("images")
    write_images(directory)
    return directory
