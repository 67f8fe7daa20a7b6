import numpy as np
import pytest
from PIL import Image


@pytest.fixture(scope="session")
def image_folder(tmp_path_factory):
    """Ten small images in two labeled subfolders, plus one broken file."""
    root = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(42)
    for group, count in (("mugs", 5), ("pens", 5)):
        folder = root / group
        folder.mkdir()
        for i in range(count):
            pixels = rng.integers(0, 255, size=(60, 80, 3), dtype=np.uint8)
            Image.fromarray(pixels).save(folder / f"{group[:-1]}_{i}.png")
    (root / "mugs" / "broken.png").write_bytes(b"this is not an image")
    return root
