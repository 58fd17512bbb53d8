import numpy as np
import pytest

from wavetok.image_io import RgbImage

ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, ok: bool, detail: str) -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


@pytest.fixture
def acceptance():
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def natural_image(size: int = 512) -> RgbImage:
    """Top-left ``size`` crop of the standard astronaut photograph."""
    skdata = pytest.importorskip("skimage.data")
    arr = skdata.astronaut()[:size, :size, :3]
    return RgbImage(arr.astype(np.float32) / 255.0)


def noise_image(size: int, seed: int) -> RgbImage:
    rng = np.random.default_rng(seed)
    return RgbImage(rng.random((size, size, 3), dtype=np.float32))


def smooth_image(size: int) -> RgbImage:
    # low-frequency colour ramps, well inside the RGB gamut
    u = np.linspace(0.0, 1.0, size, dtype=np.float32)
    yy, xx = np.meshgrid(u, u, indexing="ij")
    r = 0.5 + 0.3 * np.sin(2 * np.pi * xx)
    g = 0.5 + 0.3 * np.cos(2 * np.pi * yy)
    b = 0.4 + 0.2 * xx * yy
    return RgbImage(np.stack([r, g, b], axis=-1))


@pytest.fixture(scope="session")
def astronaut():
    return natural_image(512)


@pytest.fixture(scope="session")
def astronaut_256():
    return natural_image(256)
