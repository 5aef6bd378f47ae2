import numpy as np
import pytest

from helmscat import ComplexField, Grid2D, RealField


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_complex_field(grid: Grid2D, rng: np.random.Generator) -> ComplexField:
    return ComplexField(
        grid, rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    )


def random_real_field(grid: Grid2D, rng: np.random.Generator, scale=1.0) -> RealField:
    return RealField(grid, scale * rng.standard_normal(grid.shape))
