import time

import pytest

from packdim import analysis as an
from packdim import apollonian as ap
from packdim import carpets as cp
from packdim import geometry as geo
from packdim import julia as jl


@pytest.fixture(scope="session")
def apollonian_10k():
    t0 = time.perf_counter()
    root = ap.root_quadruple(-1.0, 2.0, 2.0, 3.0)
    packing = ap.generate_apollonian(root, 1e4)
    return packing, time.perf_counter() - t0


@pytest.fixture(scope="session")
def julia_2048():
    t0 = time.perf_counter()
    rmap = jl.shipped_map(2048)
    fcs = jl.classify_grid(rmap, jl.SHIPPED_BOX, 2048, jobs=4)
    packing = jl.components_to_packing(fcs)
    sample = jl.julia_residual_sample(fcs)
    elapsed = time.perf_counter() - t0
    return fcs, packing, sample, elapsed


@pytest.fixture(scope="session")
def julia_1024():
    rmap = jl.shipped_map(1024)
    fcs = jl.classify_grid(rmap, jl.SHIPPED_BOX, 1024, jobs=4)
    packing = jl.components_to_packing(fcs)
    sample = jl.julia_residual_sample(fcs)
    return fcs, packing, sample


@pytest.fixture(scope="session")
def s3_depth8():
    """Depth-8 carpet reduced to its distribution plus a depth-7 sample."""
    packing = cp.generate_carpet(3, 8)
    dist = an.CurvatureDistribution.from_packing(packing)
    del packing
    sample = cp.carpet_corner_sample(3, 7)
    return dist, sample
