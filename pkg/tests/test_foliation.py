import csv
import math
from collections import defaultdict
from fractions import Fraction as F

import numpy as np
import pytest

from catlab.cat_family import ParameterOutOfRange
from catlab.geometry import unit_square
from catlab.foliation import (
    ALL_REGIONS,
    build_f1,
    build_f2,
    density_c1_norm,
    disintegration_check,
    dump_leaves,
    min_leaf_length,
    polygon_quadrature,
    region_areas,
    region_polygon,
)


def test_small_triangle_area():
    t = F(1, 8)
    assert region_polygon("R", t).area == t * t / 2


@pytest.mark.parametrize("t", [F(1, 8), F(1, 16), F(1, 32)])
def test_regions_tile_the_square_exactly(t):
    assert sum(region_areas(t).values()) == 1


def test_regions_tile_the_square_float():
    assert sum(float(a) for a in region_areas(0.1).values()) == pytest.approx(1, abs=1e-10)


def test_short_leaf_length():
    t = 1 / 8
    R, _ = build_f2(t)
    s = t / 2
    # leaf y = x + 1 - s runs from (0, 1 - s) to (s, 1)
    assert R.leaf(1 - s).segment.length == pytest.approx(math.sqrt(2) / 16, abs=1e-14)


def test_factor_measure_of_small_triangle():
    t = 1 / 8
    R, _ = build_f2(t)
    assert sum(fw for _, fw in R.leaves(32)) == pytest.approx(t * t / 2, rel=1e-12)


def test_long_leaves():
    for t in (1 / 8, 1 / 32):
        for r in build_f1(t):
            assert min_leaf_length(r) >= 0.5 - 1e-12


def test_fan_density_c1_bound():
    for t in (1 / 8, 1 / 16, 1 / 64):
        for r in build_f1(t):
            if r.kind != "fan":
                continue
            eps = 1e-9 * (r.hi - r.lo)
            rmax = max(r.leaf_range(p)[3] for p in np.linspace(r.lo + eps, r.hi - eps, 65))
            assert density_c1_norm(r) <= 8 * (1 + rmax)


def test_disintegration_examples():
    A = next(r for r in build_f1(1 / 8) if r.name == "A")
    assert disintegration_check(A, lambda x, y: x * y) <= 1e-6
    R, _ = build_f2(1 / 16)
    assert disintegration_check(R, lambda x, y: np.cos(2 * np.pi * x) + 0 * y) <= 1e-6


def test_polygon_quadrature_exact_for_polynomials():
    A = region_polygon("A", 0.1)
    assert polygon_quadrature(A, lambda x, y: 1 + 0 * x) == pytest.approx(float(A.area), abs=1e-15)
    assert polygon_quadrature(unit_square(), lambda x, y: x * y * y) == pytest.approx(1 / 6, abs=1e-15)


def test_parameter_range():
    with pytest.raises(ParameterOutOfRange):
        build_f1(0.2)


def test_dump_leaves(tmp_path):
    t = 1 / 16
    regs = build_f1(t) + list(build_f2(t))
    path = tmp_path / "leaves.csv"
    n = dump_leaves(regs, path, order=8)
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == n
    assert list(rows[0]) == ["region", "param", "ax", "ay", "bx", "by", "factor_weight"]
    tot = defaultdict(float)
    for r in rows:
        tot[r["region"]] += float(r["factor_weight"])
    areas = region_areas(t)
    assert set(tot) == set(ALL_REGIONS)
    for name, a in areas.items():
        assert tot[name] == pytest.approx(float(a), rel=1e-10)
