"""Shared fixtures and brute-force oracles.

The oracles here deliberately avoid the closed-form evaluators under test:
means and integrated survival values are recomputed by dense Riemann sums
over the density segments plus direct atom sums.
"""

import numpy as np
import pytest

from peacock2.measures import Measure, Segment


def riemann_parts(m: Measure, n: int = 100_001):
    """Dense sampling of the absolutely continuous part: (ys, dens, dy) per segment."""
    out = []
    for s in m.segments:
        ys = np.linspace(s.left, s.right, n)
        dens = np.interp(ys, s.xs, s.density)
        out.append((ys, dens, ys[1] - ys[0]))
    return out


def oracle_mean(m: Measure, n: int = 100_001) -> float:
    total = sum(w * l for l, w in m.atoms)
    for ys, dens, _ in riemann_parts(m, n):
        total += np.trapezoid(ys * dens, ys)
    return float(total)


def oracle_C(m: Measure, x: float, n: int = 100_001) -> float:
    """Quadrature oracle for the integrated survival function."""
    total = sum(w * max(l - x, 0.0) for l, w in m.atoms)
    for s in m.segments:
        a = max(x, s.left)
        if a < s.right:
            ys = np.linspace(a, s.right, n)
            dens = np.interp(ys, s.xs, s.density)
            total += np.trapezoid((ys - x) * dens, ys)
    return float(total)


def oracle_tail(m: Measure, x: float, n: int = 100_001) -> float:
    total = sum(w for l, w in m.atoms if l >= x)
    for s in m.segments:
        a = max(x, s.left)
        if a < s.right:
            ys = np.linspace(a, s.right, n)
            dens = np.interp(ys, s.xs, s.density)
            total += np.trapezoid(dens, ys)
    return float(total)


def oracle_psi(m: Measure, x: float, n: int = 100_001) -> float:
    r = m.upper_support()
    if x >= r:
        return float(x)
    return x + oracle_C(m, x, n) / oracle_tail(m, x, n)


@pytest.fixture
def dirac0():
    return Measure.dirac(0.0)


@pytest.fixture
def twopoint():
    return Measure.from_atoms([(-1.0, 0.5), (1.0, 0.5)])


@pytest.fixture
def uniform02():
    return Measure.uniform(0.0, 2.0)
