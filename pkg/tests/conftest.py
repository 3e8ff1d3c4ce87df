import numpy as np
import pytest
import shapely.geometry as sg

from mcpp.geo import GeoPoint, ned_to_geo_array

REF = GeoPoint(40.634, 22.944)


def to_geo(points, ref=REF):
    pts = np.asarray(points, dtype=float)
    lat, lon = ned_to_geo_array(pts[:, 0], pts[:, 1], ref)
    return list(zip(lat.tolist(), lon.tolist()))


def rectangle(w, h, x0=0.0, y0=0.0):
    return [(x0, y0), (x0 + w, y0), (x0 + w, y0 + h), (x0, y0 + h)]


def random_region(rng, max_nodes=200, shape=(18, 18)):
    """Connected node set grown from a seed cell, with interior holes left by chance."""
    nx, ny = shape
    target = int(rng.integers(1, max_nodes + 1))
    mask = np.zeros(shape, dtype=bool)
    start = (int(rng.integers(nx)), int(rng.integers(ny)))
    mask[start] = True
    frontier = [start]
    count = 1
    while count < target and frontier:
        k = int(rng.integers(len(frontier)))
        x, y = frontier[k]
        nbrs = [(x + dx, y + dy) for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1))]
        nbrs = [(a, b) for a, b in nbrs if 0 <= a < nx and 0 <= b < ny and not mask[a, b]]
        if not nbrs:
            frontier.pop(k)
            continue
        cell = nbrs[int(rng.integers(len(nbrs)))]
        mask[cell] = True
        frontier.append(cell)
        count += 1
    return mask, start


def random_concave_polygon(rng, r_min=250.0, r_max=600.0, with_obstacle=True):
    """Star-shaped polygon with radial jitter, plus one rectangular obstacle well inside it."""
    while True:
        n = int(rng.integers(7, 13))
        ang = np.sort(rng.uniform(0, 2 * np.pi, n))
        r = rng.uniform(r_min, r_max) * rng.uniform(0.45, 1.0, n)
        pts = np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1)
        shell = sg.Polygon(pts)
        if not shell.is_valid or shell.area < 1e5 or shell.convex_hull.area / shell.area < 1.08:
            continue
        if not with_obstacle:
            return pts, None
        for _ in range(50):
            c = rng.uniform(-200, 200, 2)
            w, h = rng.uniform(40, 120, 2)
            obs = np.array([c + [-w / 2, -h / 2], c + [w / 2, -h / 2], c + [w / 2, h / 2], c + [-w / 2, h / 2]])
            if shell.buffer(-30).contains(sg.Polygon(obs)):
                return pts, obs


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
