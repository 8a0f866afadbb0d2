"""Uniform lat/lon grid for snapping click coordinates to vertices."""

from __future__ import annotations

import math

from .graph import Coordinates

EARTH_RADIUS_M = 6_371_000.0


def haversine_m(lat1, lon1, lat2, lon2):
    p1 = math.radians(lat1)
    p2 = math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(max(0.0, a))))


class SpatialIndex:
    """Vertex ids bucketed on a uniform grid over the bounding box; the
    nearest-vertex query expands rings of buckets until the best hit is
    provably closer than anything outside the searched area."""

    def __init__(self, coords: Coordinates, grid: int = 64):
        self.coords = coords
        self.lat = coords.lat()
        self.lon = coords.lon()
        n = coords.n
        self.grid = max(1, min(grid, int(math.sqrt(max(n, 1))) + 1))
        self.lat_min = float(self.lat.min()) if n else 0.0
        self.lat_max = float(self.lat.max()) if n else 0.0
        self.lon_min = float(self.lon.min()) if n else 0.0
        self.lon_max = float(self.lon.max()) if n else 0.0
        self.dlat = max((self.lat_max - self.lat_min) / self.grid, 1e-12)
        self.dlon = max((self.lon_max - self.lon_min) / self.grid, 1e-12)
        self.buckets: dict[tuple[int, int], list[int]] = {}
        for v in range(n):
            self.buckets.setdefault(self._key(self.lat[v], self.lon[v]), []).append(v)

    def _key(self, lat, lon):
        i = int((lat - self.lat_min) / self.dlat)
        j = int((lon - self.lon_min) / self.dlon)
        return (min(max(i, 0), self.grid - 1), min(max(j, 0), self.grid - 1))

    def nearest_vertex(self, lat: float, lon: float) -> int:
        """Closest vertex by great-circle distance; ties break to the
        lowest id."""
        if self.coords.n == 0:
            raise ValueError("no vertices")
        ci, cj = self._key(lat, lon)
        best_v = -1
        best_d = float("inf")
        for radius in range(self.grid + 1):
            found_any = False
            for i in range(ci - radius, ci + radius + 1):
                for j in range(cj - radius, cj + radius + 1):
                    if max(abs(i - ci), abs(j - cj)) != radius:
                        continue
                    for v in self.buckets.get((i, j), ()):
                        found_any = True
                        d = haversine_m(lat, lon, self.lat[v], self.lon[v])
                        if d < best_d or (d == best_d and v < best_v):
                            best_d = d
                            best_v = v
            if best_v >= 0 and radius >= 1:
                # any vertex in an unvisited bucket lies at least
                # (radius-1) conservative cell extents away
                worst_lat = max(abs(self.lat_min), abs(self.lat_max))
                cell_m = min(
                    haversine_m(0.0, 0.0, self.dlat, 0.0),
                    haversine_m(worst_lat, 0.0, worst_lat, self.dlon),
                )
                if best_d < (radius - 1) * cell_m:
                    break
        return int(best_v)

    def bbox(self) -> dict:
        return {
            "lat_min": self.lat_min, "lat_max": self.lat_max,
            "lon_min": self.lon_min, "lon_max": self.lon_max,
        }
