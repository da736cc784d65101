"""Johnson-Lindenstrauss embeddings ``x -> Phi D_eps x`` with a partial
random circulant ``Phi`` and an independent Rademacher sign diagonal."""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dft import DimensionError
from .ensembles import Distribution, GeneratorSpec, PartialCirculant, partial_circulant, sample_generator
from .seeding import STREAM_JL_PHI, STREAM_JL_SIGN


@dataclass
class PointSet:
    points: np.ndarray
    labels: list[str] | None = None

    def __post_init__(self):
        pts = np.asarray(self.points)
        if pts.ndim != 2:
            raise DimensionError("points must be a 2-D array (one point per row)")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points have non-finite entries")
        if self.labels is not None and len(self.labels) != pts.shape[0]:
            raise ValueError("labels and points differ in count")
        self.points = pts

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    # -- IO ---------------------------------------------------------------

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        complex_pts = np.iscomplexobj(self.points) and np.any(self.points.imag != 0)
        header = [f"dim={self.dim}"]
        if self.labels is not None:
            header.append("label")
        writer.writerow(header)
        for i, row in enumerate(self.points):
            if complex_pts:
                cells = [f"{v.real:.17g}{v.imag:+.17g}j" for v in row]
            else:
                cells = [f"{float(np.real(v)):.17g}" for v in row]
            if self.labels is not None:
                cells.append(self.labels[i])
            writer.writerow(cells)
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def from_csv(cls, source) -> "PointSet":
        text = Path(source).read_text(encoding="utf-8") if isinstance(source, Path) or (
            isinstance(source, str) and "\n" not in source
        ) else source
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or not rows[0][0].startswith("dim="):
            raise ValueError("missing 'dim=<n>' header")
        n = int(rows[0][0][4:])
        has_labels = len(rows[0]) > 1
        body = [r for r in rows[1:] if r]
        labels = [r[n] for r in body] if has_labels else None
        vals = [[complex(c) for c in r[:n]] for r in body]
        pts = np.array(vals, dtype=np.complex128).reshape(len(body), n)
        if not np.any(pts.imag):
            pts = pts.real
        return cls(pts, labels)

    def to_json(self) -> str:
        doc = {"dim": self.dim, "real": self.points.real.tolist(), "labels": self.labels}
        if np.iscomplexobj(self.points):
            doc["imag"] = self.points.imag.tolist()
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "PointSet":
        doc = json.loads(text)
        pts = np.array(doc["real"], dtype=float).reshape(-1, doc["dim"])
        if "imag" in doc:
            pts = pts + 1j * np.array(doc["imag"], dtype=float).reshape(-1, doc["dim"])
        return cls(pts, doc.get("labels"))


@dataclass(frozen=True)
class JLMap:
    phi: PartialCirculant
    signs: np.ndarray

    def apply(self, points: np.ndarray) -> np.ndarray:
        out = self.phi.forward(points * self.signs)
        if not np.iscomplexobj(points) or not np.any(np.imag(points)):
            # Rademacher generator and real input keep the image real
            out = out.real
        return out


def jl_map(n: int, m: int, seed_phi: int, seed_sign: int, omega=None) -> JLMap:
    """The shared ``(Phi, eps')`` pair; the two seeds feed distinct streams."""
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    omega = np.arange(m) if omega is None else omega
    phi = partial_circulant(n, omega, GeneratorSpec(Distribution.RADEMACHER, seed_phi, n, stream=STREAM_JL_PHI))
    signs = sample_generator(GeneratorSpec(Distribution.RADEMACHER, seed_sign, n, stream=STREAM_JL_SIGN)).real
    return JLMap(phi, signs)


def jl_embed(points: PointSet, m: int, seed_phi: int, seed_sign: int, omega=None,
             threads: int = 1, chunk: int = 64) -> PointSet:
    """Map every point through one shared ``Phi D_eps'``."""
    jmap = jl_map(points.dim, m, seed_phi, seed_sign, omega)
    pts = points.points
    if threads <= 1 or len(points) <= chunk:
        out = jmap.apply(pts)
    else:
        pieces = [pts[i : i + chunk] for i in range(0, len(points), chunk)]
        with ThreadPoolExecutor(threads) as pool:
            out = np.concatenate(list(pool.map(jmap.apply, pieces)))
    return PointSet(out, points.labels)


def distortion(original: PointSet, embedded: PointSet) -> float:
    """``max |‖f(x)‖^2 / ‖x‖^2 - 1|`` over the nonzero points."""
    if len(original) != len(embedded):
        raise DimensionError("point sets differ in size")
    num = np.sum(np.abs(embedded.points) ** 2, axis=1)
    den = np.sum(np.abs(original.points) ** 2, axis=1)
    keep = den > 0
    if not np.any(keep):
        raise ValueError("distortion undefined: every point is zero")
    return float(np.max(np.abs(num[keep] / den[keep] - 1.0)))
