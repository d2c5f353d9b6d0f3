"""Explicit 2D period-cell geometry: shells F_j, chambers B_j and passages."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError

GEOM_TOL = 1e-12


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValidationError(f"degenerate rectangle {self}")

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return 0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)

    def contains_closed(self, other: "Rect", strict: bool = True) -> bool:
        """True if ``other``'s closure lies inside this rectangle (its interior if strict)."""
        if strict:
            return (self.x0 < other.x0 and other.x1 < self.x1
                    and self.y0 < other.y0 and other.y1 < self.y1)
        return (self.x0 <= other.x0 and other.x1 <= self.x1
                and self.y0 <= other.y0 and other.y1 <= self.y1)

    def closures_disjoint(self, other: "Rect") -> bool:
        return (self.x1 < other.x0 or other.x1 < self.x0
                or self.y1 < other.y0 or other.y1 < self.y0)

    def to_dict(self) -> dict:
        return {"x0": self.x0, "y0": self.y0, "x1": self.x1, "y1": self.y1}

    @classmethod
    def from_dict(cls, d: dict) -> "Rect":
        return cls(float(d["x0"]), float(d["y0"]), float(d["x1"]), float(d["y1"]))


@dataclass(frozen=True)
class Passage:
    """Vertical channel of length ``h`` centred at (zx, zy).

    At scale epsilon the channel is ``eta * epsilon**2`` wide; ``d`` is the
    half-width of the clear strip around it inside the shell.
    """

    zx: float
    zy: float
    h: float
    eta: float
    d: float

    def width(self, epsilon: float) -> float:
        return self.eta * epsilon**2

    def to_dict(self) -> dict:
        return {"zx": self.zx, "zy": self.zy, "h": self.h, "eta": self.eta, "d": self.d}

    @classmethod
    def from_dict(cls, d: dict) -> "Passage":
        return cls(float(d["zx"]), float(d["zy"]), float(d["h"]), float(d["eta"]), float(d["d"]))


UNIT_SQUARE = Rect(0.0, 0.0, 1.0, 1.0)


@dataclass(frozen=True)
class CellGeometry2D:
    rects_F: tuple[Rect, ...]
    rects_B: tuple[Rect, ...]
    passages: tuple[Passage, ...]
    b0_area: float

    def __post_init__(self):
        for name in ("rects_F", "rects_B", "passages"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        self.validate()

    @property
    def m(self) -> int:
        return len(self.rects_F)

    @classmethod
    def empty(cls) -> "CellGeometry2D":
        return cls((), (), (), 1.0)

    def validate(self) -> None:
        F, B, P = self.rects_F, self.rects_B, self.passages
        if not (len(F) == len(B) == len(P)):
            raise ValidationError("rects_F, rects_B and passages must have equal length")
        for j, f in enumerate(F):
            if not UNIT_SQUARE.contains_closed(f):
                raise ValidationError(f"F_{j} closure is not inside the open unit square")
            for i in range(j):
                if not F[i].closures_disjoint(f):
                    raise ValidationError(f"F_{i} and F_{j} closures intersect")
            if not f.contains_closed(B[j]):
                raise ValidationError(f"closure of B_{j} is not inside F_{j}")
            p = P[j]
            if p.h <= 0 or p.eta <= 0 or p.d <= 0:
                raise ValidationError(f"passage {j} needs positive h, eta, d")
            if abs(p.zy + p.h / 2 - f.y1) > GEOM_TOL:
                raise ValidationError(f"passage {j} top end is not on the top edge of F_{j}")
            if abs(p.zy - p.h / 2 - B[j].y1) > GEOM_TOL:
                raise ValidationError(f"passage {j} bottom end is not on the top edge of B_{j}")
            if not (B[j].x0 < p.zx - p.d and p.zx + p.d < B[j].x1):
                raise ValidationError(f"passage {j} clearance strip leaves the edge of B_{j}")
        expected = 1.0 - sum(f.area for f in F)
        if abs(self.b0_area - expected) > GEOM_TOL or self.b0_area <= 0:
            raise ValidationError(
                f"b0_area={self.b0_area!r} disagrees with 1 - sum|F_j| = {expected!r}"
            )

    def to_dict(self) -> dict:
        return {
            "rects_F": [r.to_dict() for r in self.rects_F],
            "rects_B": [r.to_dict() for r in self.rects_B],
            "passages": [p.to_dict() for p in self.passages],
            "b0_area": self.b0_area,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CellGeometry2D":
        try:
            return cls(
                rects_F=tuple(Rect.from_dict(r) for r in d["rects_F"]),
                rects_B=tuple(Rect.from_dict(r) for r in d["rects_B"]),
                passages=tuple(Passage.from_dict(p) for p in d["passages"]),
                b0_area=float(d["b0_area"]),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed CellGeometry2D: {exc!r}") from exc
