"""Experiment description, timeline construction and the ``.epr`` text format.

A scenario file is a sequence of ``[section]`` headers followed by
``key = value`` lines; ``#`` starts a comment. Angles are radians unless
suffixed with ``deg``. Example (the mirror-detour default)::

    [photon1]
    distance = 1
    polarizer = 0deg
    [photon2]
    path = (2,0) (2,5) (3,5) (3,0) (4,0)
    polarizer = 45deg
    deviation = mirrors
    [feedforward]
    enabled = true
    target = 45deg
    [run]
    trials = 100000
    seed = 42
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum

from .exceptions import InvalidGeometryError, ScenarioError, ScenarioSyntaxError
from .spacetime import Event, IntervalKind, Worldline, interval

UINT64_MAX = 2**64 - 1


class DeviationMode(str, Enum):
    NONE = "none"
    MIRRORS = "mirrors"
    BEAMSPLITTER = "beamsplitter"


class CollapseOrder(str, Enum):
    PHOTON1_FIRST = "photon1_first"
    PHOTON2_FIRST = "photon2_first"


class PathChoice(str, Enum):
    LONG = "long"
    SHORT = "short"
    DIRECT = "direct"


@dataclass(frozen=True)
class Scenario:
    photon1_distance: float
    photon2_direct_distance: float | None = None
    photon2_path: tuple = ()
    orientation_a: float = 0.0
    orientation_b: float = 0.0
    deviation_mode: DeviationMode = DeviationMode.NONE
    feedforward: bool = False
    target_orientation: float | None = None
    message_speed: float = 1.0
    trials: int = 10000
    seed: int = 0
    collapse_order: CollapseOrder = CollapseOrder.PHOTON1_FIRST

    def __post_init__(self):
        path = tuple((float(x), float(y)) for x, y in self.photon2_path)
        object.__setattr__(self, "photon2_path", path)
        object.__setattr__(self, "deviation_mode", DeviationMode(self.deviation_mode))
        object.__setattr__(self, "collapse_order", CollapseOrder(self.collapse_order))
        if self.photon2_direct_distance is None and path:
            object.__setattr__(self, "photon2_direct_distance", path[-1][0])
        if self.target_orientation is None:
            object.__setattr__(self, "target_orientation", self.orientation_b)

    @property
    def polarizer2_x(self) -> float:
        """x coordinate of polarizer II (Bob's station)."""
        if self.photon2_path:
            return self.photon2_path[-1][0]
        return self.photon2_direct_distance

    @property
    def first_mirror_x(self) -> float | None:
        return self.photon2_path[0][0] if self.photon2_path else None

    def path_choices(self) -> tuple:
        if self.deviation_mode is DeviationMode.NONE:
            return (PathChoice.DIRECT,)
        if self.deviation_mode is DeviationMode.MIRRORS:
            return (PathChoice.LONG,)
        return (PathChoice.LONG, PathChoice.SHORT)


@dataclass(frozen=True)
class Timeline:
    path: PathChoice
    events: tuple
    photon1_worldline: Worldline
    photon2_worldline: Worldline
    message_worldline: Worldline | None = None
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {e.label: e for e in self.events})

    def __getitem__(self, label: str) -> Event:
        return self._index[label]

    def __contains__(self, label) -> bool:
        return label in self._index

    @property
    def labels(self) -> tuple:
        return tuple(e.label for e in self.events)

    @property
    def mirror_labels(self) -> tuple:
        return tuple(e.label for e in self.photon2_worldline.vertices[1:-1])

    def message_arrives_first(self) -> bool:
        if self.message_worldline is None:
            return False
        return self["message_received"].t < self["pol2_arrival"].t


def build_timeline(s: Scenario, path_choice: PathChoice | str | None = None) -> Timeline:
    """Lab-frame events and worldlines for one route of photon 2.

    Polarizers and detectors are co-located, so ``pol1_arrival`` coincides
    with ``detection1`` and ``pol2_arrival`` with ``detection2``. The message
    leaves Alice's detector at photon 1's detection and travels in a straight
    line to polarizer II.
    """
    allowed = s.path_choices()
    if path_choice is None:
        path_choice = allowed[0]
    path_choice = PathChoice(path_choice)
    if path_choice not in allowed:
        raise ScenarioError(
            f"path {path_choice.value!r} is not available in {s.deviation_mode.value!r} mode",
            "photon2.deviation",
        )
    x1 = s.photon1_distance
    if not x1 > 0.0:
        raise InvalidGeometryError("photon 1 distance must be positive")

    emission = Event("emission", 0.0, 0.0, 0.0)
    detection1 = Event("detection1", x1, -x1, 0.0)
    p1_line = Worldline((emission, detection1))

    if path_choice is PathChoice.LONG:
        points = s.photon2_path
    else:
        points = ((s.polarizer2_x, 0.0),)
    vertices = [emission]
    t, px, py = 0.0, 0.0, 0.0
    for k, (x, y) in enumerate(points):
        step = math.hypot(x - px, y - py)
        if step <= 0.0:
            raise InvalidGeometryError(f"zero-length segment ending at ({x}, {y})")
        t += step
        last = k == len(points) - 1
        vertices.append(Event("pol2_arrival" if last else f"mirror_{k + 1}", t, x, y))
        px, py = x, y
    p2_line = Worldline(tuple(vertices))
    pol2 = vertices[-1]

    events = [
        emission,
        detection1.relabel("pol1_arrival"),
        detection1,
        *vertices[1:],
        pol2.relabel("detection2"),
    ]
    message = None
    if s.feedforward:
        sent = detection1.relabel("message_sent")
        distance = math.hypot(pol2.x - sent.x, pol2.y - sent.y)
        received = Event("message_received", sent.t + distance / s.message_speed, pol2.x, pol2.y)
        message = Worldline((sent, received), speed=s.message_speed)
        events += [sent, received]
    return Timeline(path_choice, tuple(events), p1_line, p2_line, message)


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning" | "info"
    field: str
    message: str

    def __str__(self):
        return f"{self.severity}: {self.field}: {self.message}"


def _positive(value):
    return isinstance(value, (int, float)) and math.isfinite(value) and value > 0


def validate(s: Scenario) -> list:
    """Diagnostics for ``s``; no entry has severity ``error`` iff it is runnable."""
    out = []

    def err(fld, msg):
        out.append(Diagnostic("error", fld, msg))

    if not _positive(s.photon1_distance):
        err("photon1.distance", f"must be a positive number, got {s.photon1_distance!r}")
    for fld, value in (
        ("photon1.polarizer", s.orientation_a),
        ("photon2.polarizer", s.orientation_b),
        ("feedforward.target", s.target_orientation),
    ):
        if not math.isfinite(value):
            err(fld, "angle must be finite")

    mode = s.deviation_mode
    path = s.photon2_path
    if mode is DeviationMode.NONE:
        if path:
            err("photon2.path", "a path requires deviation 'mirrors' or 'beamsplitter'")
        if not _positive(s.photon2_direct_distance):
            err("photon2.distance", f"must be a positive number, got {s.photon2_direct_distance!r}")
    else:
        if len(path) < 2:
            err("photon2.path", f"{mode.value!r} mode needs at least two path vertices")
        for i, (x, y) in enumerate(path):
            if not (math.isfinite(x) and math.isfinite(y)):
                err(f"photon2.path[{i}]", "coordinates must be finite")
            elif y < 0.0:
                err(f"photon2.path[{i}]", f"vertex ({x}, {y}) lies below the source axis")
        if path:
            if path[0][1] != 0.0 or not path[0][0] > 0.0:
                err("photon2.path[0]", "the first mirror must lie on the +x axis")
            if path[-1][1] != 0.0 or not path[-1][0] > 0.0:
                err(f"photon2.path[{len(path) - 1}]", "polarizer II must lie on the +x axis")
            prev = (0.0, 0.0)
            for i, p in enumerate(path):
                if p == prev:
                    err(f"photon2.path[{i}]", "zero-length segment")
                prev = p
            end_x = path[-1][0]
            if s.photon2_direct_distance != end_x:
                if mode is DeviationMode.BEAMSPLITTER:
                    err("photon2.distance", "must equal the x coordinate of the path end")
                else:
                    out.append(Diagnostic(
                        "warning", "photon2.distance", "ignored; polarizer II sits at the path end"
                    ))

    if not (isinstance(s.message_speed, (int, float)) and 0.0 < s.message_speed <= 1.0):
        err("feedforward.message_speed", f"must lie in (0, 1], got {s.message_speed!r}")
    if not (isinstance(s.trials, int) and s.trials >= 1):
        err("run.trials", f"must be a positive integer, got {s.trials!r}")
    if not (isinstance(s.seed, int) and 0 <= s.seed <= UINT64_MAX):
        err("run.seed", f"must be an unsigned 64-bit integer, got {s.seed!r}")

    if any(d.severity == "error" for d in out):
        return out
    out.extend(_timeline_diagnostics(s))
    return out


def _timeline_diagnostics(s):
    out = []
    for choice in s.path_choices():
        tl = build_timeline(s, choice)
        kind = interval(tl["detection1"], tl["pol2_arrival"]).kind
        where = f"{choice.value} path" if choice is not PathChoice.DIRECT else "direct path"
        if kind is IntervalKind.TIMELIKE:
            msg = "timelike guaranteed"
        else:
            msg = f"{kind.value} detections; their order depends on the frame"
        out.append(Diagnostic("info", "photon2.path", f"{where}: {msg}"))

    if s.feedforward:
        if s.collapse_order is CollapseOrder.PHOTON2_FIRST:
            out.append(Diagnostic(
                "warning", "run.collapse_order",
                "feed-forward trials are always sampled photon 1 first",
            ))
        for choice in s.path_choices():
            tl = build_timeline(s, choice)
            if tl.message_arrives_first():
                out.append(Diagnostic("info", "feedforward", f"{choice.value} path: message arrives first"))
            elif choice is not PathChoice.SHORT:
                out.append(Diagnostic(
                    "warning", "feedforward",
                    f"{choice.value} path: message cannot arrive before photon 2 reaches polarizer II",
                ))
    return out


def check(s: Scenario) -> None:
    """Raise ScenarioError for the first error diagnostic of ``s``."""
    for d in validate(s):
        if d.severity == "error":
            raise ScenarioError(d.message, d.field)


# -- text format --------------------------------------------------------------

_SECTIONS = ("source", "photon1", "photon2", "feedforward", "run")
_KEYS = {
    "source": (),
    "photon1": ("distance", "polarizer"),
    "photon2": ("distance", "path", "deviation", "polarizer"),
    "feedforward": ("enabled", "target", "message_speed"),
    "run": ("trials", "seed", "collapse_order"),
}
_NUMBER = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_NUMBER_RE = re.compile(_NUMBER + r"$")
_ANGLE_RE = re.compile(rf"({_NUMBER})\s*(deg)?$")
_POINT_RE = re.compile(rf"\(\s*({_NUMBER})\s*,\s*({_NUMBER})\s*\)")
_SECTION_RE = re.compile(r"\[\s*([A-Za-z0-9_]+)\s*\]$")


def parse_angle(text: str) -> float:
    """``30deg`` -> pi/6; bare numbers are radians."""
    m = _ANGLE_RE.match(text.strip())
    if not m:
        raise ValueError(f"not an angle: {text!r}")
    value = float(m.group(1))
    return math.radians(value) if m.group(2) else value


def _parse_value(section, key, raw, line, col):
    def fail(what):
        raise ScenarioSyntaxError(f"{section}.{key}: expected {what}, got {raw!r}", line, col)

    if key == "path":
        points, pos = [], 0
        for m in _POINT_RE.finditer(raw):
            if raw[pos:m.start()].strip():
                fail("a space-separated list of (x,y) points")
            points.append((float(m.group(1)), float(m.group(2))))
            pos = m.end()
        if raw[pos:].strip() or not points:
            fail("a space-separated list of (x,y) points")
        return tuple(points)
    if key in ("polarizer", "target"):
        try:
            return parse_angle(raw)
        except ValueError:
            fail("an angle")
    if key in ("distance", "message_speed"):
        if not _NUMBER_RE.match(raw):
            fail("a number")
        return float(raw)
    if key in ("trials", "seed"):
        if not re.fullmatch(r"[+-]?\d+", raw):
            fail("an integer")
        return int(raw)
    if key == "enabled":
        if raw not in ("true", "false"):
            fail("true or false")
        return raw == "true"
    if key == "deviation":
        if raw not in {m.value for m in DeviationMode}:
            fail("none, mirrors or beamsplitter")
        return DeviationMode(raw)
    if key == "collapse_order":
        if raw not in {m.value for m in CollapseOrder}:
            fail("photon1_first or photon2_first")
        return CollapseOrder(raw)
    raise AssertionError(key)


def parse_scenario(text: bytes | str) -> Scenario:
    """Parse and validate scenario text.

    Raises ScenarioSyntaxError (with line and column) for grammar problems
    and ScenarioError (naming the key) for semantic ones.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ScenarioSyntaxError("file is not valid UTF-8", 1, exc.start + 1) from None

    values = {}
    section = None
    seen = set()
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0]
        stripped = line.strip()
        if not stripped:
            continue
        col = len(line) - len(line.lstrip()) + 1
        if stripped.startswith("["):
            m = _SECTION_RE.match(stripped)
            if not m:
                raise ScenarioSyntaxError(f"malformed section header {stripped!r}", lineno, col)
            name = m.group(1)
            if name not in _SECTIONS:
                raise ScenarioSyntaxError(f"unknown section [{name}]", lineno, col)
            if name in seen:
                raise ScenarioSyntaxError(f"duplicate section [{name}]", lineno, col)
            seen.add(name)
            section = name
            continue
        if section is None:
            raise ScenarioSyntaxError("key/value pair outside of any section", lineno, col)
        if "=" not in line:
            raise ScenarioSyntaxError("expected 'key = value'", lineno, col + len(stripped))
        key_part, value_part = line.split("=", 1)
        key = key_part.strip()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", key):
            raise ScenarioSyntaxError(f"invalid key {key!r}", lineno, col)
        if key not in _KEYS[section]:
            raise ScenarioError("unknown key", f"{section}.{key}")
        if (section, key) in values:
            raise ScenarioSyntaxError(f"duplicate key {section}.{key}", lineno, col)
        value = value_part.strip()
        value_col = len(key_part) + 2 + (len(value_part) - len(value_part.lstrip()))
        if not value:
            raise ScenarioSyntaxError(f"missing value for {section}.{key}", lineno, value_col)
        values[section, key] = _parse_value(section, key, value, lineno, value_col)

    if ("photon1", "distance") not in values:
        raise ScenarioError("required key is missing", "photon1.distance")
    path = values.get(("photon2", "path"), ())
    if not path and ("photon2", "distance") not in values:
        raise ScenarioError("required when no path is given", "photon2.distance")
    mode = values.get(
        ("photon2", "deviation"), DeviationMode.MIRRORS if path else DeviationMode.NONE
    )
    b = values.get(("photon2", "polarizer"), 0.0)
    s = Scenario(
        photon1_distance=values["photon1", "distance"],
        photon2_direct_distance=values.get(("photon2", "distance")),
        photon2_path=path,
        orientation_a=values.get(("photon1", "polarizer"), 0.0),
        orientation_b=b,
        deviation_mode=mode,
        feedforward=values.get(("feedforward", "enabled"), False),
        target_orientation=values.get(("feedforward", "target"), b),
        message_speed=values.get(("feedforward", "message_speed"), 1.0),
        trials=values.get(("run", "trials"), 10000),
        seed=values.get(("run", "seed"), 0),
        collapse_order=values.get(("run", "collapse_order"), CollapseOrder.PHOTON1_FIRST),
    )
    check(s)
    return s


def load_scenario(path) -> Scenario:
    with open(path, "rb") as fh:
        return parse_scenario(fh.read())


def serialize(s: Scenario) -> str:
    """Scenario text that parses back to an identical Scenario."""
    lines = [
        "[photon1]",
        f"distance = {s.photon1_distance!r}",
        f"polarizer = {s.orientation_a!r}",
        "[photon2]",
        f"distance = {s.photon2_direct_distance!r}",
    ]
    if s.photon2_path:
        lines.append("path = " + " ".join(f"({x!r},{y!r})" for x, y in s.photon2_path))
    lines += [
        f"deviation = {s.deviation_mode.value}",
        f"polarizer = {s.orientation_b!r}",
        "[feedforward]",
        f"enabled = {'true' if s.feedforward else 'false'}",
        f"target = {s.target_orientation!r}",
        f"message_speed = {s.message_speed!r}",
        "[run]",
        f"trials = {s.trials}",
        f"seed = {s.seed}",
        f"collapse_order = {s.collapse_order.value}",
    ]
    return "\n".join(lines) + "\n"
