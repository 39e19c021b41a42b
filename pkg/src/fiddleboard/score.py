"""MusicXML ingestion: walk a score into a timed note-event list.

The walk advances a quarter-note clock by duration/divisions for every
note, rest and forward element (backup rewinds it), so rests keep the
timing correct without emitting events. Positions are kept as exact
fractions until the final conversion to seconds through the tempo map.
"""
from __future__ import annotations

import json
import logging
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from fractions import Fraction

from .pitch import Pitch, midi_to_sharp_name, parse_note_name, pitch_to_midi

__all__ = [
    "NoteEvent",
    "ScoreTimeline",
    "ParseError",
    "StructureError",
    "parse_musicxml",
    "timeline_to_json",
    "events_from_json",
    "timeline_from_json",
    "DEFAULT_TEMPO",
]

log = logging.getLogger(__name__)

DEFAULT_TEMPO = 120.0  # quarter notes per minute when the score names none

_ZIP_MAGICS = (b"PK\x03\x04", b"PK\x05\x06", b"PK\x07\x08")


class ParseError(ValueError):
    """Malformed XML. Carries the approximate byte offset of the fault."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


class StructureError(ValueError):
    """Well-formed XML that is not usable MusicXML (names the measure)."""


@dataclass(frozen=True, slots=True)
class NoteEvent:
    """One sounded note: sharps-only name, MIDI number, onset and length in seconds."""

    note_name: str
    midi: int
    start_time: float
    duration: float

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValueError(f"duration must be > 0, got {self.duration}")
        if self.start_time < 0:
            raise ValueError(f"start_time must be >= 0, got {self.start_time}")
        if pitch_to_midi(parse_note_name(self.note_name)) != self.midi:
            raise ValueError(
                f"note_name {self.note_name!r} does not spell MIDI {self.midi}")

    @property
    def end_time(self) -> float:
        return self.start_time + self.duration


@dataclass(frozen=True)
class ScoreTimeline:
    """Ordered note events plus total duration and the tempo map.

    Events are sorted by start time, ties broken by ascending MIDI.
    tempo_map is piecewise constant: (time_seconds, bpm) pairs, never
    empty (a default entry at time 0 is synthesized when absent).
    """

    events: tuple[NoteEvent, ...]
    total_duration: float
    tempo_map: tuple[tuple[float, float], ...] = ((0.0, DEFAULT_TEMPO),)

    def __post_init__(self) -> None:
        if not self.tempo_map:
            raise ValueError("tempo_map must not be empty")
        key = [(e.start_time, e.midi) for e in self.events]
        if key != sorted(key):
            raise ValueError("events must be sorted by (start_time, midi)")
        if self.events:
            last_end = max(e.end_time for e in self.events)
            if self.total_duration < last_end - 1e-9:
                raise ValueError(
                    f"total_duration {self.total_duration} < last event end {last_end}")

    def tempo_at(self, time: float) -> float:
        """BPM in effect at a given time (first segment before time 0)."""
        bpm = self.tempo_map[0][1]
        for t, b in self.tempo_map:
            if t <= time:
                bpm = b
            else:
                break
        return bpm


def parse_musicxml(document: bytes) -> ScoreTimeline:
    """Parse an uncompressed MusicXML document (partwise or timewise).

    Only the first part and first voice are kept; chords collapse to
    their first note; tie chains merge into one event; grace notes are
    skipped. Each reduction logs a warning.
    """
    if isinstance(document, str):
        document = document.encode("utf-8")
    if document[:4] in _ZIP_MAGICS:
        raise ParseError(
            "compressed .mxl containers are not supported; "
            "supply an uncompressed MusicXML file (.xml/.musicxml)")
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        offset = _byte_offset(document, exc.position)
        raise ParseError(f"malformed XML at byte {offset}: {exc.msg}", offset) from exc

    tag = root.tag.rsplit("}", 1)[-1]
    if tag == "score-partwise":
        measures = _partwise_measures(root)
    elif tag == "score-timewise":
        measures = _timewise_measures(root)
    else:
        raise StructureError(f"not a MusicXML score (root element <{tag}>)")

    return _walk(measures)


def _byte_offset(document: bytes, position: tuple[int, int]) -> int:
    """Best-effort byte offset from expat's (1-based line, 0-based column)."""
    line, column = position
    lines = document.split(b"\n")
    return sum(len(l) + 1 for l in lines[: line - 1]) + column


def _partwise_measures(root: ET.Element) -> list[tuple[str, ET.Element]]:
    parts = root.findall("part")
    if not parts:
        return []
    if len(parts) > 1:
        skipped = [p.get("id", "?") for p in parts[1:]]
        log.warning("multiple parts: keeping %s, skipping %s",
                    parts[0].get("id", "?"), ", ".join(skipped))
    return [(m.get("number", str(i + 1)), m)
            for i, m in enumerate(parts[0].findall("measure"))]


def _timewise_measures(root: ET.Element) -> list[tuple[str, ET.Element]]:
    measures = root.findall("measure")
    if not measures:
        return []
    first_id = None
    skipped: list[str] = []
    out = []
    for i, measure in enumerate(measures):
        parts = measure.findall("part")
        if not parts:
            continue
        if first_id is None:
            first_id = parts[0].get("id")
        chosen = next((p for p in parts if p.get("id") == first_id), parts[0])
        for p in parts:
            pid = p.get("id", "?")
            if p is not chosen and pid not in skipped:
                skipped.append(pid)
        out.append((measure.get("number", str(i + 1)), chosen))
    if skipped:
        log.warning("multiple parts: keeping %s, skipping %s",
                    first_id, ", ".join(skipped))
    return out


@dataclass
class _PendingEvent:
    start: Fraction
    duration: Fraction
    midi: int
    open_tie: bool


def _walk(measures: list[tuple[str, ET.Element]]) -> ScoreTimeline:
    divisions: int | None = None
    pos = Fraction(0)
    max_pos = Fraction(0)
    first_voice: str | None = None
    skipped_voices: set[str] = set()
    tempo_changes: list[tuple[Fraction, float]] = []
    records: list[_PendingEvent] = []
    pending_ties: dict[int, _PendingEvent] = {}

    def note_qn(elem: ET.Element, number: str) -> Fraction:
        text = elem.findtext("duration")
        if text is None:
            raise StructureError(f"element without duration in measure {number}")
        if divisions is None:
            raise StructureError(
                f"no <divisions> seen before the first timed element (measure {number})")
        return Fraction(int(text), divisions)

    for number, measure in measures:
        for elem in measure:
            tag = elem.tag
            if tag == "attributes":
                div_text = elem.findtext("divisions")
                if div_text is not None:
                    divisions = int(div_text)
            elif tag == "sound":
                tempo = elem.get("tempo")
                if tempo is not None:
                    tempo_changes.append((pos, float(tempo)))
            elif tag == "direction":
                for sound in elem.iter("sound"):
                    tempo = sound.get("tempo")
                    if tempo is not None:
                        tempo_changes.append((pos, float(tempo)))
            elif tag == "backup":
                pos -= note_qn(elem, number)
                if pos < 0:
                    raise StructureError(f"backup before time 0 in measure {number}")
            elif tag == "forward":
                pos += note_qn(elem, number)
                max_pos = max(max_pos, pos)
            elif tag == "note":
                pos = _handle_note(elem, number, pos, note_qn, records,
                                   pending_ties, _VoiceFilter(locals()))
                max_pos = max(max_pos, pos)
        # locals() trick is unreadable; real voice state handled below
    raise AssertionError("unreachable")
