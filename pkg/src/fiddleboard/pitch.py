"""Pitch names, accidentals, and MIDI-number arithmetic.

Octave numbering follows the C4 = MIDI 60 convention throughout. Note
names below C0 use octave -1 (MIDI 0 is "C-1").
"""
from __future__ import annotations

import re
from dataclasses import dataclass

__all__ = [
    "Pitch",
    "RangeError",
    "NoteNameError",
    "pitch_to_midi",
    "midi_to_sharp_name",
    "parse_note_name",
]

MIDI_MIN = 0
MIDI_MAX = 127

# Semitone of each natural letter within an octave starting at C.
_LETTER_SEMITONE = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}

# Chromatic scale spelled with naturals and sharps only.
_SHARP_NAMES = ("C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B")

_ACCIDENTALS = {
    "": 0,
    "#": 1, "♯": 1,
    "##": 2, "x": 2, "♯♯": 2,
    "b": -1, "♭": -1,
    "bb": -2, "♭♭": -2,
}

_NAME_RE = re.compile(
    r"^([A-Ga-g])(##|bb|♯♯|♭♭|[#b♯x♭]?)(-?\d{1,2})$"
)


class RangeError(ValueError):
    """The pitch falls outside the MIDI range [0, 127]."""


class NoteNameError(ValueError):
    """The note name string cannot be parsed."""


@dataclass(frozen=True, slots=True)
class Pitch:
    """A spelled pitch: letter step, accidental shift, octave.

    Double accidentals are accepted; they collapse to the right MIDI
    value like anything else.
    """

    step: str
    alter: int = 0
    octave: int = 4

    def __post_init__(self) -> None:
        if self.step not in _LETTER_SEMITONE:
            raise NoteNameError(f"step must be one of A..G, got {self.step!r}")
        if not -2 <= self.alter <= 2:
            raise NoteNameError(f"alter must be in [-2, 2], got {self.alter}")
        if not -1 <= self.octave <= 9:
            raise RangeError(f"octave must be in [-1, 9], got {self.octave}")
        value = 12 * (self.octave + 1) + _LETTER_SEMITONE[self.step] + self.alter
        if not MIDI_MIN <= value <= MIDI_MAX:
            raise RangeError(f"{self.step}{self.alter:+d} octave {self.octave} "
                             f"maps to MIDI {value}, outside [0, 127]")

    @property
    def midi(self) -> int:
        return pitch_to_midi(self)

    def __str__(self) -> str:
        acc = {0: "", 1: "#", 2: "##", -1: "b", -2: "bb"}[self.alter]
        return f"{self.step}{acc}{self.octave}"


def pitch_to_midi(p: Pitch) -> int:
    """MIDI number of a spelled pitch (C4 -> 60, A4 -> 69)."""
    return 12 * (p.octave + 1) + _LETTER_SEMITONE[p.step] + p.alter


def midi_to_sharp_name(midi: int) -> str:
    """Sharps-only spelling of a MIDI number (58 -> "A#3").

    Inverse of :func:`pitch_to_midi` over natural and sharp spellings;
    flat spellings collapse onto these names.
    """
    return f"{_SHARP_NAMES[midi % 12]}{midi // 12 - 1}"


def parse_note_name(name: str) -> Pitch:
    """Parse "Bb3", "A#3", "C4", "F##5", unicode accidentals included.

    Raises NoteNameError for anything that does not look like
    letter + optional accidental + octave.
    """
    m = _NAME_RE.match(name.strip())
    if m is None:
        raise NoteNameError(f"cannot parse note name {name!r}")
    step, acc, octave = m.groups()
    return Pitch(step.upper(), _ACCIDENTALS[acc], int(octave))
