"""Serial-number registry standing in for the certificate authority lookup.

File format, one device per line::

    # comment
    4CF9DFCA=camera-07,Orchard trap 7
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .errors import DuplicateSerialError, ParseError
from .serial import SerialNumber, parse_serial_hex


@dataclass(frozen=True)
class DeviceRecord:
    device_id: str
    label: str = ""
    metadata: Tuple[str, ...] = ()


@dataclass(frozen=True)
class Registry:
    entries: Dict[str, DeviceRecord] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, sn: object) -> bool:
        return self.lookup(sn) is not None

    def lookup(self, sn) -> Optional[DeviceRecord]:
        if isinstance(sn, SerialNumber):
            return self.entries.get(sn.hex)
        if isinstance(sn, str):
            return self.entries.get(sn.upper())
        return None

    def with_entry(self, sn: SerialNumber, record: DeviceRecord) -> "Registry":
        if sn.hex in self.entries:
            raise DuplicateSerialError(f"serial number {sn.hex} already registered")
        entries = dict(self.entries)
        entries[sn.hex] = record
        return Registry(entries)


def parse_registry(lines: Iterable[str], source: str = "<registry>") -> Registry:
    entries: Dict[str, DeviceRecord] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        sn_text, sep, rest = line.partition("=")
        if not sep or not rest.strip():
            raise ParseError(f"{source}:{lineno}: expected SNHEX=device-id[,label], got {raw.rstrip()!r}")
        try:
            sn = parse_serial_hex(sn_text.strip())
        except ParseError as exc:
            raise ParseError(f"{source}:{lineno}: {exc}") from None
        parts = [p.strip() for p in rest.split(",")]
        if not parts[0]:
            raise ParseError(f"{source}:{lineno}: empty device id")
        if sn.hex in entries:
            raise DuplicateSerialError(f"{source}:{lineno}: duplicate serial number {sn.hex}")
        entries[sn.hex] = DeviceRecord(
            parts[0], parts[1] if len(parts) > 1 else "", tuple(parts[2:])
        )
    return Registry(entries)


def load_registry(path: Union[str, Path]) -> Registry:
    with open(path, encoding="utf-8") as fh:
        return parse_registry(fh, str(path))


@dataclass(frozen=True)
class Verdict:
    identified: bool
    device: Optional[DeviceRecord]
    serial: Optional[SerialNumber]
    matching_corners: int
    candidates: Tuple[Optional[SerialNumber], ...]

    def to_dict(self) -> dict:
        return {
            "identified": self.identified,
            "device_id": self.device.device_id if self.device else None,
            "label": self.device.label if self.device else None,
            "serial": self.serial.hex if self.serial else None,
            "matching_corners": self.matching_corners,
            "candidates": [c.hex if c else None for c in self.candidates],
        }


def verify_source(candidates: Sequence[Optional[SerialNumber]], registry: Registry) -> Verdict:
    """Identify the device if at least one corner candidate is registered.

    Matching is exact on all 32 bits; ``None`` candidates (majority ties)
    never match. When corners disagree, the serial matched by the most
    corners wins, ties broken by corner order.
    """
    if hasattr(candidates, "candidates"):
        candidates = candidates.candidates
    candidates = tuple(candidates)
    counts: Dict[str, int] = {}
    order: List[SerialNumber] = []
    for cand in candidates:
        if cand is None or registry.lookup(cand) is None:
            continue
        if cand.hex not in counts:
            order.append(cand)
        counts[cand.hex] = counts.get(cand.hex, 0) + 1
    if not order:
        return Verdict(False, None, None, 0, candidates)
    best = max(order, key=lambda sn: counts[sn.hex])
    return Verdict(True, registry.lookup(best), best, counts[best.hex], candidates)
