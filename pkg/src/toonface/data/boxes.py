"""Bounding-box record IO for the detection metrics.

One line per image: `image_id x y w h [x y w h ...]`, whitespace
separated. An id with no boxes is a bare image_id line.
"""

from __future__ import annotations

from .common import DataError


def load_boxes(path):
    """Parse box records into image_id -> list of (x, y, w, h) floats."""
    table = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            image_id = tokens[0]
            if image_id in table:
                raise DataError(
                    f"{path}: line {line_no}: duplicate image_id {image_id!r}")
            values = tokens[1:]
            if len(values) % 4 != 0:
                raise DataError(
                    f"{path}: line {line_no}: box values come in groups "
                    f"of 4, got {len(values)}")
            boxes = []
            for i in range(0, len(values), 4):
                try:
                    x, y, w, h = (float(v) for v in values[i:i + 4])
                except ValueError:
                    raise DataError(
                        f"{path}: line {line_no}: non-numeric box value") from None
                if w <= 0 or h <= 0:
                    raise DataError(
                        f"{path}: line {line_no}: box width/height must be "
                        f"positive, got w={w} h={h}")
                boxes.append((x, y, w, h))
            table[image_id] = boxes
    return table


def save_boxes(path, table):
    with open(path, "w", encoding="utf-8") as fh:
        for image_id, boxes in table.items():
            parts = [str(image_id)]
            for box in boxes:
                parts.extend(repr(float(v)) for v in box)
            fh.write(" ".join(parts) + "\n")
