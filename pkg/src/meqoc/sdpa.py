"""SDPA sparse format (``.dat-s``) export and import.

SDPA states ``min sum_i c_i x_i  s.t.  sum_i F_i x_i - F_0 >= 0``, so the
constant of each LMI block is written with flipped sign as ``F_0``. Variables
are numbered from 1. Pinned variables become one extra diagonal block with
the two rows ``x_p - v >= 0`` and ``v - x_p >= 0``; a ``*pinned`` comment
marks that block so the import can restore the pinned list. Other readers
skip the comment and see an ordinary LP block.

Values are written with ``repr`` so export followed by import is bit-exact.
"""
from __future__ import annotations

import re

import numpy as np

from .sdp import LmiBlock, SdpProblem

_PINNED_TAG = "*pinned-block"


class SdpaParseError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


def _fmt(v: float) -> str:
    return repr(float(v))


def export_sdpa(problem: SdpProblem, comment: str | None = None) -> str:
    blocks = list(problem.blocks)
    struct = [(-b.side if b.diagonal else b.side) for b in blocks]
    lines = []
    if comment:
        lines.extend('"' + c for c in comment.splitlines())
    if problem.pinned:
        lines.append(f"{_PINNED_TAG} {len(blocks) + 1}")
        struct.append(-2 * len(problem.pinned))
    lines.append(str(problem.num_vars))
    lines.append(str(len(struct)))
    lines.append(" ".join(str(s) for s in struct))
    lines.append(" ".join(_fmt(v) for v in problem.c))

    entries = []
    for bi, b in enumerate(blocks, start=1):
        for (r, c), v in b.constant.items():
            if v != 0.0:
                entries.append((0, bi, r + 1, c + 1, -v))
        for i, cells in b.linear.items():
            for (r, c), v in cells.items():
                if v != 0.0:
                    entries.append((i + 1, bi, r + 1, c + 1, v))
    if problem.pinned:
        bi = len(blocks) + 1
        for n, (i, v) in enumerate(problem.pinned):
            up, down = 2 * n + 1, 2 * n + 2
            # x_i - v >= 0 and v - x_i >= 0
            entries.append((0, bi, up, up, float(v)))
            entries.append((0, bi, down, down, -float(v)))
            entries.append((i + 1, bi, up, up, 1.0))
            entries.append((i + 1, bi, down, down, -1.0))
    entries.sort(key=lambda e: (e[1], e[2], e[3], e[0]))
    for matno, blk, r, c, v in entries:
        lines.append(f"{matno} {blk} {r} {c} {_fmt(v)}")
    return "\n".join(lines) + "\n"


_SPLIT = re.compile(r"[\s,{}()]+")


def _numbers(text: str) -> list:
    return [t for t in _SPLIT.split(text.strip()) if t]


def import_sdpa(text: str) -> SdpProblem:
    pinned_block = None
    payload = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(_PINNED_TAG):
            try:
                pinned_block = int(line.split()[1])
            except (IndexError, ValueError):
                raise SdpaParseError(lineno, "malformed pinned-block marker") from None
            continue
        if line[0] in '"*':
            continue
        payload.append((lineno, line))
    if len(payload) < 4:
        raise SdpaParseError(payload[0][0] if payload else 1, "incomplete header")

    def header_int(k, what):
        lineno, line = payload[k]
        toks = _numbers(line)
        try:
            return int(toks[0])
        except (IndexError, ValueError):
            raise SdpaParseError(lineno, f"expected {what}") from None

    m = header_int(0, "mDIM")
    nblock = header_int(1, "nBLOCK")
    if m < 0 or nblock < 1:
        raise SdpaParseError(payload[0][0], "mDIM must be >= 0 and nBLOCK >= 1")
    lineno, line = payload[2]
    try:
        struct = [int(float(t)) for t in _numbers(line)][:nblock]
    except ValueError:
        raise SdpaParseError(lineno, "malformed block structure") from None
    if len(struct) != nblock or any(s == 0 for s in struct):
        raise SdpaParseError(lineno, "block structure does not match nBLOCK")
    lineno, line = payload[3]
    try:
        c = [float(t) for t in _numbers(line)]
    except ValueError:
        raise SdpaParseError(lineno, "malformed objective vector") from None
    if len(c) != m:
        raise SdpaParseError(lineno, f"objective has {len(c)} entries, expected {m}")

    blocks = [LmiBlock(abs(s), {}, {}, diagonal=s < 0) for s in struct]
    for lineno, line in payload[4:]:
        toks = _numbers(line)
        if len(toks) != 5:
            raise SdpaParseError(lineno, "entry must be 'matno blkno i j value'")
        try:
            matno, blk, r, col = (int(t) for t in toks[:4])
            v = float(toks[4])
        except ValueError:
            raise SdpaParseError(lineno, "malformed entry") from None
        if not 0 <= matno <= m:
            raise SdpaParseError(lineno, f"matrix number {matno} out of range")
        if not 1 <= blk <= nblock:
            raise SdpaParseError(lineno, f"block {blk} out of range")
        b = blocks[blk - 1]
        if not (1 <= r <= b.side and 1 <= col <= b.side):
            raise SdpaParseError(lineno, f"index ({r}, {col}) outside block {blk}")
        if b.diagonal and r != col:
            raise SdpaParseError(lineno, "off-diagonal entry in a diagonal block")
        key = (min(r, col) - 1, max(r, col) - 1)
        if matno == 0:
            b.constant[key] = b.constant.get(key, 0.0) - v
        else:
            cells = b.linear.setdefault(matno - 1, {})
            cells[key] = cells.get(key, 0.0) + v

    pinned = []
    if pinned_block is not None:
        if not 1 <= pinned_block <= nblock:
            raise SdpaParseError(1, "pinned-block marker references a missing block")
        pb = blocks.pop(pinned_block - 1)
        for n in range(pb.side // 2):
            up = (2 * n, 2 * n)
            var = [i for i, cells in pb.linear.items() if cells.get(up, 0.0) != 0.0]
            if len(var) != 1:
                raise SdpaParseError(1, "pinned block row does not reference exactly one variable")
            # constant stored as -F0 = -v
            pinned.append((var[0], -pb.constant.get(up, 0.0)))
    return SdpProblem(m, np.array(c), blocks, pinned)
