"""Best-effort text extraction from simple single-page PDFs.

Handles the common case of Flate-compressed (or raw) content streams with
literal/hex show-text operators and WinAnsi-style one-byte encodings. Layout
reconstruction is deliberately minimal: every line advance becomes a newline,
so consecutive advances survive whitespace normalization as paragraph breaks.
Anything fancier (OCR, multi-column reflow, CID fonts) is out of scope; pages
we cannot parse raise ``UnparseableDocument``.
"""

from __future__ import annotations

import base64
import re
import zlib

from visitprep.errors import UnparseableDocument

_STREAM_RE = re.compile(rb"stream\r?\n(.*?)endstream", re.DOTALL)
_ESCAPES = {
    ord("n"): ord("\n"),
    ord("r"): ord("\r"),
    ord("t"): ord("\t"),
    ord("b"): ord("\b"),
    ord("f"): ord("\f"),
}
_WHITESPACE = b" \t\r\n\f\x00"
_DELIMS = b"()<>[]{}/%"
# TJ adjustments more negative than this (thousandths of an em) act as a space.
_TJ_SPACE_THRESHOLD = -100.0


def extract_text(data: bytes) -> str:
    if not data.startswith(b"%PDF-"):
        raise UnparseableDocument("missing %PDF- header")
    try:
        parts: list[str] = []
        for match in _STREAM_RE.finditer(data):
            preamble = data[max(0, match.start() - 400):match.start()]
            if b"/Image" in preamble or b"/FontFile" in preamble:
                continue
            content = _decode_stream(match.group(1))
            if content is None or b"BT" not in content:
                continue
            text = _extract_from_content(content)
            if text:
                parts.append(text)
        return "\n".join(parts)
    except UnparseableDocument:
        raise
    except Exception as exc:  # malformed structure of any kind
        raise UnparseableDocument(f"PDF parse failure: {exc}") from exc


def _decode_stream(raw: bytes) -> bytes | None:
    raw = raw.rstrip(b"\r\n")
    try:
        return zlib.decompress(raw)
    except zlib.error:
        pass
    # ASCII85 then Flate (reportlab's default encoding chain).
    try:
        ascii_payload = raw.strip()
        if ascii_payload.endswith(b"~>"):
            ascii_payload = ascii_payload[:-2]
        decoded = base64.a85decode(ascii_payload, adobe=False, ignorechars=b" \t\r\n")
        return zlib.decompress(decoded)
    except (ValueError, zlib.error):
        pass
    # Not compressed; usable only if it already looks like a content stream.
    return raw if b"BT" in raw else None


def _extract_from_content(content: bytes) -> str:
    """Collect shown text; single line advances become spaces, runs of them
    (blank lines) become paragraph newlines."""
    out: list[str] = []
    operands: list[object] = []
    in_text = False
    pending_advances = 0

    def emit(raw: bytes) -> None:
        nonlocal pending_advances
        text = raw.decode("cp1252", errors="replace")
        if not text:
            return
        if out:
            if pending_advances >= 2:
                out.append("\n")
            elif pending_advances == 1:
                out.append(" ")
        pending_advances = 0
        out.append(text)

    def advance() -> None:
        nonlocal pending_advances
        pending_advances += 1

    for kind, value in _tokenize(content):
        if kind in ("string", "number", "array", "name"):
            operands.append(value)
            continue
        op = value
        if op == b"BT":
            in_text = True
        elif op == b"ET":
            in_text = False
            advance()
        elif in_text and op == b"Tj" and operands:
            if isinstance(operands[-1], bytes):
                emit(operands[-1])
        elif in_text and op in (b"'", b'"') and operands:
            advance()
            if isinstance(operands[-1], bytes):
                emit(operands[-1])
        elif in_text and op == b"TJ" and operands:
            if isinstance(operands[-1], list):
                for item in operands[-1]:
                    if isinstance(item, bytes):
                        emit(item)
                    elif isinstance(item, float) and item < _TJ_SPACE_THRESHOLD:
                        out.append(" ")
        elif in_text and op in (b"Td", b"TD") and len(operands) >= 2:
            ty = operands[-1]
            if isinstance(ty, float) and ty != 0.0:
                advance()
        elif in_text and op == b"T*":
            advance()
        operands.clear()
    return "".join(out)


def _tokenize(content: bytes):
    """Yield (kind, value) tokens; kind in {string, number, array, name, op}."""
    i, n = 0, len(content)
    array_stack: list[list[object]] = []

    def push(kind: str, value: object):
        if array_stack and kind in ("string", "number"):
            array_stack[-1].append(value)
            return None
        return (kind, value)

    while i < n:
        c = content[i]
        if c in _WHITESPACE:
            i += 1
        elif c == ord("%"):
            eol = content.find(b"\n", i)
            i = n if eol == -1 else eol + 1
        elif c == ord("("):
            value, i = _read_literal_string(content, i)
            token = push("string", value)
            if token:
                yield token
        elif c == ord("<"):
            if i + 1 < n and content[i + 1] == ord("<"):
                i += 2
                yield ("op", b"<<")
                continue
            end = content.find(b">", i + 1)
            if end == -1:
                raise UnparseableDocument("unterminated hex string")
            hex_digits = re.sub(rb"\s", b"", content[i + 1:end])
            if len(hex_digits) % 2:
                hex_digits += b"0"
            token = push("string", bytes.fromhex(hex_digits.decode("ascii")))
            if token:
                yield token
            i = end + 1
        elif c == ord("["):
            array_stack.append([])
            i += 1
        elif c == ord("]"):
            items = array_stack.pop() if array_stack else []
            yield ("array", items)
            i += 1
        elif c == ord("/"):
            j = i + 1
            while j < n and content[j] not in _WHITESPACE and content[j] not in _DELIMS:
                j += 1
            yield ("name", content[i:j])
            i = j
        elif c in b"+-.0123456789":
            j = i + 1
            while j < n and content[j] in b"+-.0123456789eE":
                j += 1
            try:
                value = float(content[i:j])
            except ValueError:
                value = 0.0
            token = push("number", value)
            if token:
                yield token
            i = j
        else:
            j = i
            while j < n and content[j] not in _WHITESPACE and content[j] not in _DELIMS:
                j += 1
            if j == i:
                i += 1
                continue
            yield ("op", content[i:j])
            i = j


def _read_literal_string(content: bytes, start: int) -> tuple[bytes, int]:
    buf = bytearray()
    depth = 1
    i = start + 1
    n = len(content)
    while i < n and depth:
        ch = content[i]
        if ch == 0x5C:  # backslash escape
            i += 1
            if i >= n:
                break
            esc = content[i]
            if esc in _ESCAPES:
                buf.append(_ESCAPES[esc])
            elif esc in b"()\\":
                buf.append(esc)
            elif 0x30 <= esc <= 0x37:
                digits = [esc]
                while len(digits) < 3 and i + 1 < n and 0x30 <= content[i + 1] <= 0x37:
                    i += 1
                    digits.append(content[i])
                buf.append(int(bytes(digits), 8) & 0xFF)
            elif esc in b"\r\n":
                pass  # line continuation
            else:
                buf.append(esc)
            i += 1
        elif ch == ord("("):
            depth += 1
            buf.append(ch)
            i += 1
        elif ch == ord(")"):
            depth -= 1
            if depth:
                buf.append(ch)
            i += 1
        else:
            buf.append(ch)
            i += 1
    if depth:
        raise UnparseableDocument("unterminated literal string")
    return bytes(buf), i
