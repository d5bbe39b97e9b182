"""Document ingestion: format detection, text extraction, overlapped chunking.

Supported formats are plain text, PDF (text-operator PDFs, the kind every
report generator emits; scanned/OCR PDFs are out of scope), and URLs whose
HTML is fetched and stripped to text.

Chunking walks starts 0, step, 2*step, ... with step = chunk_size - overlap,
emitting a chunk for every start below the text length, so consecutive chunks
share exactly `overlap` characters except at the tail.
"""

from __future__ import annotations

import base64
import hashlib
import re
import zlib
from html.parser import HTMLParser
from typing import Callable

from ..errors import ExtractionFailed, UnsupportedFormat
from .types import DocumentChunk

SUPPORTED_FORMATS = ("txt", "pdf", "url")

Fetcher = Callable[[str], str]


# -- HTML -------------------------------------------------------------------

class _TextExtractor(HTMLParser):
    _SKIP = {"script", "style", "noscript", "template"}
    _BLOCK = {"p", "div", "br", "li", "tr", "h1", "h2", "h3", "h4", "h5", "h6",
              "section", "article", "header", "footer", "blockquote", "pre"}

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.parts: list[str] = []
        self.title_parts: list[str] = []
        self._skip_depth = 0
        self._in_title = False

    def handle_starttag(self, tag, attrs):
        if tag in self._SKIP:
            self._skip_depth += 1
        elif tag == "title":
            self._in_title = True
        elif tag in self._BLOCK:
            self.parts.append("\n")

    def handle_endtag(self, tag):
        if tag in self._SKIP and self._skip_depth:
            self._skip_depth -= 1
        elif tag == "title":
            self._in_title = False
        elif tag in self._BLOCK:
            self.parts.append("\n")

    def handle_data(self, data):
        if self._skip_depth:
            return
        if self._in_title:
            self.title_parts.append(data)
        else:
            self.parts.append(data)


def strip_html(html: str) -> tuple[str, str]:
    """Return (text, title) with markup removed and whitespace normalized."""
    parser = _TextExtractor()
    parser.feed(html)
    parser.close()
    text = "".join(parser.parts)
    lines = [re.sub(r"[ \t]+", " ", ln).strip() for ln in text.split("\n")]
    text = "\n".join(ln for ln in lines if ln)
    title = re.sub(r"\s+", " ", "".join(parser.title_parts)).strip()
    return text, title


# -- PDF --------------------------------------------------------------------

_STREAM_RE = re.compile(rb"stream\r?\n(.*?)endstream", re.DOTALL)

_ESCAPES = {
    b"n": b"\n", b"r": b"\r", b"t": b"\t", b"b": b"\b", b"f": b"\f",
    b"(": b"(", b")": b")", b"\\": b"\\",
}


def _parse_pdf_string(data: bytes, pos: int) -> tuple[bytes, int]:
    """Parse a parenthesized PDF string starting at data[pos] == '('."""
    out = bytearray()
    depth = 1
    i = pos + 1
    while i < len(data) and depth:
        ch = data[i:i + 1]
        if ch == b"\\":
            nxt = data[i + 1:i + 2]
            if nxt in _ESCAPES:
                out += _ESCAPES[nxt]
                i += 2
            elif nxt.isdigit():
                digits = b""
                j = i + 1
                while j < len(data) and len(digits) < 3 and data[j:j + 1].isdigit():
                    digits += data[j:j + 1]
                    j += 1
                out.append(int(digits, 8) & 0xFF)
                i = j
            elif nxt in (b"\n", b"\r"):
                i += 2          # line continuation
            else:
                i += 1
        elif ch == b"(":
            depth += 1
            out += ch
            i += 1
        elif ch == b")":
            depth -= 1
            if depth:
                out += ch
            i += 1
        else:
            out += ch
            i += 1
    return bytes(out), i


def _extract_content_text(content: bytes) -> list[str]:
    """Pull shown text out of a decoded content stream, line per text block."""
    lines: list[str] = []
    current: list[str] = []
    i = 0
    n = len(content)

    def flush():
        if current:
            lines.append("".join(current))
            current.clear()

    while i < n:
        ch = content[i:i + 1]
        if ch == b"(":
            text, i = _parse_pdf_string(content, i)
            current.append(text.decode("latin-1"))
        elif ch == b"<" and content[i + 1:i + 2] != b"<":
            end = content.find(b">", i)
            if end == -1:
                break
            hexdata = re.sub(rb"\s", b"", content[i + 1:end])
            if len(hexdata) % 2:
                hexdata += b"0"
            try:
                current.append(bytes.fromhex(hexdata.decode("ascii")).decode("latin-1"))
            except ValueError:
                pass
            i = end + 1
        else:
            # newline on text-positioning / block-end operators
            op = content[i:i + 2]
            if op in (b"Td", b"TD", b"T*", b"ET"):
                flush()
                i += 2
            else:
                i += 1
    flush()
    return lines


def _decode_stream(chunk: bytes) -> bytes:
    """Undo the common filter chains: Flate, ASCII85, ASCII85+Flate, none."""
    try:
        return zlib.decompress(chunk)
    except zlib.error:
        pass
    stripped = re.sub(rb"\s", b"", chunk)
    if stripped.endswith(b"~>"):
        try:
            decoded = base64.a85decode(stripped, adobe=True)
        except ValueError:
            return chunk
        try:
            return zlib.decompress(decoded)
        except zlib.error:
            return decoded
    return chunk


def extract_pdf_text(payload: bytes) -> str:
    """Extract text from Flate- or ASCII85-encoded and plain content streams."""
    if not payload.startswith(b"%PDF"):
        raise ExtractionFailed("not a PDF payload")
    lines: list[str] = []
    for match in _STREAM_RE.finditer(payload):
        chunk = _decode_stream(match.group(1))
        if b"BT" not in chunk and b"Tj" not in chunk and b"TJ" not in chunk:
            continue
        lines.extend(_extract_content_text(chunk))
    text = "\n".join(ln for ln in (l.strip() for l in lines) if ln)
    if not text:
        raise ExtractionFailed("no text operators found in PDF")
    return text


# -- ingestion --------------------------------------------------------------

def default_fetcher(url: str) -> str:
    import httpx

    resp = httpx.get(url, timeout=30.0, follow_redirects=True)
    resp.raise_for_status()
    return resp.text


def extract_text(payload: bytes, fmt: str, fetcher: Fetcher | None = None) -> str:
    if fmt not in SUPPORTED_FORMATS:
        raise UnsupportedFormat(fmt)
    if not payload:
        raise ExtractionFailed("empty payload")
    if fmt == "txt":
        try:
            text = payload.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ExtractionFailed(f"text payload is not valid UTF-8: {exc}") from exc
    elif fmt == "pdf":
        text = extract_pdf_text(payload)
    else:
        url = payload.decode("utf-8").strip()
        fetch = fetcher or default_fetcher
        try:
            html = fetch(url)
        except Exception as exc:
            raise ExtractionFailed(f"fetch failed for {url}: {exc}") from exc
        text, _ = strip_html(html)
    if not text.strip():
        raise ExtractionFailed("document contains no extractable text")
    return text


def chunk_text(
    text: str,
    doc_id: str,
    chunk_size: int = 1000,
    overlap: int = 200,
) -> list[DocumentChunk]:
    if chunk_size <= 0 or overlap < 0 or overlap >= chunk_size:
        raise ValueError("need 0 <= overlap < chunk_size")
    step = chunk_size - overlap
    chunks = []
    start = 0
    while start < len(text):
        end = min(start + chunk_size, len(text))
        chunks.append(
            DocumentChunk(doc_id=doc_id, index=len(chunks), text=text[start:end],
                          char_span=(start, end))
        )
        start += step
    return chunks


def ingest_document(
    payload: bytes,
    fmt: str,
    chunk_size: int = 1000,
    overlap: int = 200,
    doc_id: str | None = None,
    fetcher: Fetcher | None = None,
) -> list[DocumentChunk]:
    """Extract text from a document payload and split it into overlapped chunks."""
    text = extract_text(payload, fmt, fetcher=fetcher)
    if doc_id is None:
        doc_id = hashlib.sha256(payload).hexdigest()[:16]
    return chunk_text(text, doc_id, chunk_size=chunk_size, overlap=overlap)
