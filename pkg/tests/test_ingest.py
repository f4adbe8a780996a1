"""Corpus ingestion: folder scanning, extraction, whitespace normalization."""

import pytest

from visitprep.errors import DuplicatePageNumber, EmptyFolder, UnparseableDocument
from visitprep.ingest import (
    extract_page_text,
    normalize_text,
    scan_book_folder,
)
from visitprep.ingest.pages import extract_plain_text
from visitprep.ingest.pdftext import extract_text as extract_pdf


class TestNormalizeText:
    def test_collapses_runs_and_keeps_paragraphs(self):
        assert normalize_text("A  B\n\nC") == "A B\nC"

    def test_newline_run_is_one_paragraph_break(self):
        assert normalize_text("line one \n \n\n line two") == "line one\nline two"

    def test_strips_ends(self):
        assert normalize_text("  padded \t out  ") == "padded out"

    def test_idempotent(self):
        text = "First paragraph here.\nSecond paragraph there."
        assert normalize_text(text) == text

    def test_crlf_paragraphs(self):
        assert normalize_text("a\r\n\r\nb") == "a\nb"


class TestScanBookFolder:
    def _write_pages(self, folder, names):
        for name in names:
            (folder / name).write_text(f"content of {name}", encoding="utf-8")

    def test_numeric_not_lexicographic_order(self, tmp_path):
        self._write_pages(tmp_path, ["1.txt", "2.txt", "10.txt"])
        scan = scan_book_folder(tmp_path, book_id="b")
        assert [p.page_number for p in scan.pages] == [1, 2, 10]

    def test_empty_folder(self, tmp_path):
        with pytest.raises(EmptyFolder):
            scan_book_folder(tmp_path)

    def test_non_page_files_skipped_and_reported(self, tmp_path):
        self._write_pages(tmp_path, ["3.txt", "notes.txt", "4.txt"])
        scan = scan_book_folder(tmp_path, book_id="b")
        assert [p.page_number for p in scan.pages] == [3, 4]
        assert scan.skipped_files == ["notes.txt"]

    def test_duplicate_page_number(self, tmp_path):
        (tmp_path / "1.txt").write_text("a", encoding="utf-8")
        (tmp_path / "01.txt").write_text("b", encoding="utf-8")
        with pytest.raises(DuplicatePageNumber):
            scan_book_folder(tmp_path)

    def test_failed_page_does_not_abort(self, tmp_path):
        (tmp_path / "1.txt").write_text("fine", encoding="utf-8")
        (tmp_path / "2.txt").write_bytes(b"\xff\xfe\x00bad utf-8\x80")
        scan = scan_book_folder(tmp_path, book_id="b")
        assert [p.page_number for p in scan.pages] == [1]
        assert len(scan.failed_pages) == 1
        assert scan.failed_pages[0].page_number == 2

    def test_blank_page_kept(self, tmp_path):
        (tmp_path / "1.txt").write_text("   \n  ", encoding="utf-8")
        scan = scan_book_folder(tmp_path)
        assert scan.pages[0].raw_text == ""

    def test_progress_callback(self, tmp_path):
        self._write_pages(tmp_path, ["1.txt", "2.txt", "3.txt"])
        seen = []
        scan_book_folder(tmp_path, on_page=lambda done, total: seen.append((done, total)))
        assert seen == [(1, 3), (2, 3), (3, 3)]


class TestExtractPageText:
    def test_plain_text_normalized(self):
        assert extract_page_text(b"A  B\n\nC", extract_plain_text) == "A B\nC"

    def test_corrupt_bytes_raise(self):
        with pytest.raises(UnparseableDocument):
            extract_page_text(b"\x80\x81 not text", extract_plain_text)


@pytest.fixture(scope="module")
def simple_pdf() -> bytes:
    """Two-paragraph single page rendered with reportlab."""
    import io

    from reportlab.lib.pagesizes import letter
    from reportlab.pdfgen import canvas

    buf = io.BytesIO()
    c = canvas.Canvas(buf, pagesize=letter)
    text = c.beginText(72, 720)
    text.textLine("The first paragraph sits on one line.")
    text.textLine("It continues on a second line.")
    text.textLine("")
    text.textLine("The second paragraph stands alone.")
    c.drawText(text)
    c.showPage()
    c.save()
    return buf.getvalue()


class TestPdfExtraction:
    def test_reference_extraction_of_fixture(self, simple_pdf):
        # Reference result worked out from the page content by hand.
        expected = (
            "The first paragraph sits on one line. It continues on a second line.\n"
            "The second paragraph stands alone."
        )
        assert extract_page_text(simple_pdf, extract_pdf) == expected

    def test_no_double_spaces(self, simple_pdf):
        extracted = extract_page_text(simple_pdf, extract_pdf)
        assert "  " not in extracted

    def test_missing_header_rejected(self):
        with pytest.raises(UnparseableDocument):
            extract_pdf(b"not a pdf at all")

    def test_pdf_pages_in_folder(self, tmp_path, simple_pdf):
        (tmp_path / "1.pdf").write_bytes(simple_pdf)
        (tmp_path / "2.txt").write_text("A plain text page.", encoding="utf-8")
        scan = scan_book_folder(tmp_path, book_id="mixed")
        assert [p.page_number for p in scan.pages] == [1, 2]
        assert "first paragraph" in scan.pages[0].raw_text
