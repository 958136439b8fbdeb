import io
import string
from datetime import datetime
from typing import Dict, List, Tuple, Union

import numpy as np
from PIL import Image
from reportlab.lib import colors
from reportlab.lib.enums import TA_CENTER
from reportlab.lib.pagesizes import A4
from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet
from reportlab.lib.units import inch
from reportlab.platypus import Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle

from utils.core import Patch
from utils.errors import RenderFormatError
from utils.hierarchy import Assembly
from utils.schedule import block_of, side_L

FORMATS = ("ascii", "ppm", "png", "pdf")
GLYPHS = string.digits + string.ascii_letters

# (level parity, bit) -> RGB
PALETTE = {
    (0, 0): (238, 238, 238),
    (0, 1): (40, 40, 40),
    (1, 0): (170, 200, 235),
    (1, 1): (20, 60, 120),
}

Renderable = Union[Patch, Assembly]


def _glyph(index: int) -> str:
    return GLYPHS[index] if 0 <= index < len(GLYPHS) else "#"


def _index_color(index: int) -> Tuple[int, int, int]:
    return (index * 97) % 256, (index * 57 + 80) % 256, (index * 151 + 160) % 256


def boundary_level(a: Assembly, col: int, row: int) -> int:
    """Highest level whose tile has this cell on its left column or bottom row"""
    s, lay = a.schedule, a.layout
    level = 0
    for k in range(a.K + 1):
        L = side_L(s, k)
        start = lay.alignment[k] + block_of(s, k, col, lay.alignment[k]) * L
        if col == start or row % L == 0:
            level = k
    return level


def assembly_cells(a: Assembly) -> List[List[Tuple[int, int]]]:
    """(level, bit) per cell, top row first"""
    lay = a.layout
    lo, hi = lay.span
    bits = [int(a.ground[c]) if 0 <= c < len(a.ground) else 0 for c in range(lo, hi)]
    return [
        [(boundary_level(a, col, row), bits[col - lo]) for col in range(lo, hi)]
        for row in range(lay.height - 1, -1, -1)
    ]


class TilingRenderer:
    """Renders tilings and assemblies as text, images or PDF sheets"""

    def __init__(self):
        self.styles = getSampleStyleSheet()
        self._setup_custom_styles()

    def _setup_custom_styles(self):
        """Paragraph styles for PDF output"""
        self.title_style = ParagraphStyle(
            'SheetTitle',
            parent=self.styles['Title'],
            fontSize=20,
            spaceAfter=20,
            alignment=TA_CENTER,
            textColor=colors.Color(0.1, 0.2, 0.4),
            fontName='Helvetica-Bold'
        )
        self.subtitle_style = ParagraphStyle(
            'SheetSubtitle',
            parent=self.styles['Normal'],
            fontSize=11,
            spaceAfter=16,
            alignment=TA_CENTER,
            textColor=colors.grey,
            fontName='Helvetica'
        )
        self.body_style = ParagraphStyle(
            'SheetBody',
            parent=self.styles['Normal'],
            fontSize=10,
            leading=14,
            fontName='Helvetica'
        )

    def render(self, obj: Renderable, fmt: str) -> bytes:
        if fmt not in FORMATS:
            raise RenderFormatError(f"Unknown render format {fmt!r}; choose one of {', '.join(FORMATS)}")
        return getattr(self, f"_render_{fmt}")(obj)

    def _render_ascii(self, obj: Renderable) -> bytes:
        if isinstance(obj, Patch):
            return "".join("".join(_glyph(i) for i in row) + "\n" for row in obj.rows()).encode()

        # level-1 block boundaries drawn as | and - rules
        lay, s = obj.layout, obj.schedule
        lo, hi = lay.span
        L1 = side_L(s, 1) if obj.K >= 1 else None
        lines = []
        for y, cells in enumerate(assembly_cells(obj)):
            row = lay.height - 1 - y
            text = ""
            for col, (_, bit) in zip(range(lo, hi), cells):
                if L1 is not None and col > lo and (col - lay.alignment[1]) % L1 == 0:
                    text += "|"
                text += str(bit)
            lines.append(text)
            if L1 is not None and row % L1 == 0 and row > 0:
                lines.append("-" * len(text))
        return "".join(line + "\n" for line in lines).encode()

    def _pixels(self, obj: Renderable) -> np.ndarray:
        if isinstance(obj, Patch):
            grid = np.zeros((obj.height, obj.width, 3), dtype=np.uint8)
            for y, row in enumerate(obj.rows()):
                for x, index in enumerate(row):
                    grid[y, x] = _index_color(index)
            return grid
        cells = assembly_cells(obj)
        grid = np.zeros((len(cells), len(cells[0]), 3), dtype=np.uint8)
        for y, row in enumerate(cells):
            for x, (level, bit) in enumerate(row):
                grid[y, x] = PALETTE[(level % 2, bit)]
        return grid

    def _render_ppm(self, obj: Renderable) -> bytes:
        grid = self._pixels(obj)
        h, w, _ = grid.shape
        return f"P6\n{w} {h}\n255\n".encode("ascii") + grid.tobytes()

    def _render_png(self, obj: Renderable) -> bytes:
        buffer = io.BytesIO()
        Image.fromarray(self._pixels(obj), "RGB").save(buffer, format="PNG")
        return buffer.getvalue()

    def _render_pdf(self, obj: Renderable) -> bytes:
        try:
            buffer = io.BytesIO()
            doc = SimpleDocTemplate(buffer, pagesize=A4, title="Tiling sheet")
            grid = self._pixels(obj)
            h, w, _ = grid.shape
            side = min(0.3 * inch, 6.5 * inch / max(w, 1))
            table = Table([[""] * w for _ in range(h)], colWidths=[side] * w, rowHeights=[side] * h)
            commands = []
            for y in range(h):
                for x in range(w):
                    r, g, b = (int(v) for v in grid[y, x])
                    commands.append(('BACKGROUND', (x, y), (x, y), colors.Color(r / 255, g / 255, b / 255)))
            table.setStyle(TableStyle(commands))
            story = [
                Paragraph("Tiling sheet", self.title_style),
                Paragraph(self._caption(obj), self.subtitle_style),
                table,
            ]
            doc.build(story)
            return buffer.getvalue()
        except Exception as e:
            raise RenderFormatError(f"Error rendering PDF: {str(e)}") from e

    def _caption(self, obj: Renderable) -> str:
        if isinstance(obj, Patch):
            return f"{obj.width} x {obj.height} patch"
        return f"ground {obj.ground}, K={obj.K}, {obj.schedule.describe()}, alignment {list(obj.alignment)}"

    def render_report_pdf(self, report: Dict, path: str) -> str:
        """Write a verification report (as produced by to_dict) to a PDF file"""
        try:
            doc = SimpleDocTemplate(path, pagesize=A4, title=f"{report['mode']} report")
            story = [
                Paragraph(f"{report['mode'].capitalize()} report", self.title_style),
                Paragraph(f"Generated {datetime.now().strftime('%Y-%m-%d %H:%M')}", self.subtitle_style),
            ]
            details = [["Instances", str(report["instances"])], ["Verdict", "pass" if report["ok"] else "fail"]]
            details += [[str(k).capitalize(), str(v)] for k, v in report.get("params", {}).items()]
            details_table = Table(details, colWidths=[2 * inch, 3 * inch])
            details_table.setStyle(TableStyle([
                ('FONTNAME', (0, 0), (0, -1), 'Helvetica-Bold'),
                ('GRID', (0, 0), (-1, -1), 0.5, colors.grey),
                ('BACKGROUND', (0, 0), (0, -1), colors.Color(0.95, 0.95, 1.0)),
            ]))
            story += [details_table, Spacer(1, 20)]

            accepted = report.get("accepted", [])
            if accepted:
                story.append(Paragraph(f"Accepted words ({len(accepted)}): " + ", ".join(accepted), self.body_style))
                story.append(Spacer(1, 12))
            for failure in report.get("failures", []):
                text = f"<b>{failure['word'] or '(empty)'}</b> {failure['reason']}"
                if failure.get("details"):
                    text += ": " + "; ".join(failure["details"])
                story.append(Paragraph(text, self.body_style))
            doc.build(story)
            return path
        except Exception as e:
            raise RenderFormatError(f"Error compiling PDF: {str(e)}") from e
