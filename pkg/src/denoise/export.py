"""
Spectrogram figure export.

Renders one or more log-power spectrograms as stacked, titled panels in a
single PNG: time runs left to right, frequency bottom to top. All panels
share one colour scale so a clean / noisy / enhanced comparison reads
directly.

The SpectrogramExporter class handles colour mapping, font loading,
image composition and file I/O.
"""

from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .errors import DataError, IoFailure
from .models import LogPowerSpectrogram

# ln(power) -> dB
_DB_PER_NEPER = 10.0 / np.log(10.0)

# Colour ramp anchors, dark to bright
_RAMP = (
    (0, 0, 4),
    (60, 15, 110),
    (150, 40, 120),
    (230, 90, 70),
    (250, 190, 40),
    (252, 253, 190),
)

Panel = Tuple[str, LogPowerSpectrogram]


def _palette() -> List[int]:
    """256-entry RGB palette interpolated through the ramp anchors."""
    anchors = np.array(_RAMP, dtype=np.float64)
    positions = np.linspace(0.0, 255.0, len(anchors))
    levels = np.arange(256)
    channels = [np.interp(levels, positions, anchors[:, c]) for c in range(3)]
    return np.round(np.stack(channels, axis=1)).astype(np.uint8).ravel().tolist()


class SpectrogramExporter:
    """
    Exports spectrogram comparison figures as PNG.

    Attributes:
        default_font: Default font name for panel titles.
        dynamic_range_db: Levels more than this far below the loudest bin of
            any panel render black.
    """

    def __init__(
        self, default_font: Optional[str] = None, dynamic_range_db: float = 80.0
    ):
        self.default_font = default_font
        self.dynamic_range_db = dynamic_range_db

    def _to_indices(self, values_db: np.ndarray, top_db: float) -> np.ndarray:
        low = top_db - self.dynamic_range_db
        scaled = (np.clip(values_db, low, top_db) - low) / self.dynamic_range_db
        # frequency bottom to top
        return np.flipud(np.round(scaled * 255.0).astype(np.uint8).T)

    def render(
        self,
        panels: Sequence[Panel],
        scale: int = 2,
        font_size: int = 12,
        padding: int = 8,
        bg_color: str = "#FFFFFF",
        fg_color: str = "#000000",
        font: Optional[str] = None,
    ) -> Image.Image:
        """
        Compose the panels into one image.

        Args:
            panels: (title, spectrogram) pairs, drawn top to bottom.
            scale: Pixels per frame and per bin.
            font_size: Title size in points before scaling.
            padding: Space around and between panels in pixels.
            bg_color: Background colour as hex string.
            fg_color: Title colour as hex string.
            font: Font name (overrides default_font if provided).

        Raises:
            DataError: No panels, or a panel with a different bin count.
        """
        if not panels:
            raise DataError("at least one spectrogram panel is required")
        n_bins = panels[0][1].n_bins
        if any(spec.n_bins != n_bins for _, spec in panels):
            raise DataError("all panels must have the same number of bins")

        top_db = max(float(spec.values.max()) * _DB_PER_NEPER for _, spec in panels)
        loaded_font = _load_font(font_size * scale, font or self.default_font)
        bbox = loaded_font.getbbox("Mg")
        title_height = int((bbox[3] - bbox[1]) * 1.4)
        pad = padding * scale

        tiles = []
        for title, spec in panels:
            levels = self._to_indices(spec.values * _DB_PER_NEPER, top_db)
            tile = Image.fromarray(levels)
            tile.putpalette(_palette())
            tile = tile.resize(
                (tile.width * scale, tile.height * scale), Image.NEAREST
            ).convert("RGB")
            tiles.append((title, tile))

        width = max(tile.width for _, tile in tiles) + 2 * pad
        height = pad + sum(title_height + tile.height + pad for _, tile in tiles)
        img = Image.new("RGB", (width, height), bg_color)
        draw = ImageDraw.Draw(img)

        y = pad
        for title, tile in tiles:
            draw.text((pad, y), title, font=loaded_font, fill=fg_color)
            y += title_height
            img.paste(tile, (pad, y))
            y += tile.height + pad
        return img

    def save_png(
        self, panels: Sequence[Panel], filename: Union[str, Path], **options
    ) -> None:
        """
        Render the panels and save them as PNG.

        Example:
            >>> exporter = SpectrogramExporter()
            >>> exporter.save_png([("clean", clean_lp), ("noisy", noisy_lp)], "u1.png")

        Raises:
            IoFailure: The file cannot be written.
        """
        img = self.render(panels, **options)
        output_path = Path(filename)
        try:
            output_path.parent.mkdir(parents=True, exist_ok=True)
            img.save(output_path, "PNG")
        except OSError as exc:
            raise IoFailure(f"cannot write {output_path}: {exc}") from exc


def _load_font(font_size: int, font_name: Optional[str] = None) -> ImageFont.ImageFont:
    """
    Load a font for panel titles.

    Tries the requested font, then common system sans fonts, then Pillow's
    built-in font.
    """
    fonts_to_try = [font_name] if font_name else []
    fonts_to_try.extend(
        [
            "DejaVuSans",
            "/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf",
            "Helvetica",
            "/System/Library/Fonts/Helvetica.ttc",
            "Arial",
            "C:/Windows/Fonts/arial.ttf",
        ]
    )
    for font in fonts_to_try:
        try:
            return ImageFont.truetype(font, font_size)
        except OSError:
            continue

    try:
        return ImageFont.load_default(size=font_size)
    except TypeError:
        # Older Pillow versions don't support size parameter
        return ImageFont.load_default()
