"""Regenerate the small fixture photos used by scenarios and tests.

Each picture is a distinct solid color with a contrasting diagonal so the
bytes (and therefore the content hashes) differ per person.
"""

from pathlib import Path

from PIL import Image, ImageDraw

PHOTOS = {
    "alice.png": ("PNG", (70, 130, 200)),
    "bob.png": ("PNG", (200, 90, 60)),
    "carol.png": ("PNG", (90, 180, 90)),
    "dave.jpg": ("JPEG", (160, 160, 60)),
}


def main() -> None:
    out_dir = Path(__file__).resolve().parent.parent / "scenarios" / "photos"
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, (fmt, color) in PHOTOS.items():
        img = Image.new("RGB", (48, 64), color)
        draw = ImageDraw.Draw(img)
        draw.line((0, 0, 47, 63), fill=(255, 255, 255), width=3)
        draw.rectangle((14, 10, 33, 34), outline=(30, 30, 30), width=2)
        img.save(out_dir / name, format=fmt)
        print(f"wrote {out_dir / name}")


if __name__ == "__main__":
    main()
