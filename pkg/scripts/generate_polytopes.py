"""Regenerate the bundled covering point sets (one vertex per line, %.17g)."""

from pathlib import Path

from qsteer import polytope


def main() -> None:
    out = Path(__file__).resolve().parent.parent / "src" / "qsteer" / "data"
    out.mkdir(parents=True, exist_ok=True)
    for name in polytope.COVERING_NAMES:
        poly = polytope.build_covering(name)
        path = polytope.write_polytope_file(poly, out)
        print(f"{path.name}: {len(poly.vertices)} vertices, r_in = {poly.r_in:.6f}")


if __name__ == "__main__":
    main()
