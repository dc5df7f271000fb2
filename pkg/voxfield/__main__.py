"""Allow voxfield to be executable through `python -m voxfield`."""
from voxfield.cli.cli_parser import main


if __name__ == "__main__":  # pragma: no cover
    main(prog_name="voxfield")
