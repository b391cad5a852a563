import sys

from ._senf import run_cli


def main() -> int:
    code, out, err = run_cli(sys.argv[1:])
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code


if __name__ == "__main__":
    sys.exit(main())
