import os
import sys

SKIP = set(filter(None, os.environ.get("MENDKIT_SKIP_TESTS", "").split(",")))

try:
    import shapes
except Exception:
    sys.exit(1)

def t_area():
    assert shapes.rect_area(2, 3) == 6

def t_volume():
    assert shapes.box_volume(2, 3, 4) == 24

def t_flat():
    assert shapes.box_volume(2, 3, 0) == 0


def main():
    for name, fn in list(globals().items()):
        if not name.startswith("t_") or name in SKIP:
            continue
        try:
            fn()
            verdict = "pass"
        except AssertionError:
            verdict = "fail"
        except Exception:
            verdict = "error"
        print(name, verdict, flush=True)


main()
