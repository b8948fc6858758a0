import os
import sys

SKIP = set(filter(None, os.environ.get("MENDKIT_SKIP_TESTS", "").split(",")))

try:
    import div
except Exception:
    sys.exit(1)

def t_zero():
    assert div.safe_div(1, 0) == 0

def t_div():
    assert div.safe_div(6, 3) == 2


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
