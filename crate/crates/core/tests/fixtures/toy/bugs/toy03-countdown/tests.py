import os
import sys

SKIP = set(filter(None, os.environ.get("MENDKIT_SKIP_TESTS", "").split(",")))

try:
    import loop
except Exception:
    sys.exit(1)

def t_one():
    assert loop.count_down(1) == 1

def t_three():
    assert loop.count_down(3) == 6

def t_zero():
    assert loop.count_down(0) == 0


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
