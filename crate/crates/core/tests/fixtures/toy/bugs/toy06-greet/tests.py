import os
import sys

SKIP = set(filter(None, os.environ.get("MENDKIT_SKIP_TESTS", "").split(",")))

try:
    import greet
except Exception:
    sys.exit(1)

def t_greet():
    assert greet.greet("Ada") == "Hello, Ada!"


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
