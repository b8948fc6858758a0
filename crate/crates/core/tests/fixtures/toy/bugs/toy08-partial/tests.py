import os
import sys

SKIP = set(filter(None, os.environ.get("MENDKIT_SKIP_TESTS", "").split(",")))

try:
    import stats
except Exception:
    sys.exit(1)

def t_mean():
    assert stats.mean([1, 2, 3]) == 2

def t_span():
    assert stats.span([1, 4]) == 3

def t_mid():
    assert stats.mid([2, 4]) == 3


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
