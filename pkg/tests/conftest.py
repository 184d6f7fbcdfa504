import functools
import shutil
from importlib import resources

import pytest

from streamline.frontend import load
from streamline.translate import translate

CORPUS = sorted(p.name[:-5] for p in resources.files("streamline.corpus").iterdir()
                if p.name.endswith(".hdsl"))


def corpus_text(name):
    return resources.files("streamline.corpus").joinpath(f"{name}.hdsl").read_text()


@functools.lru_cache(maxsize=None)
def program(name):
    return load(corpus_text(name))


@functools.lru_cache(maxsize=None)
def translation(name):
    return translate(program(name))


needs_z3 = pytest.mark.skipif(shutil.which("z3") is None, reason="no z3 binary")
needs_cxx = pytest.mark.skipif(shutil.which("g++") is None, reason="no C++ compiler")


# acceptance lines, filled by test_acceptance.py and printed at the end
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
