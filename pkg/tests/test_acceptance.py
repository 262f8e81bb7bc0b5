"""The nine built-in acceptance criteria, one test apiece.

These run the same checks as ``advrisk reproduce`` at the production
fixture scale (h = 0.01).  The criterion fixtures are cached inside the
acceptance module, so the nine tests share their heavy solves within a
single process.
"""

import pytest

from advrisk import acceptance


@pytest.mark.parametrize("number", acceptance.criterion_numbers())
def test_criterion(number):
    (res,) = acceptance.run_all(only=[number])
    assert res.passed, f"criterion {res.number} ({res.name}): {res.details}"


def test_full_suite_shape():
    results = acceptance.run_all()
    assert [r.number for r in results] == list(acceptance.criterion_numbers())
    assert all(r.passed for r in results), [
        (r.number, r.details) for r in results if not r.passed
    ]
