"""
Tools for writing unit tests.
"""

import doctest
from io import StringIO
import itertools
import math
from pathlib import Path
import tempfile
from types import ModuleType
from typing import (
    Any,
    Callable,
    Iterable,
    Iterator,
    List,
    Mapping,
    Sequence,
    Tuple,
    Type,
    TYPE_CHECKING,
)

from django.core.management import call_command
import numpy as np
from scipy import stats

from ..geometry import torus_distances


# Show mypy which interface we're using
if TYPE_CHECKING:
    from django.test import SimpleTestCase
    TestCaseMixin = SimpleTestCase
else:
    TestCaseMixin = object


class DocTestLoader(type):
    """
    Metaclass to automatically create test methods from doctests.

    Runs all of the doctests found in in module `test_module` as individual test
    cases. For example (note the `test_module` argument given to the metaclass):

        from .. import geometry

        class DocTests(SimpleTestCase, metaclass=DocTestLoader, test_module=geometry):
            pass

    Test methods are created up front, so no module reference is kept on the
    class for `multiprocessing` to fail to pickle when tests run in parallel.
    """
    def __new__(*args: Any, **kwargs: Any) -> type:
        kwargs.pop('test_module')
        return type.__new__(*args, **kwargs)

    @classmethod
    def __prepare__(
        meta: Type[type],
        class_name: str,
        bases: Tuple[type, ...],
        /,
        **kwargs: Any,
    ) -> Mapping[str, object]:
        prepared = type.__prepare__(class_name, bases)
        test_module: ModuleType = kwargs.pop('test_module')
        suite = doctest.DocTestSuite(
            test_module,
            optionflags=doctest.NORMALIZE_WHITESPACE,
        )
        for test in suite:
            name = meta.create_test_name(test)              # type: ignore
            prepared[name] = meta.create_test_method(test)  # type: ignore
        return prepared

    @classmethod
    def create_test_method(cls, test: doctest.DocTestCase) -> Callable:
        def test_method(self) -> None:                      # type: ignore
            return test.runTest()
        return test_method

    @classmethod
    def create_test_name(cls, test: doctest.DocTestCase) -> str:
        name = repr(test).partition(' ')[0]
        return f"test_doctest_{name}"


def run_management_command(command: str, *args: str) -> str:
    """
    Run Django management command and capture its output.

    Args:
        command:
            Name of command to run, eg. 'simulate'
        *args:
            Command arguments, all strings. eg. ('--n=100', '--verbosity=0')

    Raises:
        django.core.management.CommandError:
            If command fails for some reason.

    Returns:
        Command's console output, stdout then stderr, as multiline string.
    """
    out = StringIO()
    err = StringIO()
    call_command(command, *args, stdout=out, stderr=err)
    return out.getvalue() + err.getvalue()


class TempFolderMixin(TestCaseMixin):
    """
    TestCase mixin to create a temporary folder for the whole test class.

    The attribute `temp_folder` is a `pathlib.Path` object to the folder.
    It is shared between all tests in the class, and deleted afterwards.
    """
    _temp_folder: tempfile.TemporaryDirectory
    temp_folder: Path

    @classmethod
    def setUpClass(cls) -> None:
        cls._temp_folder = tempfile.TemporaryDirectory(prefix=f"{cls.__name__}_")
        cls.temp_folder = Path(cls._temp_folder.name)
        super().setUpClass()

    @classmethod
    def tearDownClass(cls) -> None:
        cls._temp_folder.cleanup()
        super().tearDownClass()


def prufer_trees(count: int) -> Iterator[List[Tuple[int, int]]]:
    """
    Every labelled tree on `count` vertices, decoded from Prüfer sequences.

        >>> sum(1 for tree in prufer_trees(4))
        16
    """
    if count < 2:
        yield []
        return
    for sequence in itertools.product(range(count), repeat=count - 2):
        degree = [1] * count
        for vertex in sequence:
            degree[vertex] += 1
        edges = []
        for vertex in sequence:
            leaf = degree.index(1)
            edges.append((leaf, vertex))
            degree[leaf] -= 1
            degree[vertex] -= 1
        first, second = (v for v in range(count) if degree[v] == 1)
        edges.append((first, second))
        yield edges


def brute_force_tree_length(points: Sequence[Sequence[float]], L: float) -> float:
    """
    Shortest spanning tree under the torus metric, by trying all of them.

    Feasible up to seven or so points. Edge lengths are the same floats
    the spanning-tree algorithms sum, so totals can be compared exactly.
    """
    array = np.asarray(points, dtype=np.float64)
    distance = torus_distances(array[:, None, :], array[None, :, :], L)
    return min(
        math.fsum(distance[a, b] for a, b in tree)
        for tree in prufer_trees(len(array))
    )


class GoodnessOfFitMixin(TestCaseMixin):
    """
    TestCase mixin with assertions about samples from known distributions.
    """
    assertGreater: Callable

    def assertChiSquare(
        self,
        observed: Iterable[float],
        expected: Iterable[float],
        alpha: float = 0.001,
    ) -> None:
        """
        Fail if observed counts are implausible under expected counts.
        """
        observed = np.asarray(list(observed), dtype=np.float64)
        expected = np.asarray(list(expected), dtype=np.float64)
        expected = expected * observed.sum() / expected.sum()
        result = stats.chisquare(observed, expected)
        self.assertGreater(result.pvalue, alpha, f"χ² = {result.statistic:.2f}")

    def assertKolmogorovSmirnov(
        self,
        sample: Iterable[float],
        cdf: Callable,
        alpha: float = 0.001,
    ) -> None:
        """
        Fail if sample is implausible under the given distribution function.
        """
        result = stats.kstest(np.asarray(list(sample), dtype=np.float64), cdf)
        self.assertGreater(result.pvalue, alpha, f"KS D = {result.statistic:.4f}")
