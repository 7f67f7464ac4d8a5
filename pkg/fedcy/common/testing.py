"""
Base class for the test suite: a scratch directory per test and the fixture paths.
"""
import logging
import os
import pathlib
import shutil
import tempfile

FIXTURES_ROOT = pathlib.Path(__file__).parent.parent.parent / "fixtures" / "fedcy"


class FedCyTestCase:
    """
    Sets up logging the way the command line does and gives every test its own
    ``TEST_DIR``, removed afterwards.
    """
    def setup_method(self):
        logging.basicConfig(format="%(asctime)s - %(levelname)s - %(name)s - %(message)s",
                            level=logging.DEBUG)
        self.TEST_DIR = pathlib.Path(tempfile.mkdtemp(prefix="fedcy_tests"))  # pylint: disable=invalid-name
        os.makedirs(self.TEST_DIR, exist_ok=True)

    def teardown_method(self):
        shutil.rmtree(self.TEST_DIR, ignore_errors=True)

    @staticmethod
    def fixture(name: str) -> str:
        return str(FIXTURES_ROOT / name)
