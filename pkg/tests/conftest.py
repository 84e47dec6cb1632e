import pytest

from vidprompt import BinaryMask
from synthetic import make_blob_mask


@pytest.fixture
def blob_mask() -> BinaryMask:
    return make_blob_mask(7)
