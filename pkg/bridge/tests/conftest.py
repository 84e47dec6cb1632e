import pytest

pytest.importorskip("vidprompt_bridge")
